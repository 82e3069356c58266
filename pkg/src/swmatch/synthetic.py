"""Deterministic synthetic test shapes: icospheres, bumpy blobs, bent pairs.

Everything here is seed-free and reproducible bit-for-bit, so shapes can be
regenerated instead of shipping large mesh files.
"""

import numpy as np

from .mesh import TriMesh

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=np.float64,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def icosphere(subdivisions=3, radius=1.0):
    """Geodesic sphere from midpoint subdivision of an icosahedron.

    ``subdivisions`` 0..4 give 12, 42, 162, 642, 2562 vertices.
    """
    verts = [tuple(p / np.linalg.norm(p)) for p in _ICO_VERTS]
    faces = _ICO_FACES.tolist()
    for _ in range(subdivisions):
        cache = {}
        index = {v: i for i, v in enumerate(verts)}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key in cache:
                return cache[key]
            p = np.asarray(verts[i]) + np.asarray(verts[j])
            p = tuple(p / np.linalg.norm(p))
            if p not in index:
                index[p] = len(verts)
                verts.append(p)
            cache[key] = index[p]
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        faces = new_faces
    v = np.asarray(verts) * radius
    return TriMesh(v, np.asarray(faces, dtype=np.int64))


# Fixed bump kernels for the asymmetric blob: (center direction, width, height).
_BLOB_BUMPS = [
    ((0.8, 0.5, 0.33), 0.35, 0.45),
    ((-0.3, 0.9, -0.3), 0.25, -0.25),
    ((0.1, -0.7, 0.7), 0.30, 0.35),
    ((-0.75, -0.4, -0.53), 0.20, 0.30),
    ((0.45, -0.2, -0.87), 0.28, -0.20),
]


def bumpy_blob(subdivisions=3, radius=1.0):
    """Asymmetric blob: icosphere with fixed Gaussian radial bumps.

    The bump layout breaks all mirror symmetries, so spectral descriptors
    are pairwise distinct and nearest-neighbor self-matching is unambiguous.
    """
    base = icosphere(subdivisions, radius=1.0)
    v = base.vertices.copy()
    r = np.ones(len(v))
    for center, width, height in _BLOB_BUMPS:
        c = np.asarray(center)
        c = c / np.linalg.norm(c)
        d2 = np.sum((v - c) ** 2, axis=1)
        r += height * np.exp(-d2 / (2.0 * width**2))
    return TriMesh(v * r[:, None] * radius, base.faces)


def mirrored_blob(subdivisions=3):
    """Blob symmetric under x -> -x, with exactly mirrored vertex pairs.

    Bump heights depend on x only through x**2, so negation maps the vertex
    set onto itself exactly in floating point.
    """
    base = icosphere(subdivisions, radius=1.0)
    v = base.vertices.copy()
    x2, y, z = v[:, 0] ** 2, v[:, 1], v[:, 2]
    r = 1.0 + 0.3 * np.exp(-((y - 0.8) ** 2 + x2) / 0.2) + 0.2 * np.exp(-((z + 0.7) ** 2) / 0.3)
    return TriMesh(v * r[:, None], base.faces)


def mirror_pairs(mesh, axis=0, tol=1e-9):
    """Index pairs (i, j) with vertex_j the reflection of vertex_i (axis sign flip).

    Only pairs with i < j are returned; on-plane vertices are skipped.
    """
    v = mesh.vertices
    flipped = v.copy()
    flipped[:, axis] = -flipped[:, axis]
    order = np.lexsort((v[:, 2], v[:, 1], v[:, 0]))
    sorted_v = v[order]
    pairs = []
    for i, q in enumerate(flipped):
        if abs(v[i, axis]) <= tol:
            continue
        lo = np.searchsorted(sorted_v[:, 0], q[0] - tol)
        hi = np.searchsorted(sorted_v[:, 0], q[0] + tol)
        for k in range(lo, hi):
            j = order[k]
            if np.all(np.abs(v[j] - q) <= tol) and i < j:
                pairs.append((i, int(j)))
    return pairs


def bend(mesh, amount=0.6, axis=0):
    """Near-isometric bend: rotate each vertex about ``axis`` by an angle
    proportional to its height along the rotation plane.

    Connectivity is preserved, so the ground-truth correspondence between
    the input and the bent copy is the identity.
    """
    v = mesh.vertices.copy()
    others = [i for i in range(3) if i != axis]
    h = v[:, others[1]]
    theta = amount * (h - h.mean())
    c, s = np.cos(theta), np.sin(theta)
    a, b = v[:, others[0]].copy(), v[:, others[1]].copy()
    v[:, others[0]] = c * a - s * b
    v[:, others[1]] = s * a + c * b
    return TriMesh(v, mesh.faces)


def triangle_chain(num_triangles, edge=1.0):
    """Planar strip of triangles in a row; geodesics along it follow edges."""
    num_points = num_triangles + 2
    v = np.zeros((num_points, 3))
    for i in range(num_points):
        v[i, 0] = (i // 2) * edge + (i % 2) * 0.5 * edge
        v[i, 1] = (i % 2) * edge * np.sqrt(3) / 2
    f = np.array([[i, i + 1, i + 2] for i in range(num_triangles)], dtype=np.int64)
    return TriMesh(v, f)


def write_off(path, mesh):
    """Plain ascii OFF writer (used to commit synthetic fixtures)."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.num_vertices} {mesh.num_faces} 0\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
