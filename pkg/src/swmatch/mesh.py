"""Triangle meshes, discrete Laplace operators, and edge-graph geodesics."""

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DataError

# Faces thinner than this fraction of the total surface are rejected at
# construction instead of silently repaired (repair would corrupt
# ground-truth vertex indices).
DEGENERATE_AREA_REL = 1e-12


class TriMesh:
    """Validated triangle mesh with cached per-face areas.

    Vertices and faces are stored as read-only arrays; all derived
    operators are pure functions of them, so instances are safe to share
    across threads.
    """

    def __init__(self, vertices, faces):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise DataError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise DataError(f"faces must be (m, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("vertex coordinates contain non-finite values")
        n = v.shape[0]
        if f.size and (f.min() < 0 or f.max() >= n):
            bad = int(np.argmax((f < 0) | (f >= n)).item() // 3)
            raise DataError(
                f"face {bad} references vertex outside [0, {n}): {f[bad].tolist()}"
            )
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        if repeated.any():
            bad = int(np.argmax(repeated))
            raise DataError(f"face {bad} repeats a vertex: {f[bad].tolist()}")

        areas = _face_areas(v, f)
        total = float(areas.sum())
        if total <= 0.0:
            raise DataError("mesh has zero total area")
        thin = areas < DEGENERATE_AREA_REL * total
        if thin.any():
            bad = int(np.argmax(thin))
            raise DataError(
                f"face {bad} is degenerate (area {areas[bad]:.3e} "
                f"< {DEGENERATE_AREA_REL:g} x total area {total:.3e})"
            )

        graph = _edge_graph(v, f)
        n_comp, _ = csgraph.connected_components(graph, directed=False)
        if n_comp != 1:
            raise DataError(f"mesh is disconnected ({n_comp} components)")

        v.setflags(write=False)
        f.setflags(write=False)
        areas.setflags(write=False)
        self.vertices = v
        self.faces = f
        self.face_areas = areas
        self.total_area = total
        self._graph = graph

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_faces(self):
        return self.faces.shape[0]

    def edge_graph(self):
        """Sparse symmetric adjacency with Euclidean edge lengths as weights."""
        return self._graph

    def __repr__(self):
        return f"TriMesh(n={self.num_vertices}, m={self.num_faces}, area={self.total_area:.6g})"


def _face_areas(v, f):
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def _edge_graph(v, f):
    # Undirected edge list, deduplicated so multi-face edges keep one length.
    ij = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    ij = np.sort(ij, axis=1)
    ij = np.unique(ij, axis=0)
    lengths = np.linalg.norm(v[ij[:, 0]] - v[ij[:, 1]], axis=1)
    n = v.shape[0]
    g = sparse.coo_matrix(
        (np.concatenate([lengths, lengths]),
         (np.concatenate([ij[:, 0], ij[:, 1]]), np.concatenate([ij[:, 1], ij[:, 0]]))),
        shape=(n, n),
    )
    return g.tocsr()


def cotangent_laplacian(mesh):
    """Cotangent stiffness and barycentric lumped mass of a mesh.

    Returns ``(stiffness, mass)`` as sparse CSR matrices. The stiffness W
    has off-diagonal entries ``w_ij = -(cot a_ij + cot b_ij) / 2`` summed
    over the faces sharing edge (i, j) and diagonal entries equal to the
    negated row sum, so rows sum to zero and ``x^T W x >= 0``. The mass M
    is diagonal with one third of the incident face area per vertex;
    its trace equals the total surface area.

    Non-manifold edges (more than two incident faces) are accepted and
    their cotangent contributions summed.
    """
    v = mesh.vertices
    f = mesh.faces
    n = mesh.num_vertices

    # Cotangent at each corner: cot(angle at f[:, c]) weights the opposite edge.
    i_idx = []
    j_idx = []
    w_val = []
    for c in range(3):
        a, b, o = f[:, (c + 1) % 3], f[:, (c + 2) % 3], f[:, c]
        u = v[a] - v[o]
        w = v[b] - v[o]
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        cot = np.einsum("ij,ij->i", u, w) / np.maximum(cross, 1e-300)
        half = -0.5 * cot
        i_idx.extend([a, b])
        j_idx.extend([b, a])
        w_val.extend([half, half])
    i_idx = np.concatenate(i_idx)
    j_idx = np.concatenate(j_idx)
    w_val = np.concatenate(w_val)

    off = sparse.coo_matrix((w_val, (i_idx, j_idx)), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    stiffness = off + sparse.diags(diag)
    stiffness = stiffness.tocsr()

    third = mesh.face_areas / 3.0
    m_diag = np.zeros(n)
    np.add.at(m_diag, f[:, 0], third)
    np.add.at(m_diag, f[:, 1], third)
    np.add.at(m_diag, f[:, 2], third)
    mass = sparse.diags(m_diag).tocsr()
    return stiffness, mass


def geodesic_distances(mesh, sources):
    """Edge-graph shortest-path distances from ``sources`` to all vertices.

    Dijkstra over the mesh edge graph with Euclidean edge lengths. This
    overestimates true polyhedral geodesics (paths are restricted to
    edges), which is sufficient for the correspondence error metric at
    the scales this library targets. Returns a ``(len(sources), n)``
    array.
    """
    sources = np.asarray(sources, dtype=np.int64).ravel()
    n = mesh.num_vertices
    if sources.size and (sources.min() < 0 or sources.max() >= n):
        raise DataError(f"source index out of range [0, {n})")
    dist = csgraph.dijkstra(mesh.edge_graph(), directed=False, indices=sources)
    if not np.all(np.isfinite(dist)):
        raise DataError("unreachable vertex in geodesic computation")
    return dist
