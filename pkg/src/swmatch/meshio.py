"""Mesh file readers (OFF, PLY ascii/binary little-endian, OBJ) and a PLY
writer with per-vertex colors for correspondence visualization."""

import struct

import numpy as np

from .errors import DataError, MeshFormatError
from .mesh import TriMesh

_FORMATS = ("off", "ply", "obj")


def load_mesh(path, format=None):
    """Load a triangle mesh, validating all TriMesh invariants.

    ``format`` is one of ``"off"``, ``"ply"``, ``"obj"``; when omitted it
    is inferred from the file extension. Vertex order is preserved.
    """
    if format is None:
        lower = str(path).lower()
        for ext in _FORMATS:
            if lower.endswith("." + ext):
                format = ext
                break
        else:
            raise MeshFormatError("cannot infer mesh format from extension", path=path)
    format = format.lower()
    if format not in _FORMATS:
        raise MeshFormatError(f"unsupported mesh format {format!r}", path=path)
    reader = {"off": _read_off, "ply": _read_ply, "obj": _read_obj}[format]
    vertices, faces = reader(path)
    try:
        return TriMesh(vertices, faces)
    except DataError as exc:
        raise MeshFormatError(str(exc), path=path) from exc


def _data_lines(path):
    """Yield (line_number, stripped_text) skipping blanks and # comments."""
    with open(path, "r", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text


def _read_off(path):
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshFormatError("empty OFF file", path=path) from None
    counts_text = None
    if header in ("OFF", "COFF"):
        pass
    elif header.startswith(("OFF", "COFF")):
        # Header and counts crammed on one line ("OFF 8 12 0").
        counts_text = header.split(None, 1)[1]
    else:
        raise MeshFormatError("missing OFF header", path=path, line=lineno)
    if counts_text is None:
        try:
            lineno, counts_text = next(lines)
        except StopIteration:
            raise MeshFormatError("missing OFF counts line", path=path) from None
    parts = counts_text.split()
    if len(parts) < 2:
        raise MeshFormatError(f"bad OFF counts line {counts_text!r}", path=path, line=lineno)
    try:
        n_verts, n_faces = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshFormatError(f"bad OFF counts line {counts_text!r}", path=path, line=lineno) from None

    vertices = np.empty((n_verts, 3))
    for i in range(n_verts):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {n_verts} vertices, file ended at {i}", path=path) from None
        cols = text.split()
        if len(cols) < 3:
            raise MeshFormatError(f"vertex line needs 3 coordinates: {text!r}", path=path, line=lineno)
        try:
            vertices[i] = [float(cols[0]), float(cols[1]), float(cols[2])]
        except ValueError:
            raise MeshFormatError(f"bad vertex line {text!r}", path=path, line=lineno) from None

    faces = np.empty((n_faces, 3), dtype=np.int64)
    for i in range(n_faces):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise MeshFormatError(f"expected {n_faces} faces, file ended at {i}", path=path) from None
        cols = text.split()
        try:
            count = int(cols[0])
            idx = [int(c) for c in cols[1 : 1 + count]]
        except (ValueError, IndexError):
            raise MeshFormatError(f"bad face line {text!r}", path=path, line=lineno) from None
        if count != 3 or len(idx) != 3:
            raise MeshFormatError(f"only triangles supported, face has {count} vertices", path=path, line=lineno)
        if any(j < 0 or j >= n_verts for j in idx):
            raise MeshFormatError(
                f"face index out of range [0, {n_verts}): {idx}", path=path, line=lineno
            )
        faces[i] = idx
    return vertices, faces


def _read_obj(path):
    vertices = []
    faces = []
    for lineno, text in _data_lines(path):
        tag, _, rest = text.partition(" ")
        if tag == "v":
            cols = rest.split()
            if len(cols) < 3:
                raise MeshFormatError(f"bad OBJ vertex {text!r}", path=path, line=lineno)
            try:
                vertices.append([float(cols[0]), float(cols[1]), float(cols[2])])
            except ValueError:
                raise MeshFormatError(f"bad OBJ vertex {text!r}", path=path, line=lineno) from None
        elif tag == "f":
            refs = rest.split()
            if len(refs) != 3:
                raise MeshFormatError(
                    f"only triangles supported, face has {len(refs)} vertices", path=path, line=lineno
                )
            idx = []
            for ref in refs:
                head = ref.split("/")[0]
                try:
                    j = int(head)
                except ValueError:
                    raise MeshFormatError(f"bad OBJ face reference {ref!r}", path=path, line=lineno) from None
                # OBJ indices are 1-based; negatives count back from the end.
                j = j - 1 if j > 0 else len(vertices) + j
                if j < 0 or j >= len(vertices):
                    raise MeshFormatError(
                        f"face index out of range [0, {len(vertices)}): {ref}", path=path, line=lineno
                    )
                idx.append(j)
            faces.append(idx)
    if not vertices:
        raise MeshFormatError("OBJ file contains no vertices", path=path)
    return np.asarray(vertices, dtype=np.float64), np.asarray(faces, dtype=np.int64)


_PLY_SCALARS = {
    "char": "b", "int8": "b",
    "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h",
    "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i",
    "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


def _read_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"ply"):
        raise MeshFormatError("missing PLY header", path=path, line=1)
    end = data.find(b"end_header")
    if end < 0:
        raise MeshFormatError("missing end_header", path=path)
    body_start = data.index(b"\n", end) + 1
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements = []  # (name, count, [(prop_name, type) or ("list", count_t, item_t, name)])
    for lineno, text in enumerate(header_lines, start=1):
        cols = text.strip().split()
        if not cols or cols[0] in ("ply", "comment", "obj_info"):
            continue
        if cols[0] == "format":
            fmt = cols[1]
        elif cols[0] == "element":
            elements.append((cols[1], int(cols[2]), []))
        elif cols[0] == "property":
            if not elements:
                raise MeshFormatError("property before element", path=path, line=lineno)
            if cols[1] == "list":
                elements[-1][2].append(("list", cols[2], cols[3], cols[4]))
            else:
                elements[-1][2].append((cols[2], cols[1]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshFormatError(f"unsupported PLY format {fmt!r}", path=path)

    if fmt == "ascii":
        return _read_ply_ascii(path, data[body_start:], elements)
    return _read_ply_binary(path, data[body_start:], elements)


def _vertex_layout(props, path):
    names = [p[0] for p in props]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise MeshFormatError(f"vertex element missing property {coord!r}", path=path)
    return names.index("x"), names.index("y"), names.index("z")


def _read_ply_ascii(path, body, elements):
    tokens = body.decode("ascii", errors="replace").split()
    pos = 0
    vertices = None
    faces = None
    for name, count, props in elements:
        if name == "vertex":
            ix, iy, iz = _vertex_layout(props, path)
            width = len(props)
            try:
                block = np.array(tokens[pos : pos + count * width], dtype=np.float64).reshape(count, width)
            except ValueError:
                raise MeshFormatError("truncated or non-numeric vertex data", path=path) from None
            vertices = block[:, [ix, iy, iz]]
            pos += count * width
        elif name == "face":
            faces = np.empty((count, 3), dtype=np.int64)
            for i in range(count):
                try:
                    k = int(tokens[pos])
                except (IndexError, ValueError):
                    raise MeshFormatError(f"bad face row {i}", path=path) from None
                if k != 3:
                    raise MeshFormatError(f"only triangles supported, face has {k} vertices", path=path)
                faces[i] = [int(t) for t in tokens[pos + 1 : pos + 4]]
                pos += 1 + k
        else:
            # Skip unknown fixed-width elements; lists are unsupported here.
            if any(p[0] == "list" for p in props):
                raise MeshFormatError(f"cannot skip list element {name!r}", path=path)
            pos += count * len(props)
    if vertices is None or faces is None:
        raise MeshFormatError("PLY file lacks vertex or face element", path=path)
    return vertices, faces


def _read_ply_binary(path, body, elements):
    offset = 0
    vertices = None
    faces = None
    for name, count, props in elements:
        if name == "vertex":
            ix, iy, iz = _vertex_layout(props, path)
            fmt = "<" + "".join(_PLY_SCALARS[t] for _, t in props)
            size = struct.calcsize(fmt)
            vertices = np.empty((count, 3))
            for i in range(count):
                try:
                    row = struct.unpack_from(fmt, body, offset)
                except struct.error:
                    raise MeshFormatError(f"truncated vertex data at row {i} (byte {offset})", path=path) from None
                vertices[i] = (row[ix], row[iy], row[iz])
                offset += size
        elif name == "face":
            if len(props) != 1 or props[0][0] != "list":
                raise MeshFormatError("face element must be a single list property", path=path)
            _, count_t, item_t, _ = props[0]
            cfmt = "<" + _PLY_SCALARS[count_t]
            ifmt_ch = _PLY_SCALARS[item_t]
            csize = struct.calcsize(cfmt)
            faces = np.empty((count, 3), dtype=np.int64)
            for i in range(count):
                try:
                    (k,) = struct.unpack_from(cfmt, body, offset)
                    offset += csize
                    if k != 3:
                        raise MeshFormatError(
                            f"only triangles supported, face has {k} vertices", path=path
                        )
                    ifmt = "<" + ifmt_ch * k
                    faces[i] = struct.unpack_from(ifmt, body, offset)
                    offset += struct.calcsize(ifmt)
                except struct.error:
                    raise MeshFormatError(f"truncated face data at row {i} (byte {offset})", path=path) from None
        else:
            if any(p[0] == "list" for p in props):
                raise MeshFormatError(f"cannot skip list element {name!r}", path=path)
            fmt = "<" + "".join(_PLY_SCALARS[t] for _, t in props)
            offset += struct.calcsize(fmt) * count
    if vertices is None or faces is None:
        raise MeshFormatError("PLY file lacks vertex or face element", path=path)
    return vertices, faces


def save_ply_with_colors(path, mesh, colors):
    """Write an ascii PLY with per-vertex uchar RGB, viewer-compatible.

    ``colors`` is (n, 3) in [0, 255] (floats are clipped and rounded).
    """
    rgb = np.asarray(colors)
    if rgb.shape != (mesh.num_vertices, 3):
        raise DataError(f"colors must be ({mesh.num_vertices}, 3), got {rgb.shape}")
    rgb = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.num_vertices}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write(f"element face {mesh.num_faces}\n")
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        for p, c in zip(mesh.vertices, rgb):
            fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {c[0]} {c[1]} {c[2]}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
