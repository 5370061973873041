"""Triangle meshes: validation, areas, file formats, graph geodesics.

A mesh is vertices (n, 3) float64 plus triangles (m, 3) int64. Construction
validates index ranges and rejects geometrically degenerate input; everything
downstream (mass matrices, geodesics) relies on those guarantees.

Supported file formats are ASCII only: OFF, OBJ, and ASCII PLY. Parsing is
strict and order-preserving, so parse -> serialize -> parse is an identity.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .errors import DegenerateMesh, IndexOutOfRange, ParseError

# Triangles are rejected when their area falls below this fraction of the
# squared bounding-box diagonal; keeps cotangents and masses finite.
AREA_FLOOR_SCALE = 1e-12


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips through float()."""
    return repr(float(x))


class TriMesh:
    """Validated triangle mesh.

    Parameters
    ----------
    vertices : array_like of shape (n, 3)
        Vertex positions, converted to float64.
    triangles : array_like of shape (m, 3)
        Vertex indices per triangle, converted to int64.

    Raises
    ------
    IndexOutOfRange
        If a triangle references a vertex outside [0, n).
    DegenerateMesh
        If a triangle has repeated vertices, its area is below the
        degeneracy floor (1e-12 x squared bounding-box diagonal), or a
        vertex is referenced by no triangle (its lumped mass would be 0).
    """

    def __init__(self, vertices, triangles):
        v = np.asarray(vertices, dtype=np.float64)
        t = np.asarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise DegenerateMesh(f"vertices must be (n, 3), got {v.shape}")
        if not np.isfinite(v).all():
            raise DegenerateMesh("non-finite vertex coordinate")
        if t.ndim != 2 or t.shape[1] != 3:
            raise DegenerateMesh(f"triangles must be (m, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise IndexOutOfRange(
                f"triangle index out of range [0, {len(v)}): "
                f"min {t.min()}, max {t.max()}"
            )
        if np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]) or np.any(t[:, 0] == t[:, 2]):
            raise DegenerateMesh("triangle with repeated vertex index")
        self.vertices = v
        self.triangles = t

        areas = self.triangle_areas()
        bbox_diag_sq = float(np.sum((v.max(axis=0) - v.min(axis=0)) ** 2)) if len(v) else 0.0
        floor = AREA_FLOOR_SCALE * bbox_diag_sq
        bad = np.nonzero(areas <= floor)[0]
        if bad.size:
            raise DegenerateMesh(
                f"{bad.size} triangle(s) at or below the area floor "
                f"{floor:g}; first offender: triangle {bad[0]}"
            )
        used = np.zeros(len(v), dtype=bool)
        used[t.ravel()] = True
        if not used.all():
            raise DegenerateMesh(
                f"vertex {int(np.nonzero(~used)[0][0])} is referenced by no "
                "triangle (lumped mass would vanish)"
            )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        """Areas of all triangles, shape (m,)."""
        p = self.vertices[self.triangles]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def vertex_areas(self) -> np.ndarray:
        """Lumped vertex areas: one third of each incident triangle, shape (n,).

        Strictly positive (construction guarantees every vertex is used and
        every triangle clears the area floor). Sums to total_area exactly up
        to rounding.
        """
        areas = self.triangle_areas()
        va = np.zeros(self.n_vertices)
        np.add.at(va, self.triangles.ravel(), np.repeat(areas / 3.0, 3))
        return va

    def total_area(self) -> float:
        return float(self.triangle_areas().sum())

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs, shape (e, 2)."""
        t = self.triangles
        raw = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        raw.sort(axis=1)
        return np.unique(raw, axis=0)

    def edge_graph(self) -> sparse.csr_matrix:
        """Symmetric sparse adjacency with Euclidean edge lengths as weights."""
        e = self.edges()
        w = np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)
        n = self.n_vertices
        g = sparse.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]),
                                      np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        )
        return g.tocsr()


def graph_geodesics(mesh: TriMesh, sources=None) -> np.ndarray:
    """Shortest-path distances along mesh edges (Euclidean weights).

    Parameters
    ----------
    mesh : TriMesh
    sources : array_like of int, optional
        Source vertices; all vertices when omitted.

    Returns
    -------
    ndarray of shape (len(sources), n)
        Row s holds distances from sources[s] to every vertex. Unreachable
        vertices get +inf; it is the caller's job to decide whether that is
        an error (see evaluate.geodesic_error).
    """
    if sources is None:
        sources = np.arange(mesh.n_vertices)
    sources = np.asarray(sources, dtype=np.int64).ravel()
    if sources.size and (sources.min() < 0 or sources.max() >= mesh.n_vertices):
        raise IndexOutOfRange("geodesic source index out of range")
    if sources.size == 0:
        return np.zeros((0, mesh.n_vertices))
    return dijkstra(mesh.edge_graph(), directed=False, indices=sources)


class GeodesicTable:
    """Row cache over graph_geodesics for repeated queries on one mesh."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self._rows: dict[int, np.ndarray] = {}

    def rows(self, sources) -> np.ndarray:
        sources = np.asarray(sources, dtype=np.int64).ravel()
        missing = [int(s) for s in np.unique(sources) if int(s) not in self._rows]
        if missing:
            block = graph_geodesics(self.mesh, missing)
            for i, s in enumerate(missing):
                self._rows[s] = block[i]
        return np.stack([self._rows[int(s)] for s in sources]) if sources.size \
            else np.zeros((0, self.mesh.n_vertices))

    def distance(self, i: int, j: int) -> float:
        return float(self.rows([i])[0, j])


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _meaningful_lines(text: str):
    """Yield (lineno, line) skipping blanks and '#' comment lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _parse_floats(tokens, lineno, path):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"{path}:{lineno}: expected numbers, got {tokens!r}") from exc


def _parse_off(text: str, path) -> TriMesh:
    lines = _meaningful_lines(text)
    try:
        no, header = next(lines)
    except StopIteration:
        raise ParseError(f"{path}: empty file") from None
    if header != "OFF":
        raise ParseError(f"{path}:{no}: expected 'OFF' header, got {header!r}")
    try:
        no, counts = next(lines)
    except StopIteration:
        raise ParseError(f"{path}: missing count line") from None
    parts = counts.split()
    if len(parts) != 3:
        raise ParseError(f"{path}:{no}: count line must be 'n m 0', got {counts!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
        int(parts[2])
    except ValueError as exc:
        raise ParseError(f"{path}:{no}: bad counts {counts!r}") from exc
    verts = np.empty((n, 3))
    for i in range(n):
        try:
            no, line = next(lines)
        except StopIteration:
            raise ParseError(f"{path}: expected {n} vertices, file ended at {i}") from None
        toks = line.split()
        if len(toks) != 3:
            raise ParseError(f"{path}:{no}: vertex line needs 3 coordinates, got {len(toks)}")
        verts[i] = _parse_floats(toks, no, path)
    tris = np.empty((m, 3), dtype=np.int64)
    for i in range(m):
        try:
            no, line = next(lines)
        except StopIteration:
            raise ParseError(f"{path}: expected {m} faces, file ended at {i}") from None
        toks = line.split()
        if len(toks) != 4 or toks[0] != "3":
            raise ParseError(f"{path}:{no}: face line must be '3 i j k', got {line!r}")
        try:
            tris[i] = [int(t) for t in toks[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{no}: bad face indices {line!r}") from exc
    return TriMesh(verts, tris)


def _serialize_off(mesh: TriMesh) -> str:
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} 0"]
    out += [" ".join(_fmt(c) for c in v) for v in mesh.vertices]
    out += ["3 {} {} {}".format(*t) for t in mesh.triangles]
    return "\n".join(out) + "\n"


def _parse_obj(text: str, path) -> TriMesh:
    verts, tris = [], []
    for no, line in _meaningful_lines(text):
        toks = line.split()
        kind = toks[0]
        if kind == "v":
            if len(toks) != 4:
                raise ParseError(f"{path}:{no}: 'v' line needs 3 coordinates")
            verts.append(_parse_floats(toks[1:], no, path))
        elif kind == "f":
            if len(toks) != 4:
                raise ParseError(f"{path}:{no}: only triangular faces are supported")
            idx = []
            for t in toks[1:]:
                head = t.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise ParseError(f"{path}:{no}: bad face token {t!r}") from exc
                if i < 1:
                    raise ParseError(f"{path}:{no}: OBJ indices are 1-based, got {i}")
                idx.append(i - 1)
            tris.append(idx)
        # vn/vt/o/g/s/usemtl/mtllib lines carry no geometry here
    if not verts:
        raise ParseError(f"{path}: no vertices found")
    return TriMesh(np.asarray(verts), np.asarray(tris, dtype=np.int64).reshape(-1, 3))


def _serialize_obj(mesh: TriMesh) -> str:
    out = [" ".join(["v"] + [_fmt(c) for c in v]) for v in mesh.vertices]
    out += ["f {} {} {}".format(*(t + 1)) for t in mesh.triangles]
    return "\n".join(out) + "\n"


def _parse_ply(text: str, path) -> TriMesh:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(f"{path}: not a PLY file (missing 'ply' magic)")
    n = m = None
    vertex_props: list[str] = []
    current = None
    body_start = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("comment"):
            continue
        toks = line.split()
        if toks[0] == "format":
            if len(toks) < 2 or toks[1] != "ascii":
                raise ParseError(f"{path}:{lineno}: binary PLY is not supported, ASCII only")
        elif toks[0] == "element":
            if len(toks) != 3:
                raise ParseError(f"{path}:{lineno}: bad element line {line!r}")
            current = toks[1]
            if current == "vertex":
                n = int(toks[2])
            elif current == "face":
                m = int(toks[2])
            else:
                raise ParseError(f"{path}:{lineno}: unsupported element {current!r}")
        elif toks[0] == "property":
            if current == "vertex":
                vertex_props.append(toks[-1])
        elif toks[0] == "end_header":
            body_start = lineno
            break
        else:
            raise ParseError(f"{path}:{lineno}: unexpected header line {line!r}")
    if body_start is None or n is None or m is None:
        raise ParseError(f"{path}: incomplete PLY header")
    if vertex_props != ["x", "y", "z"]:
        raise ParseError(
            f"{path}: vertex properties must be exactly x y z, got {vertex_props}"
        )
    body = [ln.strip() for ln in lines[body_start:] if ln.strip()]
    if len(body) < n + m:
        raise ParseError(f"{path}: expected {n + m} body lines, got {len(body)}")
    verts = np.empty((n, 3))
    for i in range(n):
        toks = body[i].split()
        if len(toks) != 3:
            raise ParseError(f"{path}: vertex row {i} needs 3 values")
        verts[i] = _parse_floats(toks, body_start + 1 + i, path)
    tris = np.empty((m, 3), dtype=np.int64)
    for i in range(m):
        toks = body[n + i].split()
        if len(toks) != 4 or toks[0] != "3":
            raise ParseError(f"{path}: face row {i} must be '3 i j k'")
        tris[i] = [int(t) for t in toks[1:]]
    return TriMesh(verts, tris)


def _serialize_ply(mesh: TriMesh) -> str:
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {mesh.n_triangles}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    out += [" ".join(_fmt(c) for c in v) for v in mesh.vertices]
    out += ["3 {} {} {}".format(*t) for t in mesh.triangles]
    return "\n".join(out) + "\n"


_PARSERS = {"off": _parse_off, "obj": _parse_obj, "ply": _parse_ply}
_SERIALIZERS = {"off": _serialize_off, "obj": _serialize_obj, "ply": _serialize_ply}


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower()
    fmt = fmt.lower()
    if fmt not in _PARSERS:
        raise ParseError(f"unsupported mesh format {fmt!r} for {path}")
    return fmt


def load_mesh(path, fmt: str | None = None) -> TriMesh:
    """Load an ASCII mesh file; format inferred from the extension unless given."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"mesh file not found: {path}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not an ASCII file (binary formats unsupported)") from exc
    return _PARSERS[fmt](text, path)


def save_mesh(mesh: TriMesh, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    path.write_text(_SERIALIZERS[fmt](mesh))


def load_matrix(path) -> np.ndarray:
    """Whitespace-separated decimal text, one matrix row per line."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"matrix file not found: {path}") from exc
    rows = []
    width = None
    for no, line in _meaningful_lines(text):
        vals = _parse_floats(line.split(), no, path)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"{path}:{no}: ragged row ({len(vals)} values, expected {width})")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: empty matrix file")
    return np.asarray(rows)


def save_matrix(a: np.ndarray, path) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    lines = [" ".join(_fmt(v) for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n")


def load_correspondence(path) -> np.ndarray:
    """One 0-based target index per source vertex, one per line."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ParseError(f"correspondence file not found: {path}") from exc
    idx = []
    for no, line in _meaningful_lines(text):
        toks = line.split()
        if len(toks) != 1:
            raise ParseError(f"{path}:{no}: one index per line, got {line!r}")
        try:
            v = int(toks[0])
        except ValueError as exc:
            raise ParseError(f"{path}:{no}: bad index {toks[0]!r}") from exc
        if v < 0:
            raise ParseError(f"{path}:{no}: indices are 0-based and non-negative, got {v}")
        idx.append(v)
    if not idx:
        raise ParseError(f"{path}: empty correspondence file")
    return np.asarray(idx, dtype=np.int64)


def save_correspondence(indices, path) -> None:
    indices = np.asarray(indices, dtype=np.int64).ravel()
    Path(path).write_text("\n".join(str(int(i)) for i in indices) + "\n")
