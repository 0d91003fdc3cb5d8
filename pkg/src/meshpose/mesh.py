"""Triangle-mesh representation, ASCII OBJ/PLY parsing and graph utilities.

A mesh is a vertex array plus an undirected edge set derived from its faces.
Vertices are in meters, in whatever frame the file was authored in; use
:func:`center_mesh` to move the centroid to the origin when an operation
requires centered model coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose6D, rotation_about_axis


class MeshFormatError(ValueError):
    """Malformed OBJ/PLY content; the message carries the offending line."""


@dataclass
class Mesh:
    """Vertices (n, 3), undirected edges (e, 2) with i < j, optional faces."""

    vertices: np.ndarray
    edges: np.ndarray
    faces: list[tuple[int, int, int]] | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        if edges.size:
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("mesh edges must not contain self-loops")
            if edges.min() < 0 or edges.max() >= len(self.vertices):
                raise ValueError("mesh edge references an out-of-range vertex")
            edges = np.unique(np.sort(edges, axis=1), axis=0)
        self.edges = edges

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass
class SymmetrySpec:
    """Rotational symmetry about a model-space axis.

    order k enumerates the k rotations by multiples of 2*pi/k; order 1 means
    no symmetry. A continuous symmetry (cylinders, bottles) is discretized
    into `samples` rotations.
    """

    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    order: int = 1
    continuous: bool = False
    samples: int = 36

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
            raise ValueError("symmetry axis must have unit norm")
        if int(self.order) < 1:
            raise ValueError("symmetry order must be >= 1")
        self.order = int(self.order)
        if self.continuous and int(self.samples) < 1:
            raise ValueError("continuous symmetry needs a positive sample count")
        self.samples = int(self.samples)

    @property
    def is_symmetric(self) -> bool:
        return self.continuous or self.order > 1


NO_SYMMETRY = SymmetrySpec()


def symmetry_rotations(spec: SymmetrySpec) -> list[np.ndarray]:
    """The rotation set generated by `spec`, identity first, uniform in angle."""
    count = spec.samples if spec.continuous else spec.order
    step = 2.0 * np.pi / count
    out = [np.eye(3)]
    for j in range(1, count):
        out.append(rotation_about_axis(spec.axis, j * step))
    return out


def _edges_from_faces(faces) -> np.ndarray:
    if not faces:
        return np.zeros((0, 2), dtype=int)
    f = np.asarray(faces, dtype=int)
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    return np.unique(np.sort(pairs, axis=1), axis=0)


def _parse_obj(lines) -> tuple[list, list, list]:
    vertices, faces, face_lines = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        kind = tokens[0]
        if kind == "v":
            if len(tokens) < 4:
                raise MeshFormatError(f"line {lineno}: vertex needs 3 coordinates: {raw.strip()!r}")
            try:
                vertices.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise MeshFormatError(f"line {lineno}: bad vertex coordinate: {raw.strip()!r}") from None
        elif kind == "f":
            if len(tokens) != 4:
                raise MeshFormatError(f"line {lineno}: only triangular faces are supported: {raw.strip()!r}")
            try:
                # OBJ indices are 1-based; tolerate v/vt/vn references
                idx = [int(t.split("/")[0]) - 1 for t in tokens[1:4]]
            except ValueError:
                raise MeshFormatError(f"line {lineno}: bad face index: {raw.strip()!r}") from None
            faces.append(idx)
            face_lines.append(lineno)
        # normals, texcoords, groups, materials: ignored
    return vertices, faces, face_lines


def _parse_ply(lines) -> tuple[list, list, list]:
    it = iter(enumerate(lines, start=1))
    try:
        _, magic = next(it)
    except StopIteration:
        raise MeshFormatError("line 1: empty PLY stream") from None
    if magic.strip() != "ply":
        raise MeshFormatError("line 1: missing 'ply' magic")

    n_vertices = n_faces = 0
    current = None
    vertex_props: list[str] = []
    saw_format = False
    for lineno, raw in it:
        tokens = raw.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise MeshFormatError(f"line {lineno}: only ASCII PLY is supported")
            saw_format = True
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MeshFormatError(f"line {lineno}: malformed element declaration")
            current = tokens[1]
            if current == "vertex":
                n_vertices = int(tokens[2])
            elif current == "face":
                n_faces = int(tokens[2])
        elif tokens[0] == "property" and current == "vertex" and tokens[1] != "list":
            vertex_props.append(tokens[-1])
        elif tokens[0] == "end_header":
            break
    else:
        raise MeshFormatError("missing 'end_header'")
    if not saw_format:
        raise MeshFormatError("missing 'format ascii' declaration")
    if vertex_props[:3] != ["x", "y", "z"]:
        raise MeshFormatError("vertex properties must start with x, y, z")

    vertices, faces, face_lines = [], [], []
    for _ in range(n_vertices):
        try:
            lineno, raw = next(it)
        except StopIteration:
            raise MeshFormatError("unexpected end of stream in vertex data") from None
        tokens = raw.split()
        if len(tokens) < 3:
            raise MeshFormatError(f"line {lineno}: vertex needs 3 coordinates: {raw.strip()!r}")
        try:
            vertices.append([float(t) for t in tokens[:3]])
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad vertex coordinate: {raw.strip()!r}") from None
    for _ in range(n_faces):
        try:
            lineno, raw = next(it)
        except StopIteration:
            raise MeshFormatError("unexpected end of stream in face data") from None
        tokens = raw.split()
        try:
            count = int(tokens[0])
            idx = [int(t) for t in tokens[1:1 + count]]
        except (ValueError, IndexError):
            raise MeshFormatError(f"line {lineno}: bad face record: {raw.strip()!r}") from None
        if count != 3 or len(idx) != 3:
            raise MeshFormatError(f"line {lineno}: only triangular faces are supported")
        faces.append(idx)
        face_lines.append(lineno)
    return vertices, faces, face_lines


def load_mesh(data: bytes | str, fmt: str) -> Mesh:
    """Parse an ASCII OBJ or ASCII PLY byte stream into a Mesh.

    Edges are the deduplicated union of the face edges. Coordinates are
    taken to be meters. Raises MeshFormatError on malformed content, meshes
    with fewer than 4 vertices, and faces referencing missing vertices.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MeshFormatError(f"stream is not ASCII: {exc}") from None
    else:
        text = data
    lines = text.splitlines()

    fmt = fmt.lower()
    if fmt == "obj":
        vertices, faces, face_lines = _parse_obj(lines)
    elif fmt in ("ply", "ply-ascii"):
        vertices, faces, face_lines = _parse_ply(lines)
    else:
        raise ValueError(f"unsupported mesh format {fmt!r} (expected 'obj' or 'ply-ascii')")

    n = len(vertices)
    if n < 4:
        raise MeshFormatError(f"mesh has {n} vertices, need at least 4")
    for idx, lineno in zip(faces, face_lines):
        for i in idx:
            if not 0 <= i < n:
                raise MeshFormatError(
                    f"line {lineno}: face references an out-of-range vertex (mesh has {n})"
                )
    return Mesh(
        vertices=np.asarray(vertices, dtype=float),
        edges=_edges_from_faces(faces),
        faces=[tuple(f) for f in faces],
    )


def load_mesh_file(path) -> Mesh:
    """Load a mesh from a .obj or .ply path, inferring the format."""
    text = open(path, "rb").read()
    name = str(path).lower()
    if name.endswith(".obj"):
        fmt = "obj"
    elif name.endswith(".ply"):
        fmt = "ply-ascii"
    else:
        raise ValueError(f"cannot infer mesh format from {path!r} (expected .obj or .ply)")
    return load_mesh(text, fmt)


def center_mesh(m: Mesh) -> Mesh:
    """Shift vertices so their mean sits at the origin."""
    return Mesh(vertices=m.vertices - m.vertices.mean(axis=0), edges=m.edges, faces=m.faces)


def mesh_diameter(m: Mesh) -> float:
    """Exact maximum pairwise vertex distance (O(n^2), chunked)."""
    v = m.vertices
    if len(v) < 2:
        raise ValueError("mesh diameter needs at least 2 vertices")
    best = 0.0
    chunk = 1024
    for start in range(0, len(v), chunk):
        block = v[start:start + chunk]
        d2 = ((block[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def transform_mesh(m: Mesh, pose: Pose6D) -> Mesh:
    """Apply a rigid pose to every vertex; topology is untouched."""
    return Mesh(vertices=pose.apply(m.vertices), edges=m.edges, faces=m.faces)


def neighborhood(m: Mesh, i: int) -> set[int]:
    """Indices sharing an edge with vertex i (never contains i itself)."""
    if not 0 <= i < m.n_vertices:
        raise IndexError(f"vertex index {i} out of range for {m.n_vertices} vertices")
    if not m.edges.size:
        return set()
    out = set(m.edges[m.edges[:, 0] == i, 1])
    out.update(m.edges[m.edges[:, 1] == i, 0])
    return {int(j) for j in out}
