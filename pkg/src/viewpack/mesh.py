"""Triangle mesh with UV parameterization: OBJ loading, saving, normalization."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(Exception):
    """Base error for mesh loading and validation."""


class MeshParseError(MeshError):
    """Malformed OBJ content; message carries the offending line number."""


class MissingUvError(MeshError):
    """Mesh has no UV coordinates; UVs are mandatory for back-projection."""


class DegenerateMeshError(MeshError):
    """Mesh has zero spatial extent."""


@dataclass(frozen=True)
class Mesh:
    """Immutable triangle mesh with per-corner UVs and per-vertex normals.

    vertices: (V, 3) float64 world positions
    faces: (F, 3) int32 vertex indices
    uv_coords: (T, 2) float64 in [0, 1]^2
    face_uvs: (F, 3) int32 indices into uv_coords, aligned with faces
    normals: (V, 3) float64 unit vectors
    """

    vertices: np.ndarray
    faces: np.ndarray
    uv_coords: np.ndarray
    face_uvs: np.ndarray
    normals: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        f = np.ascontiguousarray(self.faces, dtype=np.int32)
        uv = np.ascontiguousarray(self.uv_coords, dtype=np.float64)
        fuv = np.ascontiguousarray(self.face_uvs, dtype=np.int32)
        n = self.normals
        if n is None:
            n = vertex_normals(v, f)
        n = np.ascontiguousarray(n, dtype=np.float64)
        if f.shape != fuv.shape:
            raise MeshError("faces and face_uvs must have equal length")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face vertex index out of range")
        if fuv.size and (fuv.min() < 0 or fuv.max() >= len(uv)):
            raise MeshError("face UV index out of range")
        for arr in (v, f, uv, fuv, n):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "uv_coords", uv)
        object.__setattr__(self, "face_uvs", fuv)
        object.__setattr__(self, "normals", n)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def corner_uvs(self) -> np.ndarray:
        """Per-face corner UVs, shape (F, 3, 2)."""
        return self.uv_coords[self.face_uvs]


def vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted per-vertex normals from face geometry."""
    normals = np.zeros((len(vertices), 3), dtype=np.float64)
    if len(faces):
        tri = vertices[faces]
        # cross product length is twice the face area, so summing raw cross
        # products area-weights the average
        face_n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        for corner in range(3):
            np.add.at(normals, faces[:, corner], face_n)
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    ok = lengths[:, 0] > 1e-20
    normals[ok] /= lengths[ok]
    normals[~ok] = (0.0, 0.0, 1.0)
    return normals


def normalize_mesh(mesh: Mesh) -> Mesh:
    """Center the bounding box at the origin and scale the longest half-extent to 1.

    Uniform scale preserves aspect ratios; topology, UVs and normals are
    unchanged. Raises DegenerateMeshError on zero-extent input.
    """
    if mesh.num_vertices == 0:
        raise DegenerateMeshError("mesh has no vertices")
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    center = (lo + hi) * 0.5
    half = ((hi - lo) * 0.5).max()
    if half < 1e-12:
        raise DegenerateMeshError("mesh has zero extent")
    verts = (mesh.vertices - center) / half
    return Mesh(verts, mesh.faces, mesh.uv_coords, mesh.face_uvs, mesh.normals)


def _parse_face_corner(token: str, line_no: int) -> tuple[int, int, int | None]:
    parts = token.split("/")
    if len(parts) < 2 or parts[1] == "":
        raise MissingUvError(
            f"line {line_no}: face corner '{token}' has no UV index; "
            "mesh has no UV coordinates"
        )
    try:
        vi = int(parts[0])
        ti = int(parts[1])
        ni = int(parts[2]) if len(parts) > 2 and parts[2] != "" else None
    except ValueError as exc:
        raise MeshParseError(f"line {line_no}: bad face token '{token}'") from exc
    if vi < 0 or ti < 0 or (ni is not None and ni < 0):
        raise MeshParseError(f"line {line_no}: negative indices are not supported")
    return vi, ti, ni


def load_mesh(path: str | Path) -> Mesh:
    """Load a Wavefront OBJ mesh (v/vt[/vn] with triangulatable faces).

    Quads and larger polygons are fan-triangulated. Missing normals are
    computed area-weighted from face geometry. Raises MissingUvError when any
    face corner lacks a vt reference.
    """
    path = Path(path)
    verts: list[list[float]] = []
    uvs: list[list[float]] = []
    vns: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    face_uvs: list[tuple[int, int, int]] = []
    corner_normals: list[tuple[int, int, int] | None] = []

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            tag = tokens[0]
            try:
                if tag == "v":
                    verts.append([float(t) for t in tokens[1:4]])
                elif tag == "vt":
                    uvs.append([float(t) for t in tokens[1:3]])
                elif tag == "vn":
                    vns.append([float(t) for t in tokens[1:4]])
                elif tag == "f":
                    corners = [_parse_face_corner(t, line_no) for t in tokens[1:]]
                    if len(corners) < 3:
                        raise MeshParseError(f"line {line_no}: face with < 3 corners")
                    for k in range(1, len(corners) - 1):
                        tri = (corners[0], corners[k], corners[k + 1])
                        faces.append(tuple(c[0] - 1 for c in tri))
                        face_uvs.append(tuple(c[1] - 1 for c in tri))
                        if all(c[2] is not None for c in tri):
                            corner_normals.append(tuple(c[2] - 1 for c in tri))
                        else:
                            corner_normals.append(None)
            except (ValueError, IndexError) as exc:
                raise MeshParseError(f"line {line_no}: {exc}") from exc

    if not uvs:
        raise MissingUvError("mesh has no UV coordinates")
    if not faces:
        raise MeshParseError("no faces found")

    v = np.asarray(verts, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int32)
    uv = np.asarray(uvs, dtype=np.float64)
    fuv = np.asarray(face_uvs, dtype=np.int32)
    if f.min() < 0 or f.max() >= len(v):
        raise MeshParseError("face vertex index out of range")
    if fuv.min() < 0 or fuv.max() >= len(uv):
        raise MeshParseError("face UV index out of range")

    normals = None
    if vns and all(cn is not None for cn in corner_normals):
        vn = np.asarray(vns, dtype=np.float64)
        cn = np.asarray(corner_normals, dtype=np.int32)
        if cn.max() >= len(vn):
            raise MeshParseError("face normal index out of range")
        acc = np.zeros((len(v), 3), dtype=np.float64)
        for corner in range(3):
            np.add.at(acc, f[:, corner], vn[cn[:, corner]])
        lengths = np.linalg.norm(acc, axis=1, keepdims=True)
        ok = lengths[:, 0] > 1e-20
        acc[ok] /= lengths[ok]
        acc[~ok] = (0.0, 0.0, 1.0)
        normals = acc

    return Mesh(v, f, uv, fuv, normals)


def save_mesh(mesh: Mesh, path: str | Path) -> None:
    """Write the mesh as OBJ with v/vt/vn records and v/vt/vn face indices."""
    path = Path(path)
    lines: list[str] = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}")
    for uv in mesh.uv_coords:
        lines.append(f"vt {uv[0]:.8f} {uv[1]:.8f}")
    for n in mesh.normals:
        lines.append(f"vn {n[0]:.8f} {n[1]:.8f} {n[2]:.8f}")
    for f, fuv in zip(mesh.faces, mesh.face_uvs):
        corners = " ".join(
            f"{f[k] + 1}/{fuv[k] + 1}/{f[k] + 1}" for k in range(3)
        )
        lines.append(f"f {corners}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def mesh_content_hash(mesh: Mesh) -> str:
    """Stable content hash of geometry and UVs, robust to text-format round-trips."""
    h = hashlib.sha256()
    h.update(np.round(mesh.vertices, 6).tobytes())
    h.update(mesh.faces.tobytes())
    h.update(np.round(mesh.uv_coords, 6).tobytes())
    h.update(mesh.face_uvs.tobytes())
    return h.hexdigest()
