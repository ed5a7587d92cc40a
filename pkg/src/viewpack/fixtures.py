"""Procedural test meshes and deterministic oracle textures.

Every generator returns a normalized Mesh with non-overlapping UV charts.
Randomized shapes take an explicit seed, so the corpus is reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import Mesh, normalize_mesh


class _Builder:
    """Accumulates vertices, UVs, and faces with per-corner UV indices."""

    def __init__(self):
        self.verts: list[tuple[float, float, float]] = []
        self.uvs: list[tuple[float, float]] = []
        self.faces: list[tuple[int, int, int]] = []
        self.face_uvs: list[tuple[int, int, int]] = []
        self._uv_cache: dict[tuple[float, float], int] = {}

    def vert(self, p) -> int:
        self.verts.append((float(p[0]), float(p[1]), float(p[2])))
        return len(self.verts) - 1

    def uv(self, u: float, v: float) -> int:
        key = (round(u, 9), round(v, 9))
        if key not in self._uv_cache:
            self._uv_cache[key] = len(self.uvs)
            self.uvs.append((u, v))
        return self._uv_cache[key]

    def tri(self, vi: tuple[int, int, int], ti: tuple[int, int, int]) -> None:
        self.faces.append(vi)
        self.face_uvs.append(ti)

    def merge(self, other: "_Builder") -> None:
        voff, toff = len(self.verts), len(self.uvs)
        self.verts.extend(other.verts)
        self.uvs.extend(other.uvs)
        self.faces.extend((a + voff, b + voff, c + voff) for a, b, c in other.faces)
        self.face_uvs.extend((a + toff, b + toff, c + toff) for a, b, c in other.face_uvs)

    def mesh(self, normalize: bool = True) -> Mesh:
        m = Mesh(
            np.array(self.verts, dtype=np.float64),
            np.array(self.faces, dtype=np.int32),
            np.array(self.uvs, dtype=np.float64),
            np.array(self.face_uvs, dtype=np.int32),
        )
        return normalize_mesh(m) if normalize else m


def _lathe(profile: list[tuple[float, float, float]], n_seg: int) -> Mesh:
    """Surface of revolution about +y from (radius, y, v) samples.

    The first and last profile samples must have radius 0 (the poles).
    Vertices wrap around the seam; only the UV table duplicates it.
    """
    b = _Builder()
    assert profile[0][0] == 0.0 and profile[-1][0] == 0.0
    rings = profile[1:-1]
    top = b.vert((0.0, profile[0][1], 0.0))
    ring_start = len(b.verts)
    for rad, y, _ in rings:
        for c in range(n_seg):
            phi = 2.0 * math.pi * c / n_seg
            b.vert((rad * math.cos(phi), y, rad * math.sin(phi)))
    bottom = b.vert((0.0, profile[-1][1], 0.0))

    def rv(r: int, c: int) -> int:
        return ring_start + r * n_seg + (c % n_seg)

    v_top, v_bot = profile[0][2], profile[-1][2]
    for c in range(n_seg):
        u0, u1 = c / n_seg, (c + 1) / n_seg
        um = 0.5 * (u0 + u1)
        # pole fans; +y pole cap winds so normals point outward
        b.tri(
            (top, rv(0, c + 1), rv(0, c)),
            (b.uv(um, v_top), b.uv(u1, rings[0][2]), b.uv(u0, rings[0][2])),
        )
        b.tri(
            (bottom, rv(len(rings) - 1, c), rv(len(rings) - 1, c + 1)),
            (
                b.uv(um, v_bot),
                b.uv(u0, rings[-1][2]),
                b.uv(u1, rings[-1][2]),
            ),
        )
        for r in range(len(rings) - 1):
            va, vb = rings[r][2], rings[r + 1][2]
            q00, q10 = rv(r, c), rv(r, c + 1)
            q01, q11 = rv(r + 1, c), rv(r + 1, c + 1)
            t00, t10 = b.uv(u0, va), b.uv(u1, va)
            t01, t11 = b.uv(u0, vb), b.uv(u1, vb)
            b.tri((q00, q10, q11), (t00, t10, t11))
            b.tri((q00, q11, q01), (t00, t11, t01))
    return b.mesh()


def uv_sphere(n_lat: int = 24, n_lon: int = 48) -> Mesh:
    profile = [(0.0, 1.0, 1.0)]
    for r in range(1, n_lat):
        theta = math.pi * r / n_lat
        profile.append((math.sin(theta), math.cos(theta), 1.0 - r / n_lat))
    profile.append((0.0, -1.0, 0.0))
    return _lathe(profile, n_lon)


def capsule(radius: float = 0.45, half_height: float = 0.55, n_seg: int = 40, n_arc: int = 10, n_cyl: int = 4) -> Mesh:
    samples: list[tuple[float, float]] = [(0.0, half_height + radius)]
    for i in range(1, n_arc + 1):
        a = math.pi / 2 * (1.0 - i / n_arc)
        samples.append((radius * math.cos(a), half_height + radius * math.sin(a)))
    for j in range(1, n_cyl):
        samples.append((radius, half_height - 2.0 * half_height * j / n_cyl))
    for i in range(n_arc + 1):
        a = math.pi / 2 * (i / n_arc)
        samples.append((radius * math.cos(a), -half_height - radius * math.sin(a)))
    samples[-1] = (0.0, -half_height - radius)
    # v runs by arc length from the top pole
    arc = [0.0]
    for (r0, y0), (r1, y1) in zip(samples, samples[1:]):
        arc.append(arc[-1] + math.hypot(r1 - r0, y1 - y0))
    total = arc[-1]
    profile = [(r, y, 1.0 - t / total) for (r, y), t in zip(samples, arc)]
    return _lathe(profile, n_seg)


def torus(major: float = 0.7, minor: float = 0.3, n_major: int = 36, n_minor: int = 18) -> Mesh:
    b = _Builder()

    def vid(a: int, m: int) -> int:
        return (a % n_major) * n_minor + (m % n_minor)

    for a in range(n_major):
        alpha = 2.0 * math.pi * a / n_major
        for m in range(n_minor):
            beta = 2.0 * math.pi * m / n_minor
            rad = major + minor * math.cos(beta)
            b.vert((rad * math.cos(alpha), minor * math.sin(beta), rad * math.sin(alpha)))
    for a in range(n_major):
        for m in range(n_minor):
            u0, u1 = a / n_major, (a + 1) / n_major
            v0, v1 = m / n_minor, (m + 1) / n_minor
            t00, t10 = b.uv(u0, v0), b.uv(u1, v0)
            t01, t11 = b.uv(u0, v1), b.uv(u1, v1)
            q00, q10 = vid(a, m), vid(a + 1, m)
            q01, q11 = vid(a, m + 1), vid(a + 1, m + 1)
            b.tri((q00, q11, q10), (t00, t11, t10))
            b.tri((q00, q01, q11), (t00, t01, t11))

    mesh = b.mesh(normalize=False)
    # orient outward: test one face normal against the tube-center direction
    tri = mesh.vertices[mesh.faces[0]]
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    center = tri.mean(axis=0)
    ring = center.copy()
    ring[1] = 0.0
    ring *= major / np.linalg.norm(ring)
    if float(n @ (center - ring)) < 0.0:
        faces = mesh.faces[:, [0, 2, 1]]
        fuvs = mesh.face_uvs[:, [0, 2, 1]]
        mesh = Mesh(mesh.vertices, faces, mesh.uv_coords, fuvs)
    return normalize_mesh(mesh)


def _chart_transform(points: np.ndarray, rect: tuple[float, float, float, float]) -> np.ndarray:
    """Uniformly fit 2D points into a UV sub-rectangle (x, y, w, h)."""
    lo = points.min(axis=0)
    span = max(float((points.max(axis=0) - lo).max()), 1e-12)
    rx, ry, rw, rh = rect
    scale = min(rw, rh) / span
    return np.stack([rx + (points[:, 0] - lo[0]) * scale, ry + (points[:, 1] - lo[1]) * scale], axis=1)


def extruded_prism(
    points2d: list[tuple[float, float]],
    height: float,
    cap_tris: list[tuple[int, int, int]] | None = None,
    uv_region: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
    normalize: bool = True,
) -> Mesh:
    """Extrude a 2D polygon (x, z plane, counter-clockwise) along y.

    cap_tris indexes the polygon points; by default a center fan is used,
    which covers any polygon star-shaped about the origin. UV charts: top and
    bottom caps in the upper half of uv_region, the unrolled side strip below.
    """
    pts = np.asarray(points2d, dtype=np.float64)
    k = len(pts)
    h2 = height / 2.0
    b = _Builder()
    ux, uy, uw, uh = uv_region

    use_fan = cap_tris is None
    cap_pts = np.vstack([pts, [[0.0, 0.0]]]) if use_fan else pts
    if use_fan:
        cap_tris = [(k, i, (i + 1) % k) for i in range(k)]

    top_uv = _chart_transform(cap_pts, (ux + 0.02 * uw, uy + 0.54 * uh, 0.44 * uw, 0.44 * uh))
    bot_uv = _chart_transform(cap_pts, (ux + 0.54 * uw, uy + 0.54 * uh, 0.44 * uw, 0.44 * uh))

    top_ids = [b.vert((p[0], h2, p[1])) for p in cap_pts]
    bot_ids = [b.vert((p[0], -h2, p[1])) for p in cap_pts]
    for (i, j, m) in cap_tris:
        # 2D counter-clockwise in (x, z) projects to -y; reverse on top
        b.tri(
            (top_ids[i], top_ids[m], top_ids[j]),
            (
                b.uv(*top_uv[i]),
                b.uv(*top_uv[m]),
                b.uv(*top_uv[j]),
            ),
        )
        b.tri(
            (bot_ids[i], bot_ids[j], bot_ids[m]),
            (b.uv(*bot_uv[i]), b.uv(*bot_uv[j]), b.uv(*bot_uv[m])),
        )

    edge_len = [float(np.linalg.norm(pts[(i + 1) % k] - pts[i])) for i in range(k)]
    cum = np.concatenate([[0.0], np.cumsum(edge_len)])
    cum /= cum[-1]
    strip = (ux + 0.02 * uw, uy + 0.02 * uh, 0.96 * uw, 0.48 * uh)
    for i in range(k):
        j = (i + 1) % k
        # side faces get their own vertices so normals stay flat
        b0 = b.vert((pts[i, 0], -h2, pts[i, 1]))
        b1 = b.vert((pts[j, 0], -h2, pts[j, 1]))
        t0 = b.vert((pts[i, 0], h2, pts[i, 1]))
        t1 = b.vert((pts[j, 0], h2, pts[j, 1]))
        u0 = strip[0] + cum[i] * strip[2]
        u1 = strip[0] + cum[i + 1] * strip[2]
        s00, s10 = b.uv(u0, strip[1]), b.uv(u1, strip[1])
        s01, s11 = b.uv(u0, strip[1] + strip[3]), b.uv(u1, strip[1] + strip[3])
        b.tri((b0, t0, t1), (s00, s01, s11))
        b.tri((b0, t1, b1), (s00, s11, s10))
    return b.mesh(normalize=normalize)


def box(
    half_extents: tuple[float, float, float] = (1.0, 1.0, 1.0),
    center: tuple[float, float, float] = (0.0, 0.0, 0.0),
    uv_region: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
    normalize: bool = True,
) -> Mesh:
    """Axis-aligned box with flat normals; six UV charts in a 3x2 grid."""
    hx, hy, hz = half_extents
    cx, cy, cz = center
    # (normal axis, sign, in-plane axes); a1 x a2 = +axis, so walking the
    # corners counter-clockwise gives outward normals after the sign mirror
    sides = [
        (0, +1, 1, 2),
        (0, -1, 1, 2),
        (1, +1, 2, 0),
        (1, -1, 2, 0),
        (2, +1, 0, 1),
        (2, -1, 0, 1),
    ]
    half = (hx, hy, hz)
    ux, uy, uw, uh = uv_region
    b = _Builder()
    for s, (axis, sign, a1, a2) in enumerate(sides):
        col, row = s % 3, s // 3
        rect = (
            ux + (col / 3 + 0.015) * uw,
            uy + (row / 2 + 0.02) * uh,
            uw * (1 / 3 - 0.03),
            uh * (1 / 2 - 0.04),
        )
        corners3d = []
        corners_uv = []
        for du, dv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            p = [cx, cy, cz]
            p[axis] += sign * half[axis]
            p[a1] += du * half[a1]
            p[a2] += (dv if sign > 0 else -dv) * half[a2]
            corners3d.append(tuple(p))
            corners_uv.append((rect[0] + (du + 1) / 2 * rect[2], rect[1] + (dv + 1) / 2 * rect[3]))
        ids = [b.vert(p) for p in corners3d]
        uvs = [b.uv(*t) for t in corners_uv]
        b.tri((ids[0], ids[1], ids[2]), (uvs[0], uvs[1], uvs[2]))
        b.tri((ids[0], ids[2], ids[3]), (uvs[0], uvs[2], uvs[3]))
    mesh = b.mesh(normalize=normalize)
    return mesh


def plate_identity(normalize: bool = False) -> Mesh:
    """Single-sided unit quad facing +z with the identity UV mapping."""
    verts = np.array(
        [(-1.0, -1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 0.0)]
    )
    uvs = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    faces = np.array([(0, 1, 2), (0, 2, 3)], dtype=np.int32)
    m = Mesh(verts, faces, uvs, faces.copy())
    return normalize_mesh(m) if normalize else m


def thin_plate(thickness: float = 0.01) -> Mesh:
    """Closed plate whose normalized thickness stays below the spread gate."""
    return box(half_extents=(1.0, 0.7, thickness / 2.0))


def l_bracket(height: float = 0.8) -> Mesh:
    pts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2), (0, 1)]
    pts = [(x - 0.9, z - 0.9) for x, z in pts]
    cap = [(0, 1, 2), (0, 2, 6), (6, 3, 4), (6, 4, 5)]
    return extruded_prism(pts, height, cap_tris=cap)


def two_plates() -> Mesh:
    """Closed front plate fully occluding a smaller rear plate from the frontal view.

    The front plate's UV charts live at u < 0.5, the rear plate's at u > 0.5.
    """
    front = box((0.8, 0.8, 0.04), (0.0, 0.0, 0.45), uv_region=(0.0, 0.0, 0.49, 1.0), normalize=False)
    rear = box((0.5, 0.5, 0.04), (0.0, 0.0, -0.45), uv_region=(0.51, 0.0, 0.49, 1.0), normalize=False)
    b = _Builder()
    for m in (front, rear):
        part = _Builder()
        part.verts = [tuple(v) for v in m.vertices]
        part.uvs = [tuple(t) for t in m.uv_coords]
        part.faces = [tuple(f) for f in m.faces]
        part.face_uvs = [tuple(f) for f in m.face_uvs]
        b.merge(part)
    return b.mesh(normalize=False)


def tetrahedron() -> Mesh:
    pts = np.array(
        [
            (0.83, 0.71, 0.62),
            (-0.73, -0.61, 0.88),
            (-0.52, 0.79, -0.67),
            (0.57, -0.86, -0.77),
        ]
    )
    center = pts.mean(axis=0)
    combos = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    b = _Builder()
    quad_rects = [(0.02, 0.02), (0.52, 0.02), (0.02, 0.52), (0.52, 0.52)]
    for fi, (i, j, m) in enumerate(combos):
        tri = pts[[i, j, m]]
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        if float(n @ (tri.mean(axis=0) - center)) < 0.0:
            tri = tri[[0, 2, 1]]
        ids = [b.vert(p) for p in tri]
        rx, ry = quad_rects[fi]
        uvs = [b.uv(rx, ry), b.uv(rx + 0.44, ry), b.uv(rx + 0.2, ry + 0.44)]
        b.tri(tuple(ids), tuple(uvs))
    return b.mesh()


def rotated_box(angle: float = 0.37) -> Mesh:
    m = box(half_extents=(0.9, 0.6, 0.4), normalize=False)
    axis = np.array([1.0, 2.0, 0.5])
    axis /= np.linalg.norm(axis)
    c, s = math.cos(angle), math.sin(angle)
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    rot = np.eye(3) + s * k + (1 - c) * (k @ k)
    rotated = Mesh(m.vertices @ rot.T, m.faces, m.uv_coords, m.face_uvs)
    return normalize_mesh(rotated)


def random_extrusion(seed: int) -> Mesh:
    rng = np.random.default_rng(seed)
    k = int(rng.integers(5, 10))
    angles = (np.arange(k) + rng.uniform(0.15, 0.85, size=k)) / k * 2.0 * math.pi
    radii = rng.uniform(0.45, 1.0, size=k)
    pts = [(r * math.cos(a), r * math.sin(a)) for r, a in zip(radii, angles)]
    height = float(rng.uniform(0.5, 1.7))
    return extruded_prism(pts, height)


def corpus_meshes() -> list[tuple[str, Mesh]]:
    """The 20-mesh evaluation corpus, deterministic and ordered by name."""
    meshes = [
        ("capsule", capsule()),
        ("cube", box(half_extents=(0.937, 0.71, 0.53))),
        ("l_bracket", l_bracket()),
        ("sphere", uv_sphere()),
        ("thin_plate", thin_plate()),
        ("torus", torus()),
    ]
    for i in range(14):
        meshes.append((f"extrusion_{i:02d}", random_extrusion(1000 + i)))
    return sorted(meshes, key=lambda kv: kv[0])


def procedural_texture(size: int = 1024) -> np.ndarray:
    """Smooth, deterministic RGB texture; low frequency so resampling is gentle."""
    u, v = np.meshgrid(
        (np.arange(size) + 0.5) / size, 1.0 - (np.arange(size) + 0.5) / size
    )
    r = 0.5 + 0.35 * np.sin(2 * np.pi * (1.3 * u + 0.7 * v) + 0.5)
    g = 0.5 + 0.35 * np.sin(2 * np.pi * (0.9 * u - 1.1 * v) + 2.1)
    b = 0.5 + 0.35 * np.cos(2 * np.pi * (0.5 * u + 1.7 * v) + 4.0)
    return np.stack([r, g, b], axis=2)


def checker_texture(size: int = 512, cols: int = 9, rows: int = 8) -> np.ndarray:
    u, v = np.meshgrid(np.arange(size), np.arange(size))
    cell = ((u * cols // size) + (v * rows // size)) % 2
    img = np.where(cell[..., None] == 1, 0.9, 0.1)
    return np.broadcast_to(img, (size, size, 3)).astype(np.float64).copy()
