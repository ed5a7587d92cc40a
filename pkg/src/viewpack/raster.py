"""Software orthographic rasterizer: per-view G-buffers and UV-space attribute maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DegenerateMeshError, Mesh
from .sampling import sample_bilinear
from .views import ViewSpec, canonical_views, ndc_to_pixel

# Depth value written where no geometry covers a pixel. Normalized meshes
# have |depth| <= sqrt(3), so this sentinel is unambiguously "background".
BACKGROUND_DEPTH = 4.0

# Inclusive edge coverage: barycentric coordinates this far outside still count.
_COVER_EPS = 1e-9
# A texel is "interior" to a UV triangle when all barycentrics clear this;
# used to tell genuinely overlapping charts from shared-edge coverage.
_INTERIOR_EPS = 1e-6


class OverlappingUvChartsError(Exception):
    """Two UV faces claim the same texel center strictly inside both."""


@dataclass(frozen=True)
class ViewGBuffer:
    """Raster maps of one orthographic view plus per-vertex projections.

    position_map: (H, W, 3) world coordinates, zero outside coverage
    normal_map: (H, W, 3) unit world normals, zero outside coverage
    alpha_map: (H, W) uint8, 1 exactly where a triangle covers the pixel center
    depth_map: (H, W) camera-space depth, BACKGROUND_DEPTH outside coverage
    vertex_ndc: (V, 3) per-vertex (ndc_x, ndc_y, depth), including occluded vertices
    """

    view: ViewSpec
    position_map: np.ndarray
    normal_map: np.ndarray
    alpha_map: np.ndarray
    depth_map: np.ndarray
    vertex_ndc: np.ndarray

    @property
    def resolution(self) -> tuple[int, int]:
        return self.alpha_map.shape


@dataclass(frozen=True)
class UvAttributeMaps:
    """Per-texel view attributes rasterized in UV space.

    ndc: (H, W, 2) view NDC of the texel's surface point
    depth: (H, W) camera-space depth of the surface point
    cam_normal: (H, W, 3) camera-space unit normal (+z toward the camera)
    position: (H, W, 3) world position of the surface point
    valid: (H, W) bool, texel center covered by a UV triangle
    """

    view: ViewSpec
    ndc: np.ndarray
    depth: np.ndarray
    cam_normal: np.ndarray
    position: np.ndarray
    valid: np.ndarray


def compute_ortho_scale(mesh: Mesh, margin_fraction: float = 0.05) -> float:
    """Smallest shared half-viewport scale fitting all six silhouettes with margin.

    margin_fraction of the viewport side is left free on each side; the
    silhouette half-extent is measured from projected vertices over the six
    canonical views.
    """
    if not 0.0 <= margin_fraction < 0.5:
        raise ValueError("margin_fraction must be in [0, 0.5)")
    if mesh.num_vertices == 0:
        raise DegenerateMeshError("mesh has no vertices")
    extent = 0.0
    for spec in canonical_views(1.0).values():
        proj = spec.project(mesh.vertices)
        extent = max(extent, float(np.abs(proj[:, :2]).max()))
    if extent < 1e-12:
        raise DegenerateMeshError("mesh projects to a point in every view")
    return extent / (1.0 - 2.0 * margin_fraction)


def _triangle_coverage(p: np.ndarray, height: int, width: int):
    """Pixels covered by one triangle given pixel-center coordinates (3, 2).

    Returns (rows, cols, l0, l1, l2) flat arrays, or None when the triangle is
    degenerate in this projection or misses every pixel center.
    """
    v0 = p[1] - p[0]
    v1 = p[2] - p[0]
    denom = v0[0] * v1[1] - v0[1] * v1[0]
    if abs(denom) < 1e-12:
        return None
    c0 = max(int(np.ceil(p[:, 0].min() - 1e-9)), 0)
    c1 = min(int(np.floor(p[:, 0].max() + 1e-9)), width - 1)
    r0 = max(int(np.ceil(p[:, 1].min() - 1e-9)), 0)
    r1 = min(int(np.floor(p[:, 1].max() + 1e-9)), height - 1)
    if c0 > c1 or r0 > r1:
        return None
    cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    dx = cols - p[0, 0]
    dy = rows - p[0, 1]
    l1 = (dx * v1[1] - dy * v1[0]) / denom
    l2 = (v0[0] * dy - v0[1] * dx) / denom
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -_COVER_EPS) & (l1 >= -_COVER_EPS) & (l2 >= -_COVER_EPS)
    if not inside.any():
        return None
    return rows[inside], cols[inside], l0[inside], l1[inside], l2[inside]


def render_view(mesh: Mesh, view: ViewSpec, resolution: int) -> ViewGBuffer:
    """Rasterize the mesh orthographically into a square G-buffer.

    Nearest fragment wins the depth test; exact depth ties keep the lower
    triangle index. Attributes are barycentrically interpolated; normals are
    renormalized after interpolation.
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    h = w = resolution
    vert_ndc = view.project(mesh.vertices)
    vert_px = ndc_to_pixel(vert_ndc[:, :2], w, h)

    depth = np.full((h, w), BACKGROUND_DEPTH, dtype=np.float64)
    position = np.zeros((h, w, 3), dtype=np.float64)
    normal = np.zeros((h, w, 3), dtype=np.float64)
    alpha = np.zeros((h, w), dtype=np.uint8)

    for face, fuv in zip(mesh.faces, mesh.face_uvs):
        cov = _triangle_coverage(vert_px[face], h, w)
        if cov is None:
            continue
        rows, cols, l0, l1, l2 = cov
        d = l0 * vert_ndc[face[0], 2] + l1 * vert_ndc[face[1], 2] + l2 * vert_ndc[face[2], 2]
        closer = d < depth[rows, cols]
        if not closer.any():
            continue
        rows, cols = rows[closer], cols[closer]
        lam = np.stack([l0[closer], l1[closer], l2[closer]], axis=1)
        depth[rows, cols] = d[closer]
        position[rows, cols] = lam @ mesh.vertices[face]
        normal[rows, cols] = lam @ mesh.normals[face]
        alpha[rows, cols] = 1

    lengths = np.linalg.norm(normal, axis=2, keepdims=True)
    np.divide(normal, lengths, out=normal, where=lengths > 1e-20)
    return ViewGBuffer(view, position, normal, alpha, depth, vert_ndc)


def render_all_views(mesh: Mesh, ortho_scale: float, resolution: int) -> dict[str, ViewGBuffer]:
    """G-buffers for all six canonical views at a shared scale."""
    return {
        vid: render_view(mesh, spec, resolution)
        for vid, spec in canonical_views(ortho_scale).items()
    }


def render_textured_view(
    mesh: Mesh, texture: np.ndarray, view: ViewSpec, resolution: int
) -> tuple[np.ndarray, np.ndarray]:
    """Render the mesh with a UV texture; returns (image (H, W, 3), alpha (H, W)).

    Per-pixel UV is barycentrically interpolated from corner UVs and the
    texture sampled bilinearly. Background is black with alpha 0.
    """
    if texture.ndim != 3 or texture.size == 0:
        raise ValueError("texture must be a nonempty (H, W, C) array")
    h = w = resolution
    vert_ndc = view.project(mesh.vertices)
    vert_px = ndc_to_pixel(vert_ndc[:, :2], w, h)
    corner_uv = mesh.corner_uvs()

    depth = np.full((h, w), BACKGROUND_DEPTH, dtype=np.float64)
    uv_buf = np.zeros((h, w, 2), dtype=np.float64)
    alpha = np.zeros((h, w), dtype=np.uint8)

    for idx, face in enumerate(mesh.faces):
        cov = _triangle_coverage(vert_px[face], h, w)
        if cov is None:
            continue
        rows, cols, l0, l1, l2 = cov
        d = l0 * vert_ndc[face[0], 2] + l1 * vert_ndc[face[1], 2] + l2 * vert_ndc[face[2], 2]
        closer = d < depth[rows, cols]
        if not closer.any():
            continue
        rows, cols = rows[closer], cols[closer]
        lam = np.stack([l0[closer], l1[closer], l2[closer]], axis=1)
        depth[rows, cols] = d[closer]
        uv_buf[rows, cols] = lam @ corner_uv[idx]
        alpha[rows, cols] = 1

    image = np.zeros((h, w, texture.shape[2]), dtype=np.float64)
    fg = alpha == 1
    if fg.any():
        th, tw = texture.shape[:2]
        tx = uv_buf[fg, 0] * tw - 0.5
        ty = (1.0 - uv_buf[fg, 1]) * th - 0.5
        image[fg] = sample_bilinear(np.asarray(texture, dtype=np.float64), tx, ty)
    return image, alpha


def rasterize_uv_attributes(mesh: Mesh, view: ViewSpec, uv_resolution: int) -> UvAttributeMaps:
    """Rasterize view NDC, depth, camera-space normal, and position into UV space.

    UV triangles act as screen triangles; covered texels hold the
    barycentrically interpolated attributes of their surface point. Raises
    OverlappingUvChartsError when two faces both claim a texel interior.
    """
    h = w = uv_resolution
    vert_ndc = view.project(mesh.vertices)
    cam_normals = view.camera_normals(mesh.normals)
    corner_uv = mesh.corner_uvs()
    # UV (u, v) -> pixel-center coords; v = 1 is the top row
    uv_px = np.empty_like(corner_uv)
    uv_px[:, :, 0] = corner_uv[:, :, 0] * w - 0.5
    uv_px[:, :, 1] = (1.0 - corner_uv[:, :, 1]) * h - 0.5

    ndc = np.zeros((h, w, 2), dtype=np.float64)
    depth = np.zeros((h, w), dtype=np.float64)
    normal = np.zeros((h, w, 3), dtype=np.float64)
    position = np.zeros((h, w, 3), dtype=np.float64)
    valid = np.zeros((h, w), dtype=bool)
    interior_count = np.zeros((h, w), dtype=np.int32)

    for idx, face in enumerate(mesh.faces):
        cov = _triangle_coverage(uv_px[idx], h, w)
        if cov is None:
            continue
        rows, cols, l0, l1, l2 = cov
        interior = (l0 > _INTERIOR_EPS) & (l1 > _INTERIOR_EPS) & (l2 > _INTERIOR_EPS)
        interior_count[rows[interior], cols[interior]] += 1
        fresh = ~valid[rows, cols]
        if fresh.any():
            rows, cols = rows[fresh], cols[fresh]
            lam = np.stack([l0[fresh], l1[fresh], l2[fresh]], axis=1)
            ndc[rows, cols] = lam @ vert_ndc[face, :2]
            depth[rows, cols] = lam @ vert_ndc[face, 2]
            normal[rows, cols] = lam @ cam_normals[face]
            position[rows, cols] = lam @ mesh.vertices[face]
            valid[rows, cols] = True

    if (interior_count > 1).any():
        n_bad = int((interior_count > 1).sum())
        raise OverlappingUvChartsError(
            f"{n_bad} texel(s) covered by more than one UV chart"
        )

    lengths = np.linalg.norm(normal, axis=2, keepdims=True)
    np.divide(normal, lengths, out=normal, where=lengths > 1e-20)
    return UvAttributeMaps(view, ndc, depth, normal, position, valid)
