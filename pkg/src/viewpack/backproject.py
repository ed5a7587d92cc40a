"""Project packed multi-view textures into UV space with weighted fusion.

Each UV texel knows its view NDC, camera depth, and camera-space normal from
the UV rasterization; sampling the atlas at the remapped NDC yields per-view
colors that are fused with occlusion-, view-angle-, and discontinuity-aware
weights. Texels unseen from every view are filled from their nearest valid
neighbor afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .compose import remap_ndc
from .mesh import Mesh
from .packing import PackingLayout
from .raster import UvAttributeMaps, rasterize_uv_attributes
from .sampling import sample_bilinear, sample_nearest
from .views import VIEW_IDS, canonical_views

DEFAULT_DEPTH_TOLERANCE = 1e-3
DEFAULT_EDGE_THRESHOLD = 0.05
DEFAULT_EDGE_DILATION = 2


@dataclass
class UvTexture:
    """Fused per-texel attribute map in UV space.

    valid_mask marks texels with positive fused weight (before hole filling)
    or the full UV coverage (after).
    """

    data: np.ndarray
    valid_mask: np.ndarray
    weight_sum: np.ndarray


@dataclass(frozen=True)
class FusionWeights:
    """Per-texel fusion factors of one view; total is their product."""

    visibility: np.ndarray
    angle: np.ndarray
    continuity: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.visibility * self.angle * self.continuity


def sample_atlas_to_uv(
    atlas_channel: np.ndarray, packed_ndc: np.ndarray, valid: np.ndarray
) -> np.ndarray:
    """Bilinear-sample an atlas channel at each valid texel's packed NDC."""
    h, w = valid.shape
    shape = (h, w) + atlas_channel.shape[2:]
    out = np.zeros(shape, dtype=np.float64)
    if valid.any():
        aw = atlas_channel.shape[1]
        ah = atlas_channel.shape[0]
        x = (packed_ndc[valid, 0] + 1.0) * 0.5 * aw - 0.5
        y = (1.0 - packed_ndc[valid, 1]) * 0.5 * ah - 0.5
        out[valid] = sample_bilinear(np.asarray(atlas_channel, dtype=np.float64), x, y)
    return out


def detect_depth_edges(
    depth_atlas: np.ndarray,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
    alpha_atlas: np.ndarray | None = None,
    dilation: int = DEFAULT_EDGE_DILATION,
) -> np.ndarray:
    """Depth-discontinuity mask: 8-neighbor max difference, then dilation.

    Background carries a far sentinel depth, so silhouettes always trip the
    threshold; with an alpha map the edge seed is restricted to foreground
    before dilating (the dilated band then covers both sides).
    """
    d = np.asarray(depth_atlas, dtype=np.float64)
    pad = np.pad(d, 1, mode="edge")
    max_diff = np.zeros_like(d)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            shifted = pad[1 + dy : 1 + dy + d.shape[0], 1 + dx : 1 + dx + d.shape[1]]
            np.maximum(max_diff, np.abs(d - shifted), out=max_diff)
    edges = max_diff > threshold
    if alpha_atlas is not None:
        edges &= alpha_atlas == 1
    if dilation > 0:
        edges = ndimage.binary_dilation(edges, iterations=dilation)
    return edges


def compute_fusion_weights(
    sampled_depth: np.ndarray,
    texel_depth: np.ndarray,
    cam_normal: np.ndarray,
    discontinuity: np.ndarray,
    valid: np.ndarray,
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE,
) -> FusionWeights:
    """Visibility x squared-cosine x continuity weights for one view.

    A texel is invisible when the depth sampled from the atlas is nearer
    than the texel's own depth beyond the tolerance; the angle factor is
    clamp(cos, 0, 1)^2 with cos taken from the camera-space normal z; the
    continuity factor zeroes texels whose sample lands in the dilated
    depth-edge band.
    """
    visibility = np.where(
        valid & (sampled_depth >= texel_depth - depth_tolerance), 1.0, 0.0
    )
    cosine = np.clip(cam_normal[..., 2], 0.0, 1.0)
    angle = cosine * cosine
    continuity = np.where(valid & ~discontinuity, 1.0, 0.0)
    return FusionWeights(visibility, angle, continuity)


def fuse_views(
    images: list[np.ndarray], weights: list[np.ndarray]
) -> UvTexture:
    """Weighted per-texel average across views; zero-weight texels stay invalid."""
    if len(images) != len(weights) or not images:
        raise ValueError("need matching, nonempty image and weight lists")
    acc = np.zeros_like(np.asarray(images[0], dtype=np.float64))
    wsum = np.zeros(acc.shape[:2], dtype=np.float64)
    for img, wgt in zip(images, weights):
        w = np.asarray(wgt, dtype=np.float64)
        a = np.asarray(img, dtype=np.float64)
        acc += a * (w[..., None] if a.ndim == 3 else w)
        wsum += w
    valid = wsum > 0.0
    data = np.zeros_like(acc)
    if data.ndim == 3:
        data[valid] = acc[valid] / wsum[valid][:, None]
    else:
        data[valid] = acc[valid] / wsum[valid]
    return UvTexture(data, valid, wsum)


def fill_holes(texture: UvTexture, coverage: np.ndarray) -> UvTexture:
    """Fill covered-but-invalid texels from the nearest valid texel.

    Distance is chessboard (8-neighborhood rounds); equidistant sources
    resolve to the lowest row-major index, matching a brute-force
    nearest-valid search. Valid texels are never modified.
    """
    h, w = texture.valid_mask.shape
    n = h * w
    src = np.full((h, w), -1, dtype=np.int64)
    idx = np.arange(n, dtype=np.int64).reshape(h, w)
    src[texture.valid_mask] = idx[texture.valid_mask]

    target = coverage & ~texture.valid_mask
    while target.any():
        padded = np.pad(src, 1, mode="constant", constant_values=-1)
        best = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                neigh = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
                cand = np.where(neigh >= 0, neigh, np.iinfo(np.int64).max)
                np.minimum(best, cand, out=best)
        new = target & (best < np.iinfo(np.int64).max)
        if not new.any():
            break  # covered region disconnected from any valid texel
        src[new] = best[new]
        target &= ~new

    data = texture.data.copy()
    filled = coverage & ~texture.valid_mask & (src >= 0)
    if data.ndim == 3:
        data[filled] = texture.data.reshape(n, data.shape[2])[src[filled]]
    else:
        data[filled] = texture.data.reshape(n)[src[filled]]
    valid = texture.valid_mask | filled
    return UvTexture(data, valid, texture.weight_sum.copy())


@dataclass
class ViewBackProjection:
    """Intermediate per-view products, retained for inspection and tests."""

    view_id: str
    uv_attrs: UvAttributeMaps
    sampled: np.ndarray
    sampled_depth: np.ndarray
    weights: FusionWeights


def back_project(
    mesh: Mesh,
    layout: PackingLayout,
    texture_atlas: np.ndarray,
    depth_atlas: np.ndarray,
    alpha_atlas: np.ndarray,
    uv_resolution: int,
    ortho_scale: float | None = None,
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
    edge_dilation: int = DEFAULT_EDGE_DILATION,
    fill: bool = True,
) -> tuple[UvTexture, list[ViewBackProjection]]:
    """Full back-projection of a packed texture atlas into UV space.

    Returns the fused texture plus the per-view sampling/weight products.
    The UV coverage mask (identical across views) drives hole filling.
    """
    scale = ortho_scale if ortho_scale is not None else layout.ortho_scale
    if scale is None:
        raise ValueError("ortho_scale required (argument or layout metadata)")
    specs = canonical_views(scale)
    edge_mask = detect_depth_edges(
        depth_atlas, edge_threshold, alpha_atlas=alpha_atlas, dilation=edge_dilation
    ).astype(np.float64)

    per_view: list[ViewBackProjection] = []
    images = []
    totals = []
    coverage = None
    for vid in VIEW_IDS:
        attrs = rasterize_uv_attributes(mesh, specs[vid], uv_resolution)
        entry = layout.entry(vid)
        packed = remap_ndc(attrs.ndc, entry, layout)
        sampled = sample_atlas_to_uv(texture_atlas, packed, attrs.valid)
        sampled_depth = sample_atlas_to_uv(depth_atlas, packed, attrs.valid)
        ah, aw = depth_atlas.shape[:2]
        ex = (packed[attrs.valid, 0] + 1.0) * 0.5 * aw - 0.5
        ey = (1.0 - packed[attrs.valid, 1]) * 0.5 * ah - 0.5
        edge_hit = np.zeros(attrs.valid.shape, dtype=bool)
        edge_hit[attrs.valid] = sample_nearest(edge_mask, ex, ey) > 0.5
        weights = compute_fusion_weights(
            sampled_depth,
            attrs.depth,
            attrs.cam_normal,
            edge_hit,
            attrs.valid,
            depth_tolerance,
        )
        per_view.append(ViewBackProjection(vid, attrs, sampled, sampled_depth, weights))
        images.append(sampled)
        totals.append(weights.total)
        coverage = attrs.valid if coverage is None else coverage

    fused = fuse_views(images, totals)
    if fill:
        fused = fill_holes(fused, coverage)
    return fused, per_view
