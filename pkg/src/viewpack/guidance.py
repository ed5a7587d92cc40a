"""Spread a single-view guidance image to geometrically matching pixels of other views."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .compose import compose_images
from .packing import PackingLayout
from .raster import ViewGBuffer
from .views import GUIDANCE_CANDIDATE_VIEWS, VIEW_IDS

DEFAULT_POSITION_THRESHOLD = 0.02
DEFAULT_NORMAL_ANGLE_DEG = 45.0


@dataclass
class SpreadMatch:
    """Debug record of one target view's accepted correspondences."""

    target_rows: np.ndarray
    target_cols: np.ndarray
    source_indices: np.ndarray
    distances: np.ndarray
    normal_cosines: np.ndarray


@dataclass
class GuidanceField:
    """Single-view guidance composed onto the atlas after spreading."""

    source_view: str
    source_image: np.ndarray
    spread_atlas: np.ndarray
    spread_mask: np.ndarray
    view_images: dict[str, np.ndarray] = field(default_factory=dict)
    view_masks: dict[str, np.ndarray] = field(default_factory=dict)
    matches: dict[str, SpreadMatch] = field(default_factory=dict)


def select_guidance_view(alpha_maps: dict[str, np.ndarray]) -> str:
    """Pick the candidate view (frontal, left, top) with the most coverage.

    Ties go to the earlier view in the candidate order.
    """
    best = None
    best_count = -1
    for vid in GUIDANCE_CANDIDATE_VIEWS:
        count = int(np.count_nonzero(alpha_maps[vid]))
        if count > best_count:
            best, best_count = vid, count
    return best


def spread_guidance(
    source_view: str,
    image: np.ndarray,
    gbuffers: dict[str, ViewGBuffer],
    layout: PackingLayout,
    position_threshold: float = DEFAULT_POSITION_THRESHOLD,
    normal_angle_deg: float = DEFAULT_NORMAL_ANGLE_DEG,
    use_kdtree: bool = True,
    keep_matches: bool = False,
) -> GuidanceField:
    """Copy source-view colors to matching foreground pixels of the other views.

    A nearest-neighbor index over the source view's 3D positions answers one
    query per target pixel; the color is copied verbatim iff the position
    distance stays under ``position_threshold`` and the world normals agree
    within ``normal_angle_deg``. The per-view results (and the source image
    itself) are then composed onto the atlas through the layout.
    """
    src = gbuffers[source_view]
    if image.shape[:2] != src.alpha_map.shape:
        raise ValueError("guidance image resolution must match the source view render")
    src_fg = src.alpha_map == 1
    if not src_fg.any():
        raise ValueError("source view has empty foreground")

    src_pos = src.position_map[src_fg]
    src_nrm = src.normal_map[src_fg]
    src_col = np.asarray(image, dtype=np.float64)[src_fg]
    tree = cKDTree(src_pos) if use_kdtree else None
    cos_gate = float(np.cos(np.deg2rad(normal_angle_deg)))

    view_images: dict[str, np.ndarray] = {}
    view_masks: dict[str, np.ndarray] = {}
    matches: dict[str, SpreadMatch] = {}

    for vid in VIEW_IDS:
        gb = gbuffers[vid]
        out = np.zeros(gb.position_map.shape[:2] + (3,), dtype=np.float64)
        mask = np.zeros(gb.alpha_map.shape, dtype=np.uint8)
        if vid == source_view:
            out[src_fg] = src_col
            mask[src_fg] = 1
        else:
            fg = gb.alpha_map == 1
            if fg.any():
                pos = gb.position_map[fg]
                nrm = gb.normal_map[fg]
                if tree is not None:
                    dist, idx = tree.query(pos, workers=-1)
                else:
                    # brute-force path kept for small oracle comparisons;
                    # argmin takes the lowest source index on exact ties
                    d2 = ((pos[:, None, :] - src_pos[None, :, :]) ** 2).sum(axis=2)
                    idx = np.argmin(d2, axis=1)
                    dist = np.sqrt(d2[np.arange(len(idx)), idx])
                cosine = (nrm * src_nrm[idx]).sum(axis=1)
                accept = (dist < position_threshold) & (cosine > cos_gate)
                rows, cols = np.nonzero(fg)
                rows, cols = rows[accept], cols[accept]
                out[rows, cols] = src_col[idx[accept]]
                mask[rows, cols] = 1
                if keep_matches:
                    matches[vid] = SpreadMatch(
                        rows, cols, idx[accept], dist[accept], cosine[accept]
                    )
        view_images[vid] = out
        view_masks[vid] = mask

    spread_atlas = compose_images(view_images, layout, method="bilinear")
    mask_atlas = compose_images(view_masks, layout, method="nearest")
    alpha_atlas = compose_images(
        {v: gbuffers[v].alpha_map for v in VIEW_IDS}, layout, method="nearest"
    )
    spread_mask = (mask_atlas == 1) & (alpha_atlas == 1)

    return GuidanceField(
        source_view=source_view,
        source_image=np.asarray(image, dtype=np.float64),
        spread_atlas=spread_atlas,
        spread_mask=spread_mask,
        view_images=view_images,
        view_masks=view_masks,
        matches=matches,
    )
