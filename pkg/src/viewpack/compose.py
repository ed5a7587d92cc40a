"""Atlas composition from per-view maps and NDC remapping into atlas space."""

from __future__ import annotations

import numpy as np

from .packing import Atlas, PackingLayout, ViewPlacement
from .raster import BACKGROUND_DEPTH, ViewGBuffer
from .sampling import resize_bilinear, resize_nearest
from .views import VIEW_IDS


def _resample_crop(
    image: np.ndarray, entry: ViewPlacement, method: str
) -> np.ndarray:
    """Crop the view image to the source bbox, scale it, rotate if flagged."""
    bx, by, bw, bh = entry.source_bbox
    crop = image[by : by + bh, bx : bx + bw]
    sw, sh = entry.content_size()
    if method == "nearest":
        out = resize_nearest(crop, sh, sw)
    else:
        out = resize_bilinear(crop, sh, sw)
    if entry.rotated:
        out = np.rot90(out, k=1)
    return out


def compose_images(
    images: dict[str, np.ndarray],
    layout: PackingLayout,
    method: str = "bilinear",
    background: float = 0.0,
    channels: int | None = None,
) -> np.ndarray:
    """Place per-view images (full render resolution) onto a fresh atlas array.

    Views absent from ``images`` leave their cells at the background value.
    """
    sample = next(iter(images.values()))
    if channels is None:
        channels = sample.shape[2] if sample.ndim == 3 else 0
    shape = (layout.atlas_height, layout.atlas_width) + ((channels,) if channels else ())
    dtype = np.uint8 if sample.dtype == np.uint8 else np.float64
    atlas = np.full(shape, background, dtype=dtype)
    for entry in layout.views:
        img = images.get(entry.view_id)
        if img is None:
            continue
        content = _resample_crop(img, entry, method)
        ox, oy = entry.atlas_offset
        ch, cw = content.shape[:2]
        atlas[oy : oy + ch, ox : ox + cw] = content
    return atlas


def compose_atlas(
    gbuffers: dict[str, ViewGBuffer],
    layout: PackingLayout,
    guidance_images: dict[str, np.ndarray] | None = None,
) -> Atlas:
    """Resample every view's G-buffer crop onto the shared atlas.

    Continuous channels (position, normal, depth, guidance) are resampled
    bilinearly; alpha uses nearest so coverage stays binary.
    """
    position = compose_images(
        {v: gbuffers[v].position_map for v in VIEW_IDS}, layout
    )
    normal = compose_images({v: gbuffers[v].normal_map for v in VIEW_IDS}, layout)
    depth = compose_images(
        {v: gbuffers[v].depth_map for v in VIEW_IDS},
        layout,
        background=BACKGROUND_DEPTH,
    )
    alpha = compose_images(
        {v: gbuffers[v].alpha_map for v in VIEW_IDS}, layout, method="nearest"
    )
    guidance = None
    if guidance_images:
        guidance = compose_images(guidance_images, layout, channels=3)
    return Atlas(position, normal, alpha, depth, guidance, layout)


def remap_ndc(
    ndc_xy: np.ndarray, entry: ViewPlacement, layout: PackingLayout
) -> np.ndarray:
    """Map view NDC (+y up, [-1,1]^2) to atlas NDC over the full atlas.

    The affine chain mirrors composition exactly: view pixel -> bbox crop ->
    scaled content (half-pixel-centered resize) -> optional 90-degree
    counter-clockwise rotation -> atlas offset.
    """
    res = layout.source_resolution
    bx, by, bw, bh = entry.source_bbox
    sw, sh = entry.content_size()
    xy = np.asarray(ndc_xy, dtype=np.float64)

    px = (xy[..., 0] + 1.0) * 0.5 * res - 0.5
    py = (1.0 - xy[..., 1]) * 0.5 * res - 0.5
    cx = (px - bx + 0.5) * (sw / bw) - 0.5
    cy = (py - by + 0.5) * (sh / bh) - 0.5
    if entry.rotated:
        cx, cy = cy, (sw - 1.0) - cx
    ox, oy = entry.atlas_offset
    ax = ox + cx
    ay = oy + cy
    u = (ax + 0.5) / layout.atlas_width * 2.0 - 1.0
    v = 1.0 - (ay + 0.5) / layout.atlas_height * 2.0
    return np.stack([u, v], axis=-1)


def remap_vertex_ndc(
    vertex_ndc: dict[str, np.ndarray], layout: PackingLayout
) -> dict[str, np.ndarray]:
    """Per-view vertex NDCs (N, 3) re-expressed in atlas coordinates.

    Depth passes through unchanged; a vertex visible in a view lands inside
    that view's packed cell.
    """
    out = {}
    for vid, ndc in vertex_ndc.items():
        entry = layout.entry(vid)
        xy = remap_ndc(ndc[:, :2], entry, layout)
        out[vid] = np.concatenate([xy, ndc[:, 2:3]], axis=1)
    return out
