"""View packing: place six view bounding boxes onto one atlas.

A global enlargement ratio is binary-searched between a guaranteed-feasible
regular-tiling scale and an area/side-length upper bound, with MaxRects
feasibility probes; opposing view pairs are then greedily enlarged further,
largest first, up to a 2x cap. Composition resamples each view's bounding-box
crop onto the atlas and the per-vertex NDCs are remapped to match.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .binpack import Placement, RectSpec, pack_all
from .raster import BACKGROUND_DEPTH, ViewGBuffer
from .views import OPPOSING_PAIRS, ROTATABLE_VIEWS, VIEW_IDS

DEFAULT_ATLAS = (832, 1248)
SMALL_ATLAS = (224, 336)
DEFAULT_PATCH = 16
PAIR_SCALE_CAP = 2.0
MAX_GLOBAL_PROBES = 8
MAX_PAIR_PROBES = 5

# quantization guard: cell counts use ceil and must not jump on float noise
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class ViewPlacement:
    """Placement of one view on the atlas, all values in pixels."""

    view_id: str
    source_bbox: tuple[int, int, int, int]
    scale: float
    rotated: bool
    atlas_offset: tuple[int, int]
    cell: tuple[int, int]

    def content_size(self) -> tuple[int, int]:
        """Resampled crop size (w, h) before rotation."""
        _, _, bw, bh = self.source_bbox
        return (
            max(1, int(round(bw * self.scale))),
            max(1, int(round(bh * self.scale))),
        )


@dataclass(frozen=True)
class PackingLayout:
    """Full placement of the six views plus atlas geometry metadata."""

    atlas_width: int
    atlas_height: int
    patch_size: int
    source_resolution: int
    global_scale: float
    views: tuple[ViewPlacement, ...]
    mode: str = "pack"
    ortho_scale: float | None = None
    mesh_hash: str | None = None

    def entry(self, view_id: str) -> ViewPlacement:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise KeyError(view_id)

    def to_json(self) -> str:
        doc = {
            "atlas": [self.atlas_width, self.atlas_height],
            "patch": self.patch_size,
            "source_resolution": self.source_resolution,
            "global_scale": self.global_scale,
            "mode": self.mode,
            "ortho_scale": self.ortho_scale,
            "mesh_hash": self.mesh_hash,
            "views": [
                {
                    "id": v.view_id,
                    "bbox": list(v.source_bbox),
                    "scale": v.scale,
                    "rotated": v.rotated,
                    "offset": list(v.atlas_offset),
                    "cell": list(v.cell),
                }
                for v in self.views
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PackingLayout":
        doc = json.loads(text)
        views = tuple(
            ViewPlacement(
                view_id=v["id"],
                source_bbox=tuple(v["bbox"]),
                scale=float(v["scale"]),
                rotated=bool(v["rotated"]),
                atlas_offset=tuple(v["offset"]),
                cell=tuple(v["cell"]),
            )
            for v in doc["views"]
        )
        return cls(
            atlas_width=doc["atlas"][0],
            atlas_height=doc["atlas"][1],
            patch_size=doc["patch"],
            source_resolution=doc["source_resolution"],
            global_scale=float(doc["global_scale"]),
            views=views,
            mode=doc.get("mode", "pack"),
            ortho_scale=doc.get("ortho_scale"),
            mesh_hash=doc.get("mesh_hash"),
        )


@dataclass(frozen=True)
class Atlas:
    """Packed multi-view raster maps sharing one coordinate frame."""

    position_map: np.ndarray
    normal_map: np.ndarray
    alpha_map: np.ndarray
    depth_map: np.ndarray
    guidance_map: np.ndarray | None
    layout: PackingLayout


@dataclass
class PackStats:
    """Search diagnostics: probe budgets and the ratios that were fixed."""

    tiling_scale: float
    upper_bound: float
    global_scale: float
    global_probes: int
    pair_ratios: dict[str, float] = field(default_factory=dict)
    pair_probes: dict[str, int] = field(default_factory=dict)


def pair_of(view_id: str) -> tuple[str, str]:
    for pair in OPPOSING_PAIRS:
        if view_id in pair:
            return pair
    raise KeyError(view_id)


def _pair_name(pair: tuple[str, str]) -> str:
    return "/".join(pair)


def compute_view_bboxes(
    gbuffers: dict[str, ViewGBuffer]
) -> dict[str, tuple[int, int, int, int]]:
    """Tight alpha bounding boxes (x, y, w, h), snapped equal across view pairs.

    Empty views fall back to a 1x1 box at the image center. Opposing views
    must agree in box size within 1 pixel (orthographic mirror symmetry);
    each pair is snapped to the elementwise max.
    """
    boxes: dict[str, tuple[int, int, int, int]] = {}
    for vid in VIEW_IDS:
        alpha = gbuffers[vid].alpha_map
        h, w = alpha.shape
        rows = np.flatnonzero(alpha.any(axis=1))
        cols = np.flatnonzero(alpha.any(axis=0))
        if rows.size == 0:
            boxes[vid] = (w // 2, h // 2, 1, 1)
        else:
            boxes[vid] = (
                int(cols[0]),
                int(rows[0]),
                int(cols[-1] - cols[0] + 1),
                int(rows[-1] - rows[0] + 1),
            )
    for pair in OPPOSING_PAIRS:
        (xa, ya, wa, ha) = boxes[pair[0]]
        (xb, yb, wb, hb) = boxes[pair[1]]
        if abs(wa - wb) > 1 or abs(ha - hb) > 1:
            raise ValueError(
                f"views {pair[0]}/{pair[1]} have mismatched silhouette boxes: "
                f"{(wa, ha)} vs {(wb, hb)}"
            )
        w = max(wa, wb)
        h = max(ha, hb)
        res = gbuffers[pair[0]].alpha_map.shape[1]
        for vid, (x, y) in ((pair[0], (xa, ya)), (pair[1], (xb, yb))):
            boxes[vid] = (min(x, res - w), min(y, res - h), w, h)
    return boxes


def _grid_shape(atlas_w: int, atlas_h: int) -> tuple[int, int]:
    """(cols, rows) of the regular tiling for this atlas orientation."""
    return (2, 3) if atlas_h >= atlas_w else (3, 2)


def _slot_cells(atlas_w: int, atlas_h: int, patch: int) -> tuple[int, int]:
    cols, rows = _grid_shape(atlas_w, atlas_h)
    return (atlas_w // patch) // cols, (atlas_h // patch) // rows


def tiling_scale(
    bboxes: dict[str, tuple[int, int, int, int]],
    atlas_w: int,
    atlas_h: int,
    patch: int,
) -> float:
    """Largest scale at which every padded box fits one regular-tiling slot."""
    sw, sh = _slot_cells(atlas_w, atlas_h, patch)
    slot_w, slot_h = sw * patch, sh * patch
    return min(
        min(slot_w / bw, slot_h / bh) for (_, _, bw, bh) in bboxes.values()
    )


def _cells_for(
    bboxes: dict[str, tuple[int, int, int, int]],
    view_scales: dict[str, float],
    patch: int,
) -> dict[str, tuple[int, int]]:
    cells = {}
    for vid, (_, _, bw, bh) in bboxes.items():
        s = view_scales[vid]
        cells[vid] = (
            max(1, math.ceil(bw * s / patch - _CEIL_EPS)),
            max(1, math.ceil(bh * s / patch - _CEIL_EPS)),
        )
    return cells


_ROTATION_COMBOS = (
    (False, False),
    (True, False),
    (False, True),
    (True, True),
)


class _FeasibilityProbe:
    """MaxRects feasibility probe over rotation states, with a grid fallback.

    Results are memoized by cell dimensions, so re-probing a scale that
    quantizes to previously seen cells is free and consistent.
    """

    def __init__(self, atlas_w: int, atlas_h: int, patch: int):
        self.bin_w = atlas_w // patch
        self.bin_h = atlas_h // patch
        self.patch = patch
        self.slot = _slot_cells(atlas_w, atlas_h, patch)
        self.grid = _grid_shape(atlas_w, atlas_h)
        self._memo: dict[tuple, dict[str, Placement] | None] = {}

    def __call__(self, cells: dict[str, tuple[int, int]]) -> dict[str, Placement] | None:
        key = tuple(cells[vid] for vid in VIEW_IDS)
        if key in self._memo:
            return self._memo[key]
        result = self._try_maxrects(cells)
        if result is None:
            result = self._try_grid(cells)
        self._memo[key] = result
        return result

    def _try_maxrects(self, cells) -> dict[str, Placement] | None:
        for rot_top, rot_bottom in _ROTATION_COMBOS:
            rotated = {"top": rot_top, "bottom": rot_bottom}
            rects = []
            for vid in VIEW_IDS:
                cw, ch = cells[vid]
                if rotated.get(vid, False):
                    cw, ch = ch, cw
                rects.append(RectSpec(vid, cw, ch, rotatable=vid in ROTATABLE_VIEWS))
            ok, placements = pack_all(rects, self.bin_w, self.bin_h)
            if ok:
                return {
                    p.id: replace(p, rotated=rotated.get(p.id, False))
                    for p in placements
                }
        return None

    def _try_grid(self, cells) -> dict[str, Placement] | None:
        sw, sh = self.slot
        if any(cw > sw or ch > sh for cw, ch in cells.values()):
            return None
        cols, _ = self.grid
        placements = {}
        for i, vid in enumerate(VIEW_IDS):
            cw, ch = cells[vid]
            placements[vid] = Placement(
                vid, (i % cols) * sw, (i // cols) * sh, cw, ch, rotated=False
            )
        return placements


@dataclass
class GlobalSearchResult:
    scale: float
    placements: dict[str, Placement]
    probe_count: int
    lower_bound: float
    upper_bound: float


def search_global_ratio(
    bboxes: dict[str, tuple[int, int, int, int]],
    atlas_size: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    max_probes: int = MAX_GLOBAL_PROBES,
    probe: _FeasibilityProbe | None = None,
) -> GlobalSearchResult:
    """Binary-search the largest global enlargement ratio that still packs.

    The lower bound is the regular-tiling scale (feasible by construction:
    the tiling itself is a packing); the upper bound combines the area bound
    with the longest-side bound. At most ``max_probes`` feasibility probes.
    """
    atlas_w, atlas_h = atlas_size
    if atlas_w % patch or atlas_h % patch:
        raise ValueError("atlas dimensions must be divisible by the patch size")
    if probe is None:
        probe = _FeasibilityProbe(atlas_w, atlas_h, patch)

    lo = tiling_scale(bboxes, atlas_w, atlas_h, patch)
    total_area = sum(bw * bh for (_, _, bw, bh) in bboxes.values())
    longest = max(max(bw, bh) for (_, _, bw, bh) in bboxes.values())
    hi = min(
        math.sqrt(atlas_w * atlas_h / total_area),
        max(atlas_w, atlas_h) / longest,
    )
    hi = max(hi, lo)

    unit = {vid: 1.0 for vid in VIEW_IDS}
    best_scale = lo
    best = probe._try_grid(_cells_for(bboxes, {v: lo for v in unit}, patch))
    if best is None:  # cannot happen by construction of the tiling scale
        raise RuntimeError("tiling-scale fallback unexpectedly infeasible")
    probes = 0

    if hi > lo * (1.0 + 1e-12):
        result = probe(_cells_for(bboxes, {v: hi for v in unit}, patch))
        probes += 1
        if result is not None:
            return GlobalSearchResult(hi, result, probes, lo, hi)
        left, right = lo, hi
        while probes < max_probes:
            mid = 0.5 * (left + right)
            result = probe(_cells_for(bboxes, {v: mid for v in unit}, patch))
            probes += 1
            if result is not None:
                left = mid
                best_scale, best = mid, result
            else:
                right = mid
    return GlobalSearchResult(best_scale, best, probes, lo, hi)


def enlarge_pairs(
    bboxes: dict[str, tuple[int, int, int, int]],
    global_result: GlobalSearchResult,
    atlas_size: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    source_resolution: int | None = None,
    cap: float = PAIR_SCALE_CAP,
    max_probes_per_pair: int = MAX_PAIR_PROBES,
    probe: _FeasibilityProbe | None = None,
    ortho_scale: float | None = None,
    mesh_hash: str | None = None,
) -> tuple[PackingLayout, PackStats]:
    """Greedy paired enlargement on top of the fixed global ratio.

    Pairs are processed in decreasing bounding-box area; each pair's extra
    ratio is binary-searched in (1, cap] with full-set feasibility probes,
    then frozen before the next pair is considered.
    """
    atlas_w, atlas_h = atlas_size
    if probe is None:
        probe = _FeasibilityProbe(atlas_w, atlas_h, patch)
    if source_resolution is None:
        source_resolution = max(
            x + w for (x, _, w, _) in bboxes.values()
        )

    g = global_result.scale
    stats = PackStats(
        tiling_scale=global_result.lower_bound,
        upper_bound=global_result.upper_bound,
        global_scale=g,
        global_probes=global_result.probe_count,
    )

    ratios = {pair: 1.0 for pair in OPPOSING_PAIRS}
    placements = dict(global_result.placements)

    def scales_with(candidate_pair, candidate_ratio) -> dict[str, float]:
        out = {}
        for vid in VIEW_IDS:
            pair = pair_of(vid)
            r = candidate_ratio if pair == candidate_pair else ratios[pair]
            out[vid] = g * r
        return out

    def pair_area(pair) -> int:
        _, _, bw, bh = bboxes[pair[0]]
        return bw * bh

    order = sorted(
        OPPOSING_PAIRS, key=lambda p: (-pair_area(p), OPPOSING_PAIRS.index(p))
    )
    for pair in order:
        name = _pair_name(pair)
        probes = 0
        result = probe(_cells_for(bboxes, scales_with(pair, cap), patch))
        probes += 1
        if result is not None:
            ratios[pair] = cap
            placements = result
        else:
            left, right = 1.0, cap
            while probes < max_probes_per_pair:
                mid = 0.5 * (left + right)
                result = probe(_cells_for(bboxes, scales_with(pair, mid), patch))
                probes += 1
                if result is not None:
                    left = mid
                    ratios[pair] = mid
                    placements = result
                else:
                    right = mid
        stats.pair_ratios[name] = ratios[pair]
        stats.pair_probes[name] = probes

    entries = []
    for vid in VIEW_IDS:
        p = placements[vid]
        entries.append(
            ViewPlacement(
                view_id=vid,
                source_bbox=bboxes[vid],
                scale=g * ratios[pair_of(vid)],
                rotated=p.rotated,
                atlas_offset=(p.x * patch, p.y * patch),
                cell=(p.width * patch, p.height * patch),
            )
        )
    layout = PackingLayout(
        atlas_width=atlas_w,
        atlas_height=atlas_h,
        patch_size=patch,
        source_resolution=source_resolution,
        global_scale=g,
        views=tuple(entries),
        mode="pack",
        ortho_scale=ortho_scale,
        mesh_hash=mesh_hash,
    )
    return layout, stats


def pack_views(
    gbuffers: dict[str, ViewGBuffer],
    atlas_size: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    ortho_scale: float | None = None,
    mesh_hash: str | None = None,
) -> tuple[PackingLayout, PackStats]:
    """Bounding boxes -> global search -> paired enlargement, in one call."""
    bboxes = compute_view_bboxes(gbuffers)
    resolution = next(iter(gbuffers.values())).alpha_map.shape[0]
    probe = _FeasibilityProbe(atlas_size[0], atlas_size[1], patch)
    global_result = search_global_ratio(bboxes, atlas_size, patch, probe=probe)
    return enlarge_pairs(
        bboxes,
        global_result,
        atlas_size,
        patch,
        source_resolution=resolution,
        probe=probe,
        ortho_scale=ortho_scale,
        mesh_hash=mesh_hash,
    )


def tile_layout(
    gbuffers: dict[str, ViewGBuffer],
    atlas_size: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    ortho_scale: float | None = None,
    mesh_hash: str | None = None,
) -> PackingLayout:
    """Baseline regular tiling: one full view render per grid slot."""
    atlas_w, atlas_h = atlas_size
    if atlas_w % patch or atlas_h % patch:
        raise ValueError("atlas dimensions must be divisible by the patch size")
    resolution = next(iter(gbuffers.values())).alpha_map.shape[0]
    cols, _ = _grid_shape(atlas_w, atlas_h)
    sw, sh = _slot_cells(atlas_w, atlas_h, patch)
    slot_w, slot_h = sw * patch, sh * patch
    scale = slot_w / resolution
    entries = []
    for i, vid in enumerate(VIEW_IDS):
        entries.append(
            ViewPlacement(
                view_id=vid,
                source_bbox=(0, 0, resolution, resolution),
                scale=scale,
                rotated=False,
                atlas_offset=((i % cols) * slot_w, (i // cols) * slot_h),
                cell=(slot_w, slot_h),
            )
        )
    return PackingLayout(
        atlas_width=atlas_w,
        atlas_height=atlas_h,
        patch_size=patch,
        source_resolution=resolution,
        global_scale=scale,
        views=tuple(entries),
        mode="tile",
        ortho_scale=ortho_scale,
        mesh_hash=mesh_hash,
    )


def validate_layout(layout: PackingLayout) -> None:
    """Machine-check all layout invariants; raises ValueError on violation."""
    w, h = layout.atlas_width, layout.atlas_height
    patch = layout.patch_size
    long_side, short_side = max(w, h), min(w, h)
    if abs(long_side * 2 - short_side * 3) > 2 * patch:
        raise ValueError(f"atlas {w}x{h} is not 3:2 within one patch cell")
    if w % patch or h % patch:
        raise ValueError("atlas dimensions must be patch multiples")
    if len(layout.views) != len(VIEW_IDS):
        raise ValueError("layout must carry all six views")
    boxes = []
    for v in layout.views:
        cw, ch = v.cell
        ox, oy = v.atlas_offset
        if cw % patch or ch % patch:
            raise ValueError(f"{v.view_id}: cell {v.cell} not a patch multiple")
        if ox < 0 or oy < 0 or ox + cw > w or oy + ch > h:
            raise ValueError(f"{v.view_id}: cell outside the atlas")
        if v.rotated and v.view_id not in ROTATABLE_VIEWS:
            raise ValueError(f"{v.view_id}: rotation only allowed for top/bottom")
        cs = v.content_size()
        rw, rh = (cs[1], cs[0]) if v.rotated else cs
        if rw > cw or rh > ch:
            raise ValueError(f"{v.view_id}: content exceeds its padded cell")
        if v.scale > PAIR_SCALE_CAP * layout.global_scale * (1 + 1e-9):
            raise ValueError(f"{v.view_id}: scale exceeds the 2x pair cap")
        boxes.append((v.view_id, ox, oy, cw, ch))
    for pair in OPPOSING_PAIRS:
        sa = layout.entry(pair[0]).scale
        sb = layout.entry(pair[1]).scale
        if abs(sa - sb) > 1e-12 * max(sa, sb):
            raise ValueError(f"pair {pair} carries unequal scales")
        ba = layout.entry(pair[0]).source_bbox[2:]
        bb = layout.entry(pair[1]).source_bbox[2:]
        if ba != bb:
            raise ValueError(f"pair {pair} carries unequal box sizes")
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            _, ax, ay, aw, ah = boxes[i]
            _, bx, by, bw, bh = boxes[j]
            if ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah:
                raise ValueError(f"cells {boxes[i][0]} and {boxes[j][0]} overlap")
