"""MaxRects single-bin rectangle packing with feasibility semantics.

The packer maintains the set of maximal free rectangles, inserts rectangles
with the best-short-side-fit rule, and reports infeasibility as a value.
Rotation is never performed here; callers resolve orientation beforehand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class RectSpec:
    """A rectangle to pack, in integer cells."""

    id: str
    width: int
    height: int
    rotatable: bool = False

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("rectangle dimensions must be >= 1")


@dataclass(frozen=True)
class Placement:
    """Resolved cell position of one rectangle (top-left corner)."""

    id: str
    x: int
    y: int
    width: int
    height: int
    rotated: bool = False


class MaxRectsPacker:
    """Stateful single-bin MaxRects packer (best short side fit).

    Tie-breaks are frozen for determinism: shorter leftover side, then shorter
    long leftover side, then lowest (y, x) of the free rectangle.
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError("bin dimensions must be >= 1")
        self.width = width
        self.height = height
        self.free_rects: list[tuple[int, int, int, int]] = [(0, 0, width, height)]

    def insert(self, width: int, height: int) -> tuple[int, int] | None:
        """Place a width x height rectangle; returns (x, y) or None if it cannot fit."""
        best = None
        best_key = None
        for fx, fy, fw, fh in self.free_rects:
            if fw < width or fh < height:
                continue
            leftover_w = fw - width
            leftover_h = fh - height
            key = (
                min(leftover_w, leftover_h),
                max(leftover_w, leftover_h),
                fy,
                fx,
            )
            if best_key is None or key < best_key:
                best_key = key
                best = (fx, fy)
        if best is None:
            return None
        self._split_free(best[0], best[1], width, height)
        return best

    def _split_free(self, px: int, py: int, pw: int, ph: int) -> None:
        """Split every intersecting free rectangle into its maximal remainders."""
        new_free: list[tuple[int, int, int, int]] = []
        for fx, fy, fw, fh in self.free_rects:
            if px >= fx + fw or px + pw <= fx or py >= fy + fh or py + ph <= fy:
                new_free.append((fx, fy, fw, fh))
                continue
            if px > fx:
                new_free.append((fx, fy, px - fx, fh))
            if px + pw < fx + fw:
                new_free.append((px + pw, fy, fx + fw - (px + pw), fh))
            if py > fy:
                new_free.append((fx, fy, fw, py - fy))
            if py + ph < fy + fh:
                new_free.append((fx, py + ph, fw, fy + fh - (py + ph)))
        self.free_rects = _prune_contained(new_free)

    def free_rects_json(self) -> str:
        """Debug dump of the free-rectangle set as a JSON list of [x, y, w, h]."""
        return json.dumps(sorted([list(r) for r in self.free_rects]))


def _prune_contained(rects: list[tuple[int, int, int, int]]) -> list[tuple[int, int, int, int]]:
    rects = sorted(set(rects))
    keep: list[tuple[int, int, int, int]] = []
    for i, (ax, ay, aw, ah) in enumerate(rects):
        contained = any(
            bx <= ax and by <= ay and bx + bw >= ax + aw and by + bh >= ay + ah
            for j, (bx, by, bw, bh) in enumerate(rects)
            if j != i
        )
        if not contained:
            keep.append((ax, ay, aw, ah))
    return keep


def _insertion_order(rects: list[RectSpec]) -> list[RectSpec]:
    # decreasing area, then decreasing longer side, then id: results do not
    # depend on caller input order
    return sorted(
        rects,
        key=lambda r: (-r.width * r.height, -max(r.width, r.height), r.id),
    )


def pack_all(
    rects: list[RectSpec], bin_width: int, bin_height: int
) -> tuple[bool, list[Placement]]:
    """Pack every rectangle into a single bin; (False, []) when any fails.

    Deterministic for identical inputs. Rectangles are inserted largest-area
    first regardless of input order; orientation is taken as given.
    """
    packer = MaxRectsPacker(bin_width, bin_height)
    placements: dict[str, Placement] = {}
    for rect in _insertion_order(rects):
        pos = packer.insert(rect.width, rect.height)
        if pos is None:
            return False, []
        placements[rect.id] = Placement(rect.id, pos[0], pos[1], rect.width, rect.height)
    return True, [placements[r.id] for r in rects]


def validate_placements(
    rects: list[RectSpec],
    placements: list[Placement],
    bin_width: int,
    bin_height: int,
) -> None:
    """Independent overlap/containment check; raises ValueError on violation."""
    by_id = {r.id: r for r in rects}
    if sorted(by_id) != sorted(p.id for p in placements):
        raise ValueError("placements do not cover the rectangle set exactly")
    boxes = []
    for p in placements:
        spec = by_id[p.id]
        w, h = (spec.height, spec.width) if p.rotated else (spec.width, spec.height)
        if p.rotated and not spec.rotatable:
            raise ValueError(f"{p.id}: rotated but not rotatable")
        if (w, h) != (p.width, p.height):
            raise ValueError(f"{p.id}: placement dims disagree with spec")
        if p.x < 0 or p.y < 0 or p.x + w > bin_width or p.y + h > bin_height:
            raise ValueError(f"{p.id}: outside the bin")
        boxes.append((p.id, p.x, p.y, w, h))
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            _, ax, ay, aw, ah = boxes[i]
            _, bx, by, bw, bh = boxes[j]
            if ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah:
                raise ValueError(f"{boxes[i][0]} and {boxes[j][0]} overlap")
