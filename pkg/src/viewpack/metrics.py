"""Packing efficiency and round-trip fidelity measurements."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .packing import PackingLayout

PSNR_SENTINEL = 99.0


@dataclass
class PackingReport:
    """Per-mesh packing efficiency summary."""

    mesh_id: str
    foreground_ratio_packed: float
    foreground_ratio_tiled: float
    improvement: float
    bbox_coverage: float
    per_view_scales: dict[str, float] = field(default_factory=dict)
    roundtrip_psnr: float | None = None

    def as_row(self) -> dict:
        row = {
            "mesh_id": self.mesh_id,
            "foreground_ratio_packed": round(self.foreground_ratio_packed, 6),
            "foreground_ratio_tiled": round(self.foreground_ratio_tiled, 6),
            "improvement": round(self.improvement, 6),
            "bbox_coverage": round(self.bbox_coverage, 6),
        }
        for vid, s in sorted(self.per_view_scales.items()):
            row[f"scale_{vid}"] = round(s, 6)
        if self.roundtrip_psnr is not None:
            row["roundtrip_psnr_db"] = round(self.roundtrip_psnr, 3)
        return row


def foreground_ratio(atlas_alpha: np.ndarray) -> float:
    """Foreground pixel count over total atlas pixels."""
    return float(np.count_nonzero(atlas_alpha)) / atlas_alpha.size


def bbox_coverage(layout: PackingLayout) -> float:
    """Fraction of the atlas covered by the padded cells (cells are disjoint)."""
    total = sum(cw * ch for (cw, ch) in (v.cell for v in layout.views))
    return total / (layout.atlas_width * layout.atlas_height)


def roundtrip_psnr(
    original: np.ndarray, reconstructed: np.ndarray, mask: np.ndarray
) -> float:
    """PSNR in dB over masked texels with peak 1.0; identical inputs report 99."""
    if original.shape != reconstructed.shape:
        raise ValueError("image shapes differ")
    if not mask.any():
        raise ValueError("mask is empty")
    a = np.asarray(original, dtype=np.float64)[mask]
    b = np.asarray(reconstructed, dtype=np.float64)[mask]
    mse = float(np.mean((a - b) ** 2))
    if mse < 1e-12:
        return PSNR_SENTINEL
    return min(-10.0 * np.log10(mse), PSNR_SENTINEL)
