"""Report emission: CSV/JSON tables plus matplotlib figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import PackingReport


def _ordered(reports: list[PackingReport]) -> list[PackingReport]:
    return sorted(reports, key=lambda r: r.mesh_id)


def _fieldnames(rows: list[dict]) -> list[str]:
    names: list[str] = []
    for row in rows:
        for key in row:
            if key not in names:
                names.append(key)
    return names


def write_csv(reports: list[PackingReport], path: str | Path) -> None:
    rows = [r.as_row() for r in _ordered(reports)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_fieldnames(rows))
        writer.writeheader()
        writer.writerows(rows)


def write_json(reports: list[PackingReport], path: str | Path) -> None:
    rows = [r.as_row() for r in _ordered(reports)]
    summary = {
        "num_meshes": len(rows),
        "mean_foreground_ratio_packed": round(
            float(np.mean([r["foreground_ratio_packed"] for r in rows])), 6
        ),
        "mean_foreground_ratio_tiled": round(
            float(np.mean([r["foreground_ratio_tiled"] for r in rows])), 6
        ),
        "mean_improvement": round(float(np.mean([r["improvement"] for r in rows])), 6),
        "mean_bbox_coverage": round(float(np.mean([r["bbox_coverage"] for r in rows])), 6),
    }
    doc = {"summary": summary, "meshes": rows}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def render_figures(reports: list[PackingReport], out_dir: str | Path) -> list[Path]:
    """Render the comparison figures next to the delimited output; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = _ordered(reports)
    names = [r.mesh_id for r in reports]
    packed = [r.foreground_ratio_packed for r in reports]
    tiled = [r.foreground_ratio_tiled for r in reports]
    coverage = [r.bbox_coverage for r in reports]
    paths = []

    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(names)), 4.0))
    ax.bar(x - 0.2, tiled, width=0.4, label="tiled", color="#bbbbbb")
    ax.bar(x + 0.2, packed, width=0.4, label="packed", color="#4878cf")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("foreground pixel ratio")
    ax.set_title("Atlas foreground ratio: packing vs. regular tiling")
    ax.legend()
    fig.tight_layout()
    p = out_dir / "foreground_comparison.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(names)), 4.0))
    ax.bar(x, coverage, width=0.6, color="#6acc64")
    mean_cov = float(np.mean(coverage)) if coverage else 0.0
    ax.axhline(mean_cov, color="black", linestyle="--", linewidth=1,
               label=f"mean {mean_cov:.1%}")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("padded-cell coverage of atlas")
    ax.set_ylim(0, 1.05)
    ax.set_title("Padded bounding-box coverage")
    ax.legend()
    fig.tight_layout()
    p = out_dir / "bbox_coverage.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    return paths


def emit_report(
    reports: list[PackingReport],
    out_dir: str | Path,
    formats: tuple[str, ...] = ("csv", "json"),
    figures: bool = True,
) -> dict[str, object]:
    """Write the requested report files and figures into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, object] = {}
    if "csv" in formats:
        path = out_dir / "report.csv"
        write_csv(reports, path)
        written["csv"] = path
    if "json" in formats:
        path = out_dir / "report.json"
        write_json(reports, path)
        written["json"] = path
    if figures:
        written["figures"] = render_figures(reports, out_dir / "figures")
    return written
