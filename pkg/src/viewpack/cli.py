"""Batch command-line front end: render, pack, bake, and the full pipeline.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command is
deterministic for identical inputs and flags, and all intermediate files are
re-ingestible: pipeline output equals the render | pack | bake composition.
"""

from __future__ import annotations

import argparse
import json
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import __version__
from .backproject import (
    DEFAULT_DEPTH_TOLERANCE,
    DEFAULT_EDGE_DILATION,
    DEFAULT_EDGE_THRESHOLD,
    back_project,
)
from .compose import compose_atlas, compose_images
from .fixtures import corpus_meshes, procedural_texture
from .guidance import (
    DEFAULT_NORMAL_ANGLE_DEG,
    DEFAULT_POSITION_THRESHOLD,
    select_guidance_view,
    spread_guidance,
)
from .imgio import read_exr, read_png, write_exr, write_png
from .mesh import MeshError, MissingUvError, load_mesh, mesh_content_hash, normalize_mesh, save_mesh
from .metrics import PackingReport, bbox_coverage, foreground_ratio, roundtrip_psnr
from .packing import (
    DEFAULT_ATLAS,
    DEFAULT_PATCH,
    PackingLayout,
    pack_views,
    tile_layout,
    validate_layout,
)
from .raster import BACKGROUND_DEPTH, ViewGBuffer, compute_ortho_scale, render_all_views, render_textured_view
from .report import emit_report
from .sampling import resize_bilinear
from .views import VIEW_IDS, canonical_views


class UsageError(Exception):
    """Bad arguments or inconsistent input files; exits with code 2."""


OUT_ROOT_ENV = "VIEWPACK_OUT_ROOT"


def _resolve_out(path: str | Path) -> Path:
    """Relative output paths land under $VIEWPACK_OUT_ROOT when it is set."""
    import os

    path = Path(path)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _parse_atlas(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise UsageError(f"bad atlas size '{text}', expected WxH") from exc


def _load_normalized(path: str | Path):
    try:
        mesh = load_mesh(path)
    except FileNotFoundError as exc:
        raise UsageError(f"mesh file not found: {path}") from exc
    except MissingUvError as exc:
        raise UsageError(f"{path}: mesh has no UV coordinates") from exc
    except MeshError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    return normalize_mesh(mesh)


def do_render(mesh_path: str | Path, resolution: int, margin: float, out_dir: str | Path) -> dict:
    """Render the six G-buffers and write EXR/PNG maps plus meta.json."""
    if not 0.0 <= margin < 0.5:
        raise UsageError("--margin must be in [0, 0.5)")
    if resolution < 16:
        raise UsageError("--resolution must be at least 16")
    mesh = _load_normalized(mesh_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scale = compute_ortho_scale(mesh, margin)
    gbuffers = render_all_views(mesh, scale, resolution)
    for vid, gb in gbuffers.items():
        write_exr(out / f"{vid}_position.exr", gb.position_map)
        write_exr(out / f"{vid}_normal.exr", gb.normal_map)
        write_exr(out / f"{vid}_depth.exr", gb.depth_map)
        write_png(out / f"{vid}_alpha.png", gb.alpha_map * 255)
    meta = {
        "mesh_hash": mesh_content_hash(mesh),
        "mesh_file": str(Path(mesh_path).name),
        "resolution": resolution,
        "margin": margin,
        "ortho_scale": scale,
        "views": list(VIEW_IDS),
        "tool_version": __version__,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def _load_gbuffers(gbuffer_dir: Path) -> tuple[dict[str, ViewGBuffer], dict]:
    meta_path = gbuffer_dir / "meta.json"
    if not meta_path.exists():
        raise UsageError(f"{gbuffer_dir}: missing meta.json (not a render output?)")
    meta = json.loads(meta_path.read_text())
    specs = canonical_views(meta["ortho_scale"])
    gbuffers = {}
    for vid in VIEW_IDS:
        gbuffers[vid] = ViewGBuffer(
            view=specs[vid],
            position_map=read_exr(gbuffer_dir / f"{vid}_position.exr").astype(np.float64),
            normal_map=read_exr(gbuffer_dir / f"{vid}_normal.exr").astype(np.float64),
            alpha_map=(read_png(gbuffer_dir / f"{vid}_alpha.png", as_float=False) > 127).astype(np.uint8),
            depth_map=read_exr(gbuffer_dir / f"{vid}_depth.exr").astype(np.float64),
            vertex_ndc=np.zeros((0, 3)),
        )
    return gbuffers, meta


def do_pack(
    gbuffer_dir: str | Path,
    out_dir: str | Path,
    atlas: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    mode: str = "pack",
    textures_dir: str | Path | None = None,
    guidance_image: str | Path | None = None,
    guidance_view: str = "auto",
    position_threshold: float = DEFAULT_POSITION_THRESHOLD,
    normal_angle_deg: float = DEFAULT_NORMAL_ANGLE_DEG,
) -> dict:
    """Pack (or tile) the G-buffers onto the atlas; writes maps + layout.json."""
    if atlas[0] % patch or atlas[1] % patch:
        raise UsageError(f"atlas {atlas[0]}x{atlas[1]} is not divisible by patch {patch}")
    if mode not in ("pack", "tile"):
        raise UsageError("--mode must be pack or tile")
    gbuffer_dir = Path(gbuffer_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gbuffers, meta = _load_gbuffers(gbuffer_dir)

    stats = None
    if mode == "pack":
        layout, stats = pack_views(
            gbuffers, atlas, patch,
            ortho_scale=meta["ortho_scale"], mesh_hash=meta["mesh_hash"],
        )
    else:
        layout = tile_layout(
            gbuffers, atlas, patch,
            ortho_scale=meta["ortho_scale"], mesh_hash=meta["mesh_hash"],
        )
    validate_layout(layout)

    atlas_maps = compose_atlas(gbuffers, layout)
    write_exr(out / "atlas_position.exr", atlas_maps.position_map)
    write_exr(out / "atlas_normal.exr", atlas_maps.normal_map)
    write_exr(out / "atlas_depth.exr", atlas_maps.depth_map)
    write_png(out / "atlas_alpha.png", atlas_maps.alpha_map * 255)
    preview = np.clip(atlas_maps.normal_map * 0.5 + 0.5, 0.0, 1.0)
    preview[atlas_maps.alpha_map == 0] = 0.0
    write_png(out / "atlas_preview.png", preview)
    (out / "layout.json").write_text(layout.to_json() + "\n")

    if textures_dir is not None:
        textures_dir = Path(textures_dir)
        images = {}
        for vid in VIEW_IDS:
            tex_path = textures_dir / f"{vid}_texture.png"
            if not tex_path.exists():
                raise UsageError(f"missing texture image {tex_path}")
            images[vid] = read_png(tex_path)[:, :, :3]
        texture_atlas = compose_images(images, layout, method="bilinear")
        write_exr(out / "atlas_texture.exr", texture_atlas)
        write_png(out / "atlas_texture.png", texture_atlas)

    if guidance_image is not None:
        if guidance_view == "auto":
            guidance_view = select_guidance_view({v: gbuffers[v].alpha_map for v in VIEW_IDS})
        if guidance_view not in VIEW_IDS:
            raise UsageError(f"unknown guidance view '{guidance_view}'")
        img = read_png(guidance_image)[:, :, :3]
        res = gbuffers[guidance_view].alpha_map.shape[0]
        if img.shape[:2] != (res, res):
            img = resize_bilinear(img, res, res)
        field = spread_guidance(
            guidance_view, img, gbuffers, layout,
            position_threshold=position_threshold,
            normal_angle_deg=normal_angle_deg,
        )
        write_exr(out / "atlas_guidance.exr", field.spread_atlas)
        write_png(out / "atlas_guidance.png", field.spread_atlas)
        write_png(out / "guidance_mask.png", field.spread_mask.astype(np.uint8) * 255)
        (out / "guidance_meta.json").write_text(
            json.dumps({"source_view": guidance_view,
                        "position_threshold": position_threshold,
                        "normal_angle_deg": normal_angle_deg},
                       indent=2, sort_keys=True) + "\n"
        )

    result = {"layout": str(out / "layout.json"), "mode": mode}
    if stats is not None:
        result["search"] = {
            "tiling_scale": stats.tiling_scale,
            "upper_bound": stats.upper_bound,
            "global_scale": stats.global_scale,
            "global_probes": stats.global_probes,
            "pair_ratios": stats.pair_ratios,
            "pair_probes": stats.pair_probes,
        }
        (out / "pack_stats.json").write_text(json.dumps(result["search"], indent=2, sort_keys=True) + "\n")
    return result


def do_bake(
    pack_dir: str | Path,
    mesh_path: str | Path,
    out_dir: str | Path,
    uv_resolution: int = 1024,
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
    edge_dilation: int = DEFAULT_EDGE_DILATION,
    channel: str = "texture",
    fill: bool = True,
    debug_channels: bool = False,
) -> dict:
    """Back-project a packed atlas channel into a UV texture."""
    pack_dir = Path(pack_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layout_path = pack_dir / "layout.json"
    if not layout_path.exists():
        raise UsageError(f"{pack_dir}: missing layout.json")
    layout = PackingLayout.from_json(layout_path.read_text())
    mesh = _load_normalized(mesh_path)
    if layout.mesh_hash and layout.mesh_hash != mesh_content_hash(mesh):
        raise UsageError(
            "layout/mesh content hash mismatch: this layout was packed from a different mesh"
        )
    atlas_file = pack_dir / f"atlas_{channel}.exr"
    if not atlas_file.exists():
        raise UsageError(f"missing atlas channel file {atlas_file}")
    texture_atlas = read_exr(atlas_file).astype(np.float64)
    depth_atlas = read_exr(pack_dir / "atlas_depth.exr").astype(np.float64)
    alpha_atlas = (read_png(pack_dir / "atlas_alpha.png", as_float=False) > 127).astype(np.uint8)

    fused, _ = back_project(
        mesh, layout, texture_atlas, depth_atlas, alpha_atlas,
        uv_resolution,
        depth_tolerance=depth_tolerance,
        edge_threshold=edge_threshold,
        edge_dilation=edge_dilation,
        fill=fill,
    )
    write_exr(out / "texture.exr", fused.data)
    rgba = np.concatenate(
        [np.clip(fused.data, 0.0, 1.0), fused.valid_mask[..., None].astype(np.float64)], axis=2
    )
    write_png(out / "texture.png", rgba)
    write_png(out / "valid_mask.png", fused.valid_mask.astype(np.uint8) * 255)
    if debug_channels:
        write_exr(out / "weight_sum.exr", fused.weight_sum)
    meta = {
        "uv_resolution": uv_resolution,
        "channel": channel,
        "depth_tolerance": depth_tolerance,
        "edge_threshold": edge_threshold,
        "edge_dilation": edge_dilation,
        "fill": fill,
        "valid_texels": int(fused.valid_mask.sum()),
        "mesh_hash": mesh_content_hash(mesh),
    }
    (out / "bake_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def run_pipeline_single(
    mesh_path: str | Path,
    out_dir: str | Path,
    resolution: int = 512,
    margin: float = 0.05,
    atlas: tuple[int, int] = DEFAULT_ATLAS,
    patch: int = DEFAULT_PATCH,
    uv_resolution: int = 1024,
    guidance: str = "oracle",
    guidance_view: str = "auto",
    position_threshold: float = DEFAULT_POSITION_THRESHOLD,
    normal_angle_deg: float = DEFAULT_NORMAL_ANGLE_DEG,
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
    edge_dilation: int = DEFAULT_EDGE_DILATION,
    bake_channel: str | None = None,
) -> PackingReport:
    """render | pack | bake composition for one mesh, plus the packing report."""
    out = Path(out_dir)
    render_dir, pack_dir, bake_dir = out / "render", out / "pack", out / "bake"
    do_render(mesh_path, resolution, margin, render_dir)

    # stage-1 stand-in: render the ground-truth-textured mesh for the chosen view
    mesh = _load_normalized(mesh_path)
    gbuffers, meta = _load_gbuffers(render_dir)
    oracle_texture = None
    guidance_png = None
    if guidance == "oracle":
        oracle_texture = procedural_texture(uv_resolution)
        write_png(render_dir / "oracle_texture.png", oracle_texture)
        specs = canonical_views(meta["ortho_scale"])
        for vid in VIEW_IDS:
            img, _ = render_textured_view(mesh, oracle_texture, specs[vid], resolution)
            write_png(render_dir / f"{vid}_texture.png", img)
        src = guidance_view
        if src == "auto":
            src = select_guidance_view({v: gbuffers[v].alpha_map for v in VIEW_IDS})
        guidance_png = render_dir / f"{src}_texture.png"
        guidance_view = src
    elif guidance not in ("none", ""):
        guidance_png = Path(guidance)
        if not guidance_png.exists():
            raise UsageError(f"guidance image not found: {guidance_png}")

    do_pack(
        render_dir, pack_dir, atlas, patch, "pack",
        textures_dir=render_dir if oracle_texture is not None else None,
        guidance_image=guidance_png,
        guidance_view=guidance_view,
        position_threshold=position_threshold,
        normal_angle_deg=normal_angle_deg,
    )

    if bake_channel is None:
        bake_channel = "texture" if oracle_texture is not None else (
            "guidance" if guidance_png is not None else None
        )
    if bake_channel is not None:
        do_bake(
            pack_dir, mesh_path, bake_dir, uv_resolution,
            depth_tolerance=depth_tolerance,
            edge_threshold=edge_threshold,
            edge_dilation=edge_dilation,
            channel=bake_channel,
        )

    # report metrics: packed vs tiled foreground, coverage, optional fidelity
    layout = PackingLayout.from_json((pack_dir / "layout.json").read_text())
    alpha_packed = (read_png(pack_dir / "atlas_alpha.png", as_float=False) > 127)
    tiled = tile_layout(gbuffers, atlas, patch)
    alpha_tiled = compose_images(
        {v: gbuffers[v].alpha_map for v in VIEW_IDS}, tiled, method="nearest"
    )
    ratio_packed = foreground_ratio(alpha_packed)
    ratio_tiled = foreground_ratio(alpha_tiled)
    psnr = None
    if oracle_texture is not None and bake_channel == "texture":
        fused = read_exr(bake_dir / "texture.exr").astype(np.float64)
        valid = read_png(bake_dir / "valid_mask.png", as_float=False) > 127
        if valid.any():
            psnr = roundtrip_psnr(oracle_texture, fused, valid)
    report = PackingReport(
        mesh_id=Path(mesh_path).stem,
        foreground_ratio_packed=ratio_packed,
        foreground_ratio_tiled=ratio_tiled,
        improvement=ratio_packed / ratio_tiled if ratio_tiled > 0 else float("inf"),
        bbox_coverage=bbox_coverage(layout),
        per_view_scales={v.view_id: v.scale for v in layout.views},
        roundtrip_psnr=psnr,
    )
    (out / "report_entry.json").write_text(json.dumps(report.as_row(), indent=2, sort_keys=True) + "\n")
    return report


def _pipeline_worker(kwargs: dict) -> PackingReport:
    return run_pipeline_single(**kwargs)


def do_pipeline(args: argparse.Namespace) -> int:
    src = Path(args.mesh)
    atlas = _parse_atlas(args.atlas)
    common = dict(
        resolution=args.resolution,
        margin=args.margin,
        atlas=atlas,
        patch=args.patch,
        uv_resolution=args.uv_res,
        guidance=args.guidance,
        guidance_view=args.guidance_view,
        position_threshold=args.pos_thresh,
        normal_angle_deg=args.normal_thresh,
        depth_tolerance=args.depth_tol,
        edge_threshold=args.edge_thresh,
        edge_dilation=args.edge_dilate,
    )
    out = Path(args.out)
    if src.is_dir():
        meshes = sorted(src.glob("*.obj"))
        if not meshes:
            raise UsageError(f"no .obj files in {src}")
        jobs = [dict(common, mesh_path=m, out_dir=out / m.stem) for m in meshes]
        if args.jobs > 1:
            with Pool(args.jobs) as pool:
                reports = pool.map(_pipeline_worker, jobs)
        else:
            reports = [_pipeline_worker(j) for j in jobs]
    else:
        reports = [run_pipeline_single(mesh_path=src, out_dir=out, **common)]
    formats = tuple(f.strip() for f in args.report.split(",") if f.strip())
    emit_report(reports, out, formats=formats, figures=not args.no_figures)
    return 0


def do_corpus(out_dir: str | Path) -> int:
    """Write the built-in 20-mesh fixture corpus as OBJ files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, mesh in corpus_meshes():
        save_mesh(mesh, out / f"{name}.obj")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viewpack",
        description="Multi-view atlas packing pipeline (render | pack | bake).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="rasterize six-view G-buffers from an OBJ mesh")
    p.add_argument("mesh")
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pack", help="pack rendered views onto one atlas")
    p.add_argument("gbuffer_dir")
    p.add_argument("--atlas", default="832x1248")
    p.add_argument("--patch", type=int, default=DEFAULT_PATCH)
    p.add_argument("--mode", default="pack", choices=("pack", "tile"))
    p.add_argument("--textures", default=None, help="directory of {view}_texture.png images")
    p.add_argument("--guidance", default=None, help="single-view guidance PNG to spread")
    p.add_argument("--guidance-view", default="auto")
    p.add_argument("--pos-thresh", type=float, default=DEFAULT_POSITION_THRESHOLD)
    p.add_argument("--normal-thresh", type=float, default=DEFAULT_NORMAL_ANGLE_DEG)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bake", help="back-project a packed atlas channel into UV space")
    p.add_argument("pack_dir")
    p.add_argument("--mesh", required=True)
    p.add_argument("--uv-res", type=int, default=1024)
    p.add_argument("--depth-tol", type=float, default=DEFAULT_DEPTH_TOLERANCE)
    p.add_argument("--edge-thresh", type=float, default=DEFAULT_EDGE_THRESHOLD)
    p.add_argument("--edge-dilate", type=int, default=DEFAULT_EDGE_DILATION)
    p.add_argument("--channel", default="texture", choices=("texture", "guidance"))
    p.add_argument("--no-fill", action="store_true")
    p.add_argument("--debug-channels", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", help="full pipeline over one mesh or a directory")
    p.add_argument("mesh")
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--atlas", default="832x1248")
    p.add_argument("--patch", type=int, default=DEFAULT_PATCH)
    p.add_argument("--uv-res", type=int, default=1024)
    p.add_argument("--guidance", default="oracle", help="'oracle', 'none', or a PNG path")
    p.add_argument("--guidance-view", default="auto")
    p.add_argument("--pos-thresh", type=float, default=DEFAULT_POSITION_THRESHOLD)
    p.add_argument("--normal-thresh", type=float, default=DEFAULT_NORMAL_ANGLE_DEG)
    p.add_argument("--depth-tol", type=float, default=DEFAULT_DEPTH_TOLERANCE)
    p.add_argument("--edge-thresh", type=float, default=DEFAULT_EDGE_THRESHOLD)
    p.add_argument("--edge-dilate", type=int, default=DEFAULT_EDGE_DILATION)
    p.add_argument("--report", default="csv,json")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("corpus", help="write the built-in fixture corpus as OBJ files")
    p.add_argument("--out", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "out"):
            args.out = _resolve_out(args.out)
        if args.command == "render":
            do_render(args.mesh, args.resolution, args.margin, args.out)
        elif args.command == "pack":
            do_pack(
                args.gbuffer_dir,
                args.out,
                _parse_atlas(args.atlas),
                args.patch,
                args.mode,
                textures_dir=args.textures,
                guidance_image=args.guidance,
                guidance_view=args.guidance_view,
                position_threshold=args.pos_thresh,
                normal_angle_deg=args.normal_thresh,
            )
        elif args.command == "bake":
            do_bake(
                args.pack_dir,
                args.mesh,
                args.out,
                uv_resolution=args.uv_res,
                depth_tolerance=args.depth_tol,
                edge_threshold=args.edge_thresh,
                edge_dilation=args.edge_dilate,
                channel=args.channel,
                fill=not args.no_fill,
                debug_channels=args.debug_channels,
            )
        elif args.command == "pipeline":
            do_pipeline(args)
        elif args.command == "corpus":
            do_corpus(args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
