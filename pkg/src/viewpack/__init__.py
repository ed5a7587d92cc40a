"""viewpack: pack multi-view mesh renderings onto one atlas and bake them back to UV space."""

__version__ = "0.1.0"

from .backproject import (
    FusionWeights,
    UvTexture,
    back_project,
    compute_fusion_weights,
    detect_depth_edges,
    fill_holes,
    fuse_views,
    sample_atlas_to_uv,
)
from .binpack import MaxRectsPacker, Placement, RectSpec, pack_all
from .compose import compose_atlas, compose_images, remap_ndc, remap_vertex_ndc
from .guidance import GuidanceField, select_guidance_view, spread_guidance
from .mesh import Mesh, load_mesh, mesh_content_hash, normalize_mesh, save_mesh
from .metrics import PackingReport, bbox_coverage, foreground_ratio, roundtrip_psnr
from .packing import (
    Atlas,
    PackingLayout,
    ViewPlacement,
    compute_view_bboxes,
    enlarge_pairs,
    pack_views,
    search_global_ratio,
    tile_layout,
    tiling_scale,
    validate_layout,
)
from .raster import (
    ViewGBuffer,
    compute_ortho_scale,
    render_all_views,
    render_textured_view,
    render_view,
    rasterize_uv_attributes,
)
from .views import ViewSpec, canonical_views, VIEW_IDS, OPPOSING_PAIRS

__all__ = [
    "Atlas",
    "FusionWeights",
    "GuidanceField",
    "MaxRectsPacker",
    "Mesh",
    "OPPOSING_PAIRS",
    "PackingLayout",
    "PackingReport",
    "Placement",
    "RectSpec",
    "UvTexture",
    "VIEW_IDS",
    "ViewGBuffer",
    "ViewPlacement",
    "ViewSpec",
    "back_project",
    "bbox_coverage",
    "canonical_views",
    "compose_atlas",
    "compose_images",
    "compute_fusion_weights",
    "compute_ortho_scale",
    "compute_view_bboxes",
    "detect_depth_edges",
    "enlarge_pairs",
    "fill_holes",
    "foreground_ratio",
    "fuse_views",
    "load_mesh",
    "mesh_content_hash",
    "normalize_mesh",
    "pack_all",
    "pack_views",
    "rasterize_uv_attributes",
    "remap_ndc",
    "remap_vertex_ndc",
    "render_all_views",
    "render_textured_view",
    "render_view",
    "roundtrip_psnr",
    "sample_atlas_to_uv",
    "save_mesh",
    "search_global_ratio",
    "select_guidance_view",
    "spread_guidance",
    "tile_layout",
    "tiling_scale",
    "validate_layout",
]
