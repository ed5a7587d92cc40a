from __future__ import annotations

import numpy as np
import pytest

from oracles import nearest_valid_fill
from viewpack import fixtures
from viewpack.backproject import (
    UvTexture,
    back_project,
    compute_fusion_weights,
    detect_depth_edges,
    fill_holes,
    fuse_views,
    sample_atlas_to_uv,
)
from viewpack.compose import compose_atlas, compose_images
from viewpack.packing import pack_views
from viewpack.raster import BACKGROUND_DEPTH, compute_ortho_scale, render_all_views, render_textured_view
from viewpack.views import VIEW_IDS, canonical_views


# --- sample_atlas_to_uv -----------------------------------------------------


def test_sample_constant_atlas():
    atlas = np.full((32, 48, 3), 0.7)
    ndc = np.zeros((8, 8, 2))
    valid = np.ones((8, 8), dtype=bool)
    valid[0, 0] = False
    out = sample_atlas_to_uv(atlas, ndc, valid)
    assert np.allclose(out[valid], 0.7)
    assert np.allclose(out[0, 0], 0.0)


def test_sample_gradient_matches_manual_bilinear(rng):
    atlas = rng.random((40, 60))
    pts = rng.uniform(-0.9, 0.9, size=(10, 2))
    ndc = pts.reshape(10, 1, 2)
    valid = np.ones((10, 1), dtype=bool)
    out = sample_atlas_to_uv(atlas, ndc, valid)[:, 0]
    for k in range(10):
        x = (pts[k, 0] + 1.0) / 2.0 * 60 - 0.5
        y = (1.0 - pts[k, 1]) / 2.0 * 40 - 0.5
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        fx, fy = x - x0, y - y0
        expected = (
            atlas[y0, x0] * (1 - fx) * (1 - fy)
            + atlas[y0, x0 + 1] * fx * (1 - fy)
            + atlas[y0 + 1, x0] * (1 - fx) * fy
            + atlas[y0 + 1, x0 + 1] * fx * fy
        )
        assert np.isclose(out[k], expected)


def test_sample_identity_position_atlas(sphere_mesh, sphere_gbuffers):
    scale, gb = sphere_gbuffers
    layout, _ = pack_views(gb, (224, 336), 16)
    atlas = compose_atlas(gb, layout)
    from viewpack.compose import remap_ndc
    from viewpack.raster import rasterize_uv_attributes
    view = canonical_views(scale)["frontal"]
    attrs = rasterize_uv_attributes(sphere_mesh, view, 128)
    packed = remap_ndc(attrs.ndc, layout.entry("frontal"), layout)
    sampled = sample_atlas_to_uv(atlas.position_map, packed, attrs.valid)
    facing = attrs.valid & (attrs.cam_normal[..., 2] > 0.5)
    err = np.linalg.norm(sampled[facing] - attrs.position[facing], axis=1)
    view_px = 2.0 * scale / 256
    assert np.quantile(err, 0.95) < 2.0 * view_px / layout.entry("frontal").scale


# --- compute_fusion_weights --------------------------------------------------


def test_weights_head_on_unoccluded():
    shape = (4, 4)
    w = compute_fusion_weights(
        sampled_depth=np.zeros(shape),
        texel_depth=np.zeros(shape),
        cam_normal=np.dstack([np.zeros(shape), np.zeros(shape), np.ones(shape)]),
        discontinuity=np.zeros(shape, dtype=bool),
        valid=np.ones(shape, dtype=bool),
    )
    assert np.allclose(w.total, 1.0)


def test_weights_60_degrees_quarter():
    shape = (2, 2)
    n = np.dstack([np.full(shape, np.sin(np.pi / 3)), np.zeros(shape), np.full(shape, 0.5)])
    w = compute_fusion_weights(
        np.zeros(shape), np.zeros(shape), n, np.zeros(shape, bool), np.ones(shape, bool)
    )
    assert np.allclose(w.total, 0.25)


def test_weights_occluded_zero():
    shape = (2, 2)
    w = compute_fusion_weights(
        sampled_depth=np.full(shape, 0.1),
        texel_depth=np.full(shape, 0.5),
        cam_normal=np.dstack([np.zeros(shape), np.zeros(shape), np.ones(shape)]),
        discontinuity=np.zeros(shape, bool),
        valid=np.ones(shape, bool),
    )
    assert np.allclose(w.total, 0.0)
    assert np.allclose(w.angle, 1.0)  # angle factor unaffected by occlusion


def test_weights_respect_tolerance():
    shape = (1, 1)
    w = compute_fusion_weights(
        sampled_depth=np.full(shape, 0.4995),
        texel_depth=np.full(shape, 0.5),
        cam_normal=np.dstack([np.zeros(shape), np.zeros(shape), np.ones(shape)]),
        discontinuity=np.zeros(shape, bool),
        valid=np.ones(shape, bool),
        depth_tolerance=1e-3,
    )
    assert np.allclose(w.visibility, 1.0)


# --- detect_depth_edges ------------------------------------------------------


def test_edges_plate_silhouette_only():
    depth = np.full((64, 64), BACKGROUND_DEPTH)
    depth[16:48, 16:48] = 0.3
    alpha = (depth < 1.0).astype(np.uint8)
    edges = detect_depth_edges(depth, 0.05, alpha_atlas=alpha, dilation=0)
    interior = np.zeros_like(edges)
    interior[18:46, 18:46] = True
    assert not edges[interior].any()
    assert edges[16, 16:48].all()


def test_edges_two_plate_step():
    depth = np.full((32, 64), 0.5)
    depth[:, 32:] = 0.5 + 10 * 0.05
    edges = detect_depth_edges(depth, 0.05, dilation=0)
    assert edges[:, 31].all() and edges[:, 32].all()
    assert not edges[:, :30].any() and not edges[:, 34:].any()


def test_edges_sphere_confined_to_silhouette():
    # fine tessellation keeps the faceted silhouette within a pixel of the
    # analytic disc, so every edge pixel sits on the silhouette ring
    mesh = fixtures.uv_sphere(48, 96)
    scale = compute_ortho_scale(mesh, 0.05)
    from viewpack.raster import render_view
    gb = render_view(mesh, canonical_views(scale)["frontal"], 512)
    edges = detect_depth_edges(gb.depth_map, 0.05, alpha_atlas=gb.alpha_map, dilation=1)
    ys, xs = np.nonzero(edges)
    r = np.hypot(ys - 255.5, xs - 255.5)
    disc_r = 512 / 2 / scale  # silhouette radius in pixels
    assert np.all(np.abs(r - disc_r) < 4.0)


def test_edge_dilation_grows_band():
    depth = np.full((32, 32), 0.5)
    depth[:, 16:] = 1.5
    thin = detect_depth_edges(depth, 0.05, dilation=0)
    thick = detect_depth_edges(depth, 0.05, dilation=2)
    assert thick.sum() > thin.sum()
    assert (thin & ~thick).sum() == 0


# --- fuse_views ---------------------------------------------------------------


def test_fuse_single_view_identity(rng):
    img = rng.random((8, 8, 3))
    w = np.ones((8, 8))
    fused = fuse_views([img], [w])
    assert np.allclose(fused.data, img)
    assert fused.valid_mask.all()


def test_fuse_equal_weights_average():
    a = np.full((4, 4, 3), 0.2)
    b = np.full((4, 4, 3), 0.8)
    fused = fuse_views([a, b], [np.ones((4, 4)), np.ones((4, 4))])
    assert np.allclose(fused.data, 0.5)


def test_fuse_convex_hull_property(rng):
    imgs = [rng.random((6, 6, 3)) for _ in range(4)]
    weights = [rng.random((6, 6)) for _ in range(4)]
    fused = fuse_views(imgs, weights)
    lo = np.min(imgs, axis=0)
    hi = np.max(imgs, axis=0)
    sel = fused.valid_mask
    assert np.all(fused.data[sel] >= lo[sel] - 1e-12)
    assert np.all(fused.data[sel] <= hi[sel] + 1e-12)


def test_fuse_weight_scale_invariance(rng):
    imgs = [rng.random((5, 5, 3)) for _ in range(3)]
    weights = [rng.random((5, 5)) for _ in range(3)]
    a = fuse_views(imgs, weights)
    b = fuse_views(imgs, [w * 7.5 for w in weights])
    assert np.allclose(a.data, b.data)
    assert np.array_equal(a.valid_mask, b.valid_mask)


def test_fuse_zero_weight_invalid():
    img = np.ones((3, 3, 3))
    w = np.zeros((3, 3))
    w[1, 1] = 1.0
    fused = fuse_views([img], [w])
    assert fused.valid_mask.sum() == 1


# --- fill_holes ---------------------------------------------------------------


def test_fill_no_holes_identity(rng):
    data = rng.random((6, 6, 3))
    valid = np.ones((6, 6), dtype=bool)
    tex = UvTexture(data, valid, valid.astype(float))
    out = fill_holes(tex, valid)
    assert np.allclose(out.data, data)
    assert out.valid_mask.all()


def test_fill_single_hole_constant():
    data = np.full((5, 5, 3), 0.4)
    valid = np.ones((5, 5), dtype=bool)
    valid[2, 2] = False
    data[2, 2] = 0.0
    tex = UvTexture(data, valid, valid.astype(float))
    out = fill_holes(tex, np.ones((5, 5), dtype=bool))
    assert np.allclose(out.data, 0.4)
    assert out.valid_mask.all()


def test_fill_concentric_hole_matches_brute_force(rng):
    h = w = 64
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    r = np.hypot(yy - 31.5, xx - 31.5)
    data = (r / r.max())[..., None] * np.array([1.0, 0.7, 0.3])
    coverage = np.ones((h, w), dtype=bool)
    valid = ~((r > 8) & (r < 20))
    tex = UvTexture(np.where(valid[..., None], data, 0.0), valid, valid.astype(float))
    out = fill_holes(tex, coverage)
    expected = nearest_valid_fill(np.where(valid[..., None], data, 0.0), valid, coverage)
    assert np.array_equal(out.data, expected)


def test_fill_random_masks_match_brute_force(rng):
    for _ in range(5):
        data = rng.random((24, 24, 3))
        valid = rng.random((24, 24)) > 0.6
        if not valid.any():
            valid[0, 0] = True
        coverage = rng.random((24, 24)) > 0.2
        coverage |= valid
        masked = np.where(valid[..., None], data, 0.0)
        tex = UvTexture(masked, valid, valid.astype(float))
        out = fill_holes(tex, coverage)
        expected = nearest_valid_fill(masked, valid, coverage)
        assert np.array_equal(out.data, expected)


def test_fill_never_touches_valid_texels(rng):
    data = rng.random((16, 16, 3))
    valid = rng.random((16, 16)) > 0.5
    valid[0, 0] = True
    tex = UvTexture(data.copy(), valid, valid.astype(float))
    out = fill_holes(tex, np.ones((16, 16), dtype=bool))
    assert np.allclose(out.data[valid], data[valid])


# --- occlusion soundness ------------------------------------------------------


def test_two_plate_rear_gets_zero_frontal_weight():
    mesh = fixtures.two_plates()
    scale = compute_ortho_scale(mesh, 0.05)
    gb = render_all_views(mesh, scale, 256)
    layout, _ = pack_views(gb, (224, 336), 16)
    atlas = compose_atlas(gb, layout)
    tex_atlas = np.zeros_like(atlas.position_map)
    fused, per_view = back_project(
        mesh, layout, tex_atlas, atlas.depth_map, atlas.alpha_map, 256, ortho_scale=scale
    )
    frontal = next(pv for pv in per_view if pv.view_id == "frontal")
    # rear plate charts live at u > 0.5, i.e. the right half of the UV map
    rear_region = frontal.uv_attrs.valid.copy()
    rear_region[:, : 256 // 2 + 2] = False
    assert rear_region.any()
    assert frontal.weights.total[rear_region].max() == 0.0
