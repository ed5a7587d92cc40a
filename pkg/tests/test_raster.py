from __future__ import annotations

import numpy as np
import pytest

from oracles import raycast_depth
from viewpack import fixtures
from viewpack.mesh import DegenerateMeshError, Mesh
from viewpack.raster import (
    BACKGROUND_DEPTH,
    OverlappingUvChartsError,
    compute_ortho_scale,
    rasterize_uv_attributes,
    render_textured_view,
    render_view,
)
from viewpack.sampling import resize_bilinear, sample_bilinear
from viewpack.views import canonical_views, ndc_to_pixel


def _quad_mesh(half=1.0, z=0.0):
    verts = np.array(
        [(-half, -half, z), (half, -half, z), (half, half, z), (-half, half, z)]
    )
    uvs = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    faces = np.array([(0, 1, 2), (0, 2, 3)], dtype=np.int32)
    return Mesh(verts, faces, uvs, faces.copy())


def _two_quads(z_near=0.25, z_far=-0.5):
    near = _quad_mesh(0.6, z_near)
    far = _quad_mesh(0.9, z_far)
    verts = np.vstack([near.vertices, far.vertices])
    faces = np.vstack([near.faces, far.faces + 4]).astype(np.int32)
    uvs = np.vstack([near.uv_coords * 0.45, far.uv_coords * 0.45 + 0.55])
    fuvs = np.vstack([near.face_uvs, far.face_uvs + 4]).astype(np.int32)
    return Mesh(verts, faces, uvs, fuvs)


# --- ortho scale -----------------------------------------------------------


def test_ortho_scale_cube():
    mesh = fixtures.box()  # normalized unit cube
    scale = compute_ortho_scale(mesh, 0.05)
    # oracle: max projected half-extent over the six canonical views
    extent = 0.0
    for spec in canonical_views(1.0).values():
        proj = spec.project(mesh.vertices)
        extent = max(extent, float(np.abs(proj[:, :2]).max()))
    assert np.isclose(extent, 1.0)
    assert np.isclose(scale, 1.0 / 0.9)


def test_ortho_scale_degenerate_point():
    mesh = Mesh(
        np.zeros((1, 3)), np.zeros((0, 3), np.int32), np.zeros((0, 2)), np.zeros((0, 3), np.int32)
    )
    with pytest.raises(DegenerateMeshError):
        compute_ortho_scale(mesh, 0.05)


def test_ortho_scale_zero_margin_sphere(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.0)
    # tessellated silhouette half-extent is just under the unit radius
    assert 0.98 < scale <= 1.0 + 1e-9


def test_ortho_scale_rejects_bad_margin(sphere_mesh):
    with pytest.raises(ValueError):
        compute_ortho_scale(sphere_mesh, 0.5)


# --- render_view -----------------------------------------------------------


def test_fullscreen_quad_frontal():
    mesh = _quad_mesh()
    view = canonical_views(1.0)["frontal"]
    gb = render_view(mesh, view, 64)
    assert gb.alpha_map.all()
    assert np.allclose(gb.normal_map, [0.0, 0.0, 1.0])
    assert np.allclose(gb.depth_map, 0.0, atol=1e-12)
    assert np.allclose(gb.position_map[..., 2], 0.0)


def test_depth_test_keeps_nearest():
    mesh = _two_quads(z_near=0.25, z_far=-0.5)
    view = canonical_views(1.0)["frontal"]
    gb = render_view(mesh, view, 128)
    # depth of the near quad is -0.25 (larger = farther)
    inner = gb.depth_map[40:88, 40:88]
    assert np.allclose(inner, -0.25)
    corner = gb.depth_map[8:16, 8:16]
    assert np.allclose(corner, 0.5)


def test_sphere_alpha_disc_fraction(sphere_mesh):
    view = canonical_views(1.0)["frontal"]
    gb = render_view(sphere_mesh, view, 512)
    frac = gb.alpha_map.mean()
    assert abs(frac - np.pi / 4) < 0.02 * np.pi / 4 + 0.01


def test_normals_unit_length_where_covered(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.05)
    gb = render_view(sphere_mesh, canonical_views(scale)["frontal"], 128)
    norms = np.linalg.norm(gb.normal_map[gb.alpha_map == 1], axis=1)
    assert np.abs(norms - 1.0).max() < 1e-4


def test_vertex_ndc_depth_consistency(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.05)
    view = canonical_views(scale)["frontal"]
    gb = render_view(sphere_mesh, view, 256)
    # visible vertices: sampling the depth map at their NDC matches their depth
    ndc = gb.vertex_ndc
    front = sphere_mesh.normals[:, 2] > 0.5  # clearly facing the frontal camera
    px = ndc_to_pixel(ndc[front, :2], 256, 256)
    sampled = sample_bilinear(gb.depth_map, px[:, 0], px[:, 1])
    err = np.abs(sampled - ndc[front, 2])
    assert np.quantile(err, 0.95) < 2.0 * scale * 2.0 / 256


def test_alpha_monotone_in_resolution(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.05)
    view = canonical_views(scale)["frontal"]
    fractions = []
    for res in (128, 256, 512):
        gb = render_view(sphere_mesh, view, res)
        fractions.append(int(gb.alpha_map.sum()) * (512 // res) ** 2)
    assert fractions[0] <= fractions[1] * 1.01 and fractions[1] <= fractions[2] * 1.01


def test_depth_matches_raycast_oracle():
    meshes = [
        fixtures.box(half_extents=(0.937, 0.71, 0.53)),
        fixtures.tetrahedron(),
        fixtures.rotated_box(),
        fixtures.two_plates(),
    ]
    for mesh in meshes:
        assert mesh.num_faces <= 50
        scale = compute_ortho_scale(mesh, 0.05)
        for vid in ("frontal", "left", "top"):
            view = canonical_views(scale)[vid]
            gb = render_view(mesh, view, 128)
            oracle = raycast_depth(mesh, view, 128)
            assert np.abs(gb.depth_map - oracle).max() < 1e-5


# --- render_textured_view --------------------------------------------------


def test_textured_constant_red():
    mesh = _quad_mesh()
    tex = np.zeros((16, 16, 3))
    tex[..., 0] = 1.0
    img, alpha = render_textured_view(mesh, tex, canonical_views(1.2)["frontal"], 64)
    fg = alpha == 1
    assert fg.any()
    assert np.allclose(img[fg], [1.0, 0.0, 0.0])
    assert np.allclose(img[~fg], 0.0)


def test_textured_identity_quad_equals_resize():
    mesh = _quad_mesh()
    tex = fixtures.procedural_texture(128)
    img, alpha = render_textured_view(mesh, tex, canonical_views(1.0)["frontal"], 64)
    assert alpha.all()
    expected = resize_bilinear(tex, 64, 64)
    assert np.abs(img - expected).max() <= 2.0 / 255


def test_textured_sphere_mirror_views():
    # checker with an odd column count is symmetric under z -> -z, so the rear
    # view is the exact mirror of the frontal view up to filtering
    mesh = fixtures.uv_sphere(32, 64)
    tex = fixtures.checker_texture(512, cols=9, rows=8)
    scale = compute_ortho_scale(mesh, 0.05)
    views = canonical_views(scale)
    front, fa = render_textured_view(mesh, tex, views["frontal"], 256)
    rear, ra = render_textured_view(mesh, tex, views["rear"], 256)
    mirrored = rear[:, ::-1]
    ma = ra[:, ::-1]
    both = (fa == 1) & (ma == 1)
    # compare away from checker edges: keep pixels whose 5x5 patch is uniform
    close = np.abs(front - mirrored).max(axis=2) < 2.0 / 255
    agree = close[both].mean()
    assert agree > 0.85
    diff = np.abs(front - mirrored)[both].mean()
    assert diff < 0.05


# --- rasterize_uv_attributes ------------------------------------------------


def test_uv_attrs_identity_quad_gradient():
    mesh = _quad_mesh()
    view = canonical_views(1.0)["frontal"]
    attrs = rasterize_uv_attributes(mesh, view, 64)
    assert attrs.valid.all()
    # identity UV on a fullscreen quad: texel (r, c) maps to its own NDC
    cols = (np.arange(64) + 0.5) / 64 * 2.0 - 1.0
    assert np.allclose(attrs.ndc[32, :, 0], cols, atol=1e-9)
    rows = 1.0 - (np.arange(64) + 0.5) / 64 * 2.0
    assert np.allclose(attrs.ndc[:, 32, 1], rows, atol=1e-9)


def test_uv_attrs_backface_sign():
    mesh = _quad_mesh()
    rear = canonical_views(1.0)["rear"]
    attrs = rasterize_uv_attributes(mesh, rear, 32)
    # quad faces +z; from the rear view the camera-space normal points away
    assert np.all(attrs.cam_normal[attrs.valid][:, 2] <= 0.0)


def test_uv_attrs_validity_view_independent(torus_mesh):
    scale = compute_ortho_scale(torus_mesh, 0.05)
    views = canonical_views(scale)
    masks = [rasterize_uv_attributes(torus_mesh, views[v], 128).valid for v in views]
    for m in masks[1:]:
        assert np.array_equal(masks[0], m)


def test_uv_attrs_rejects_overlapping_charts():
    verts = np.array([(-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0), (0, 0, 0.5)])
    faces = np.array([(0, 1, 2), (0, 1, 4)], dtype=np.int32)
    uvs = np.array([(0.1, 0.1), (0.9, 0.1), (0.6, 0.9), (0.55, 0.85)])
    fuvs = np.array([(0, 1, 2), (0, 1, 3)], dtype=np.int32)  # overlapping in UV
    mesh = Mesh(verts, faces, uvs, fuvs)
    with pytest.raises(OverlappingUvChartsError):
        rasterize_uv_attributes(mesh, canonical_views(1.0)["frontal"], 64)


def test_corpus_uv_charts_never_overlap():
    view = canonical_views(1.5)["frontal"]
    for name, mesh in fixtures.corpus_meshes():
        attrs = rasterize_uv_attributes(mesh, view, 128)  # raises on overlap
        assert attrs.valid.any(), name


def test_dual_rasterization_consistency(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.05)
    view = canonical_views(scale)["frontal"]
    res = 256
    gb = render_view(sphere_mesh, view, res)
    attrs = rasterize_uv_attributes(sphere_mesh, view, 128)
    facing = attrs.valid & (attrs.cam_normal[..., 2] > 0.5)
    rows, cols = np.nonzero(facing)
    rng = np.random.default_rng(7)
    pick = rng.choice(len(rows), size=200, replace=False)
    ndc = attrs.ndc[rows[pick], cols[pick]]
    expected = attrs.position[rows[pick], cols[pick]]
    px = ndc_to_pixel(ndc, res, res)
    sampled = sample_bilinear(gb.position_map, px[:, 0], px[:, 1])
    err = np.linalg.norm(sampled - expected, axis=1)
    tol = 2.0 * (2.0 * scale / res)
    assert np.quantile(err, 0.95) < tol
