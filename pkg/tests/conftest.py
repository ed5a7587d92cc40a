from __future__ import annotations

import numpy as np
import pytest

from viewpack import fixtures
from viewpack.raster import compute_ortho_scale, render_all_views

SMALL_ATLAS = (224, 336)


@pytest.fixture(scope="session")
def sphere_mesh():
    return fixtures.uv_sphere(24, 48)


@pytest.fixture(scope="session")
def sphere_gbuffers(sphere_mesh):
    scale = compute_ortho_scale(sphere_mesh, 0.05)
    return scale, render_all_views(sphere_mesh, scale, 256)


@pytest.fixture(scope="session")
def torus_mesh():
    return fixtures.torus()


@pytest.fixture(scope="session")
def box_mesh():
    return fixtures.box(half_extents=(1.0, 0.5, 0.25))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
