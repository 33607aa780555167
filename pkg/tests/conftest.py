import functools

import numpy as np
import pytest

from infbend.geometry import build_geometry
from infbend.scenes import make_product, make_scene

# fine non-periodic patch of the cylinder; small h keeps c*h^2 tolerances below the signals
CYL_PATCH = [(0.2, 1.0), (0.0, 0.8)]


@functools.lru_cache(maxsize=None)
def geom_for(token: str, resolution=None, chart=None):
    chart = None if chart is None else [list(c) for c in chart]
    return build_geometry(make_scene(token, resolution, chart))


@functools.lru_cache(maxsize=None)
def product_for(token: str, resolution=None):
    scene, structure = make_product(token, resolution)
    return build_geometry(scene), structure


@pytest.fixture
def cyl():
    return geom_for("cylinder", 64)


@pytest.fixture
def cyl_patch():
    return geom_for("cylinder", 64, tuple(CYL_PATCH))


@pytest.fixture
def torus():
    return geom_for("torus", 32)


@pytest.fixture
def rng():
    return np.random.default_rng(0x5EED)
