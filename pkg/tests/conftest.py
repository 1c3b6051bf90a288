import numpy as np
import pytest

from conetool import build_cone_grid, build_cross_section


@pytest.fixture
def circle1():
    return build_cross_section("circle", 4, scale=1.0)


@pytest.fixture
def circle2():
    return build_cross_section("circle", 4, scale=2.0)


@pytest.fixture
def sphere2():
    return build_cross_section("sphere", 6, dim_n=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid(circle1):
    return build_cone_grid(circle1, n_x=48, x_min=0.05)
