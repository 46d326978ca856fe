import numpy as np
import pytest

from helmholtz_lab.grid import Grid, build_grid
from helmholtz_lab.model import Scenario, scenario_from_preset


@pytest.fixture
def grid_2d() -> Grid:
    return build_grid(dimension=2, half_width=4.0, points_per_axis=33)


@pytest.fixture
def grid_3d() -> Grid:
    return build_grid(dimension=3, half_width=4.0, points_per_axis=17)


@pytest.fixture
def free_2d() -> Scenario:
    return scenario_from_preset("free", lam=1.0, dimension=2, epsilon=0.5, half_width=4.0, points_per_axis=33)


@pytest.fixture
def magnetic_2d() -> Scenario:
    return Scenario(
        dimension=2,
        lam=1.5,
        epsilon=0.3,
        n="1.5 + 0.2*exp(-r^2)",
        q_pot="0.1*exp(-x1^2 - x2^2)",
        b=("-0.3*x2/(1 + r^2)", "0.3*x1/(1 + r^2)"),
        half_width=4.0,
        points_per_axis=33,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
