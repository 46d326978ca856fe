import math

import numpy as np
import pytest

from helmholtz_lab.functionals import (
    default_norm_offset,
    dual_norm,
    dual_norm_terms,
    dyadic_shell_masses,
    field_density,
    mc_norm,
)
from helmholtz_lab.grid import GradientField, WaveField, build_grid
from helmholtz_lab.model import scenario_from_preset


def random_field(grid, rng) -> WaveField:
    values = rng.normal(size=grid.num_nodes) + 1j * rng.normal(size=grid.num_nodes)
    return WaveField(values * np.exp(-grid.radii), grid)


class TestMorreyCampanato:
    def test_zero_field(self, grid_2d):
        assert mc_norm(WaveField.zeros(grid_2d)) == 0.0
        assert dual_norm(WaveField.zeros(grid_2d)) == 0.0

    def test_single_node(self, grid_2d):
        values = np.zeros(grid_2d.num_nodes)
        node = int(np.argmin(np.abs(grid_2d.radii - 2.0)))
        values[node] = 1.0
        norm = mc_norm(values, grid=grid_2d)
        assert norm == pytest.approx(math.sqrt(grid_2d.cell_volume / grid_2d.radii[node]))

    def test_offset_ball_candidate(self, grid_2d):
        values = np.zeros(grid_2d.num_nodes)
        node = int(np.argmin(grid_2d.radii))
        values[node] = 1.0
        # All mass sits inside the ball of radius 1, the supremum is attained as R -> 1+.
        assert mc_norm(values, R0=1.0, grid=grid_2d) == pytest.approx(math.sqrt(grid_2d.cell_volume))

    def test_negative_offset(self, grid_2d):
        with pytest.raises(ValueError):
            mc_norm(WaveField.zeros(grid_2d), R0=-1.0)

    def test_gradient_field_density(self, grid_2d):
        components = np.ones((grid_2d.num_nodes, 2), dtype=np.complex128)
        density, grid = field_density(GradientField(components, grid_2d))
        assert grid is grid_2d
        np.testing.assert_allclose(density, 2.0)

    def test_raw_array_needs_grid(self, grid_2d):
        with pytest.raises(ValueError):
            mc_norm(np.ones(grid_2d.num_nodes))


class TestDualNorm:
    def test_terms_partition_the_nodes(self, grid_2d, rng):
        field = random_field(grid_2d, rng)
        masses = dyadic_shell_masses(field, R0=1.0)
        ball = grid_2d.integrate(field.density, grid_2d.radii <= 1.0)
        assert sum(masses.values()) + ball == pytest.approx(field.norm() ** 2)

        terms = dual_norm_terms(field, R0=1.0)
        assert "ball" in terms
        assert sum(terms.values()) == pytest.approx(dual_norm(field, R0=1.0))

    def test_no_ball_without_offset(self, grid_2d, rng):
        assert "ball" not in dual_norm_terms(random_field(grid_2d, rng))

    @pytest.mark.parametrize("offset", [0.0, 1.0, 2.5])
    def test_duality(self, grid_2d, rng, offset):
        for _ in range(100):
            f = random_field(grid_2d, rng)
            g = random_field(grid_2d, rng)
            pairing = abs(np.vdot(g.values, f.values)) * grid_2d.cell_volume
            assert pairing <= mc_norm(f, offset) * dual_norm(g, offset) * (1.0 + 1e-10)


@pytest.mark.slow
class TestUnitBall:
    @pytest.fixture(scope="class")
    def indicator(self):
        grid = build_grid(3, 1.25, 161)
        return WaveField((grid.radii <= 1.0).astype(float), grid)

    def test_mc_norm(self, indicator):
        assert mc_norm(indicator) == pytest.approx(math.sqrt(4.0 * math.pi / 3.0), rel=0.02)

    def test_dual_norm(self, indicator):
        assert dual_norm(indicator) == pytest.approx(math.sqrt(56.0 * math.pi / 3.0) / 3.0, rel=0.02)


def test_default_norm_offset(grid_2d, grid_3d):
    planar = scenario_from_preset("free", lam=4.0, dimension=2)
    assert default_norm_offset(planar, grid_2d) == pytest.approx(0.5)

    spatial = scenario_from_preset("free", lam=4.0, dimension=3, big_r0=2.0)
    assert default_norm_offset(spatial, grid_3d) == 2.0
