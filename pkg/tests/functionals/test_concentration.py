import math

import numpy as np
import pytest
from scipy.special import erfc

from helmholtz_lab.errors import PreconditionError, RangeError
from helmholtz_lab.functionals import (
    angular_profile,
    apriori_bound_ratio,
    beta_indicator,
    check_angular,
    concentration_functional,
    concentration_ratio,
    default_norm_offset,
    dual_norm,
    tangential_energy,
)
from helmholtz_lab.grid import WaveField, build_grid, gaussian_bump
from helmholtz_lab.model import FieldExpr, Scenario, scenario_from_preset
from helmholtz_lab.solver import solve_fixed_epsilon


@pytest.fixture(scope="module")
def fine_grid():
    return build_grid(2, 6.0, 129)


class TestConcentration:
    def test_angular_identity(self, fine_grid):
        u = WaveField(np.exp(-((fine_grid.radii - 3.0) ** 2)), fine_grid)
        value = concentration_functional(u, "2 + 0.5*w1", R=1.0)

        mask = fine_grid.radii >= 1.0
        w1 = fine_grid.directions[mask, 0]
        expected = fine_grid.integrate(0.25 * (1.0 - w1**2) * u.density[mask] / fine_grid.radii[mask])
        assert value == pytest.approx(expected, rel=1e-6)

    def test_quadrature_oracle(self, fine_grid):
        u = WaveField(np.exp(-((fine_grid.radii - 3.0) ** 2)), fine_grid)
        value = concentration_functional(u, "2 + 0.5*w1", R=1.0)
        # 0.25 pi int_1^inf exp(-2 (r - 3)^2) dr
        oracle = 0.25 * math.pi * math.sqrt(math.pi / 2.0) / 2.0 * erfc(-2.0 * math.sqrt(2.0))
        assert value == pytest.approx(oracle, rel=0.02)

    def test_constant_index(self, grid_2d):
        assert concentration_functional(gaussian_bump(grid_2d), "2", R=1.0) == 0.0

    def test_radius_dependent_index(self, grid_2d):
        with pytest.raises(PreconditionError):
            concentration_functional(gaussian_bump(grid_2d), "2 + exp(-r)")

    def test_small_radius(self, grid_2d):
        with pytest.raises(PreconditionError):
            concentration_functional(gaussian_bump(grid_2d), "2 + 0.5*w1", R=0.5)

    def test_check_angular(self):
        check_angular(FieldExpr("2 + w1*w2", 2))
        check_angular(FieldExpr("x1/r", 2))
        with pytest.raises(PreconditionError):
            check_angular(FieldExpr("x1", 2))

    def test_ratio(self, grid_2d):
        scenario = scenario_from_preset("angular-index", half_width=4.0, points_per_axis=33)
        u = gaussian_bump(grid_2d, width=1.5)
        source = WaveField(scenario.source(grid_2d.points), grid_2d)
        assert concentration_ratio(u, source, scenario) > 0
        assert concentration_ratio(u, WaveField.zeros(grid_2d), scenario) == 0.0

    def test_ratio_uses_planar_norm_offset(self, grid_2d):
        index = "0.25 + 0.05*w1"
        scenario = Scenario(dimension=2, lam=0.25, n=index, n_inf=index, half_width=4.0, points_per_axis=33)
        u = gaussian_bump(grid_2d, width=1.5)
        source = WaveField(scenario.source(grid_2d.points), grid_2d)

        offset = default_norm_offset(scenario, grid_2d)
        n0 = np.min(scenario.refraction(grid_2d.points[grid_2d.radii >= 1.0]))
        assert offset == pytest.approx(1.0 / math.sqrt(n0))
        assert offset > 2.0

        scaled = WaveField(source.values / np.sqrt(scenario.refraction(grid_2d.points)), grid_2d)
        expected = concentration_functional(u, scenario.n_inf, 1.0) / dual_norm(scaled, offset) ** 2
        assert concentration_ratio(u, source, scenario) == pytest.approx(expected, rel=1e-12)
        assert concentration_ratio(u, source, scenario, R0=1.0) != pytest.approx(expected, rel=1e-3)


def test_tangential_energy_oracle():
    # u = w1 r exp(-r^2): int |grad_perp u|^2 / |x| = pi int_0^inf exp(-2 r^2) dr
    grid = build_grid(2, 4.0, 257)
    scenario = scenario_from_preset("free", lam=1.0, dimension=2)
    u = WaveField(grid.points[:, 0] * np.exp(-grid.radii**2), grid)
    oracle = math.pi * 0.5 * math.sqrt(math.pi / 2.0)
    assert tangential_energy(u, scenario) == pytest.approx(oracle, rel=0.03)


def test_tangential_energy_of_radial_field(grid_2d, free_2d):
    u = WaveField(np.exp(-grid_2d.radii**2), grid_2d)
    radial_only = tangential_energy(u, free_2d)
    assert radial_only < 1e-2 * tangential_energy(WaveField(grid_2d.points[:, 0] * u.values, grid_2d), free_2d)


class TestAprioriBound:
    def test_gaussian_oracle(self):
        # u = exp(-r^2), n = 1, R0 = n0^(-1/2) = 1 and f the normalized Gaussian
        grid = build_grid(2, 4.0, 129)
        scenario = scenario_from_preset("free", lam=1.0, dimension=2, epsilon=0.5)
        u = WaveField(np.exp(-grid.radii**2), grid)
        source = WaveField(scenario.source(grid.points), grid)

        radius = np.linspace(1.0, 4.0, 6001)
        gradient_mass = 2.0 * math.pi * (0.5 - (radius**2 + 0.5) * np.exp(-2.0 * radius**2))
        field_mass = 0.5 * math.pi * (1.0 - np.exp(-2.0 * radius**2))
        energy = np.max(gradient_mass / radius) + np.max(field_mass / radius)

        def source_mass(r_lo, r_hi):
            return math.pi * (math.exp(-(r_lo**2)) - math.exp(-(r_hi**2))) / (2.0 * math.pi) ** 2

        dual = math.sqrt(source_mass(0.0, 1.0))
        dual += sum(math.sqrt(2.0 ** (j + 1) * source_mass(max(1.0, 2.0**j), 2.0 ** (j + 1))) for j in range(3))
        assert apriori_bound_ratio(u, source, scenario) == pytest.approx(energy / dual**2, rel=0.03)
        assert apriori_bound_ratio(u, source, scenario, R0=1.0) == apriori_bound_ratio(u, source, scenario)

    def test_scaling_and_tangential_part(self, grid_2d, magnetic_2d):
        u = gaussian_bump(grid_2d, width=1.5, wavevector=np.array([1.0, 0.5]))
        source = WaveField(magnetic_2d.source(grid_2d.points), grid_2d)
        ratio = apriori_bound_ratio(u, source, magnetic_2d)
        doubled_u = WaveField(2.0 * u.values, grid_2d)
        doubled_source = WaveField(2.0 * source.values, grid_2d)
        assert apriori_bound_ratio(doubled_u, source, magnetic_2d) == pytest.approx(4.0 * ratio)
        assert apriori_bound_ratio(u, doubled_source, magnetic_2d) == pytest.approx(ratio / 4.0)
        assert tangential_energy(u, magnetic_2d, R0=2.0) < tangential_energy(u, magnetic_2d)

    def test_zero_source(self, grid_2d, free_2d):
        assert apriori_bound_ratio(gaussian_bump(grid_2d), WaveField.zeros(grid_2d), free_2d) == 0.0

    def test_nonpositive_index(self, grid_2d):
        scenario = Scenario(dimension=2, lam=1.0, n="x1")
        with pytest.raises(PreconditionError):
            apriori_bound_ratio(gaussian_bump(grid_2d), gaussian_bump(grid_2d), scenario)


class TestAngularProfile:
    def test_isotropic_planar_field(self, fine_grid):
        u = WaveField(np.exp(-((fine_grid.radii - 3.0) ** 2)), fine_grid)
        profile = angular_profile(u, (2.0, 4.0), bins=8)
        assert profile.mass.sum() == pytest.approx(1.0)
        assert profile.centers.shape == (8,)
        assert profile.uniformity < 1.1

    def test_cone_fraction(self, fine_grid):
        # |u|^2 concentrated around +-e1
        u = WaveField(fine_grid.directions[:, 0] ** 8 * np.exp(-((fine_grid.radii - 3.0) ** 2)), fine_grid)
        profile = angular_profile(u, (2.0, 4.0), bins=36)
        assert profile.cone_fraction() > profile.cone_fraction(axis=np.array([0.0, 1.0]))
        assert profile.cone_fraction(half_angle=math.pi) == pytest.approx(1.0)

    def test_sphere_bins(self, grid_3d):
        profile = angular_profile(gaussian_bump(grid_3d, width=2.0), (1.0, 3.0), bins=4)
        np.testing.assert_allclose(profile.edges, [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_empty_shell(self, grid_2d):
        with pytest.raises(RangeError):
            angular_profile(gaussian_bump(grid_2d), (100.0, 200.0))

    def test_vanishing_field(self, grid_2d):
        with pytest.raises(RangeError):
            angular_profile(WaveField.zeros(grid_2d), (1.0, 2.0))


@pytest.mark.slow
class TestConcentrationTrend:
    """n = n_inf = 2 + 0.5 w1 with a weak azimuthal b, solved at eps = 1 on boxes of the same spacing."""

    @staticmethod
    def solve(half_width, points):
        scenario = scenario_from_preset(
            "angular-index",
            lam=2.0,
            dimension=2,
            epsilon=1.0,
            half_width=half_width,
            points_per_axis=points,
            b=("-0.05*x2/(1 + x1^2 + x2^2)", "0.05*x1/(1 + x1^2 + x2^2)"),
        )
        grid = build_grid(2, half_width, points)
        u, _ = solve_fixed_epsilon(grid, scenario, tol=1e-10, preconditioner="ilu")
        return scenario, grid, u

    def test_mass_moves_towards_maximal_index(self):
        scenario, grid, u = self.solve(16.0, 129)
        assert beta_indicator(scenario, grid) < 1.0
        inner = angular_profile(u, (2.0, 4.0)).cone_fraction(both=False)
        outer = angular_profile(u, (4.0, 8.0)).cone_fraction(both=False)
        assert outer > inner

    def test_ratio_stable_when_box_doubles(self):
        ratios = []
        for half_width, points in [(8.0, 65), (16.0, 129)]:
            scenario, grid, u = self.solve(half_width, points)
            source = WaveField(scenario.source(grid.points), grid)
            ratios.append(concentration_ratio(u, source, scenario))
        assert all(ratio > 0 for ratio in ratios)
        assert max(ratios) / min(ratios) <= 1.5
