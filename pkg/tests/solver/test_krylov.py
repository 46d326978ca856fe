import numpy as np
import pytest
from scipy.integrate import trapezoid

from helmholtz_lab.errors import ConfigError, ConvergenceError, PreconditionError
from helmholtz_lab.grid import WaveField, build_grid, gaussian_bump
from helmholtz_lab.model import scenario_from_preset
from helmholtz_lab.solver import SolverSettings, manufactured_source, solve_fixed_epsilon


@pytest.fixture
def manufactured(grid_2d, free_2d):
    u_star = gaussian_bump(grid_2d, width=0.8, wavevector=np.array([1.0, 0.0]))
    return u_star, manufactured_source(grid_2d, free_2d, u_star)


class TestSolverSettings:
    def test_defaults(self):
        settings = SolverSettings()
        assert settings.tol == 1e-8
        assert settings.max_iter == 20000
        assert settings.method == "gmres"
        assert settings.preconditioner == "diagonal"

    @pytest.mark.parametrize(
        "changes",
        [
            {"tol": 0.5},
            {"tol": 1e-16},
            {"max_iter": 0},
            {"method": "cg"},
            {"preconditioner": "amg"},
            {"eps_start": 0.0},
            {"eps_factor": 1.0},
            {"eps_count": 1},
        ],
    )
    def test_invalid(self, changes):
        with pytest.raises(ConfigError):
            SolverSettings(**changes)


class TestSolveFixedEpsilon:
    @pytest.mark.parametrize("preconditioner", ["ilu", "diagonal"])
    def test_recovers_manufactured_solution(self, grid_2d, free_2d, manufactured, preconditioner):
        u_star, f = manufactured
        u, stats = solve_fixed_epsilon(grid_2d, free_2d, tol=1e-10, source=f, preconditioner=preconditioner)
        assert stats.final_relative_residual <= 1e-10
        assert stats.preconditioner == preconditioner
        assert stats.epsilon == free_2d.epsilon
        assert np.linalg.norm(u.values - u_star.values) <= 1e-6 * np.linalg.norm(u_star.values)

    def test_bicgstab(self, grid_2d, free_2d, manufactured):
        u_star, f = manufactured
        u, stats = solve_fixed_epsilon(grid_2d, free_2d, tol=1e-10, source=f, method="bicgstab", preconditioner="ilu")
        assert stats.method == "bicgstab"
        assert np.linalg.norm(u.values - u_star.values) <= 1e-6 * np.linalg.norm(u_star.values)

    def test_magnetic_scenario(self, grid_2d, magnetic_2d):
        u_star = gaussian_bump(grid_2d, width=0.8, wavevector=np.array([0.0, 1.0]))
        f = manufactured_source(grid_2d, magnetic_2d, u_star)
        u, _ = solve_fixed_epsilon(grid_2d, magnetic_2d, tol=1e-10, source=f, preconditioner="ilu")
        assert np.linalg.norm(u.values - u_star.values) <= 1e-6 * np.linalg.norm(u_star.values)

    def test_scenario_source(self, grid_2d, free_2d):
        u, stats = solve_fixed_epsilon(grid_2d, free_2d, tol=1e-8, preconditioner="ilu")
        f = WaveField(free_2d.source(grid_2d.points), grid_2d)
        residual = manufactured_source(grid_2d, free_2d, u).values - f.values
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(f.values)
        assert stats.iterations > 0

    def test_zero_source(self, grid_2d, free_2d):
        u, stats = solve_fixed_epsilon(grid_2d, free_2d, source=WaveField.zeros(grid_2d))
        assert not np.any(u.values)
        assert stats.iterations == 0
        assert stats.final_relative_residual == 0.0

    def test_epsilon_must_be_positive(self, grid_2d, free_2d):
        with pytest.raises(PreconditionError):
            solve_fixed_epsilon(grid_2d, free_2d, epsilon=0.0)

    def test_tolerance_range(self, grid_2d, free_2d):
        with pytest.raises(PreconditionError):
            solve_fixed_epsilon(grid_2d, free_2d, tol=0.1)

    def test_non_convergence(self, grid_2d, free_2d, manufactured):
        _, f = manufactured
        with pytest.raises(ConvergenceError) as excinfo:
            solve_fixed_epsilon(grid_2d, free_2d, tol=1e-12, max_iter=2, source=f, preconditioner="none")
        assert excinfo.value.best_iterate.shape == (grid_2d.num_nodes,)
        assert len(excinfo.value.residual_history) <= 2


def radial_green_convolution(radius, f_profile, k, s_max=12.0, samples=12001):
    """
    u = G * f for a radial source in d = 3, G = -exp(ik|x|) / (4 pi |x|):

        u(r) = -1/(2ikr) int_0^inf s f(s) (exp(ik(r + s)) - exp(ik|r - s|)) ds
    """
    s = np.linspace(0.0, s_max, samples)
    r = np.asarray(radius)[:, None]
    kernel = np.exp(1j * k * (r + s)) - np.exp(1j * k * np.abs(r - s))
    integral = trapezoid(s * f_profile(s) * kernel, s, axis=-1)
    return -integral / (2j * k * np.asarray(radius))


@pytest.mark.slow
@pytest.mark.parametrize(
    "half_width, points, epsilon",
    [
        (8.0, 65, 1.0),
        # eps L / (2 sqrt(lambda)) = 4 keeps the Dirichlet reflections damped on the full-size box
        (16.0, 129, 0.5),
    ],
)
def test_free_space_matches_green_convolution(half_width, points, epsilon):
    grid = build_grid(3, half_width, points)
    scenario = scenario_from_preset("free", lam=1.0, dimension=3, epsilon=epsilon)
    u, _ = solve_fixed_epsilon(grid, scenario, tol=1e-8, preconditioner="shifted-laplacian", restart=30)

    k = np.sqrt(1.0 + 1j * epsilon)
    inner = half_width / 2.0
    table = np.linspace(0.05, inner + 0.5, 400)
    oracle_table = radial_green_convolution(table, lambda s: (2.0 * np.pi) ** -1.5 * np.exp(-(s**2) / 2.0), k)
    mask = grid.radii <= inner
    radius = grid.radii[mask]
    oracle = np.interp(radius, table, oracle_table.real) + 1j * np.interp(radius, table, oracle_table.imag)
    error = np.linalg.norm(u.values[mask] - oracle) / np.linalg.norm(oracle)
    assert error <= 0.05
