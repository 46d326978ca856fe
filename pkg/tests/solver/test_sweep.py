import logging

import numpy as np
import pytest

import helmholtz_lab.solver.sweep as sweep_module
from helmholtz_lab.errors import FieldEvaluationError, PreconditionError, SweepAbortedError
from helmholtz_lab.functionals import FunctionalName
from helmholtz_lab.grid import WaveField, build_grid, gaussian_bump
from helmholtz_lab.model import scenario_from_preset
from helmholtz_lab.solver import epsilon_sweep, solve_fixed_epsilon, sweep_schedule, uniform_bound_ratio


class TestSchedule:
    def test_geometric(self):
        assert sweep_schedule(0.1, 0.5, 3) == pytest.approx([0.1, 0.05, 0.025])

    @pytest.mark.parametrize("args", [(0.1, 0.5, 1), (0.1, 1.0, 3), (0.0, 0.5, 3)])
    def test_invalid(self, args):
        with pytest.raises(PreconditionError):
            sweep_schedule(*args)


class TestEpsilonSweep:
    def test_report(self, grid_2d, free_2d):
        report = epsilon_sweep(grid_2d, free_2d, epsilons=[1.0, 0.5], preconditioner="ilu")
        assert report.epsilons == [1.0, 0.5]
        assert len(report.rhos) == 2
        assert all(rho > 0 for rho in report.rhos)
        assert len(report.cauchy_gaps) == 1
        assert report.cauchy_gaps[0] > 0
        assert report.rho_spread >= 1.0
        assert report.steps[0].solution is None
        assert report.steps[-1].solution is not None
        assert report.steps[0].report.name is FunctionalName.LAP_RATIO

        frame = report.to_frame()
        assert list(frame.columns) == ["epsilon", "iterations", "residual", "rho", "cauchy_gap"]
        assert np.isnan(frame["cauchy_gap"][0])
        assert frame["cauchy_gap"][1] == pytest.approx(report.cauchy_gaps[0])

    def test_keep_solutions(self, grid_2d, free_2d):
        report = epsilon_sweep(grid_2d, free_2d, epsilons=[1.0, 0.5], preconditioner="ilu", keep_solutions=True)
        assert all(step.solution is not None for step in report.steps)

    def test_weak_damping_warning(self, grid_2d, free_2d, caplog):
        with caplog.at_level(logging.WARNING):
            epsilon_sweep(grid_2d, free_2d, epsilons=[1.0, 0.5], preconditioner="ilu")
        assert "Weak damping" in caplog.text

    def test_increasing_schedule(self, grid_2d, free_2d):
        with pytest.raises(PreconditionError):
            epsilon_sweep(grid_2d, free_2d, epsilons=[0.5, 1.0])

    def test_aborted_sweep(self, grid_2d, free_2d):
        with pytest.raises(SweepAbortedError) as excinfo:
            epsilon_sweep(grid_2d, free_2d, epsilons=[1.0, 0.5], tol=1e-12, max_iter=1, preconditioner="none")
        assert excinfo.value.partial_report.steps == []

    def test_field_failure_keeps_completed_steps(self, grid_2d, free_2d, monkeypatch):
        calls = []

        def failing_solve(*args, **kwargs):
            calls.append(kwargs["epsilon"])
            if len(calls) == 2:
                raise FieldEvaluationError("n evaluated to NaN")
            return solve_fixed_epsilon(*args, **kwargs)

        monkeypatch.setattr(sweep_module, "solve_fixed_epsilon", failing_solve)
        with pytest.raises(SweepAbortedError) as excinfo:
            epsilon_sweep(grid_2d, free_2d, epsilons=[1.0, 0.5, 0.25], preconditioner="ilu")
        assert excinfo.value.partial_report.epsilons == [1.0]
        assert isinstance(excinfo.value.__cause__, FieldEvaluationError)
        assert excinfo.value.best_iterate is None
        assert calls == [1.0, 0.5]

    def test_cold_start_with_workers(self, grid_2d, free_2d):
        kwargs = dict(epsilons=[1.0, 0.5, 0.25], warm_start=False, preconditioner="ilu", tol=1e-10)
        sequential = epsilon_sweep(grid_2d, free_2d, **kwargs)
        threaded = epsilon_sweep(grid_2d, free_2d, num_workers=3, **kwargs)
        assert threaded.epsilons == sequential.epsilons
        np.testing.assert_allclose(threaded.rhos, sequential.rhos, rtol=1e-10)
        np.testing.assert_allclose(threaded.cauchy_gaps, sequential.cauchy_gaps, rtol=1e-10)


def test_uniform_bound_ratio_zero_source(grid_2d, free_2d):
    u = gaussian_bump(grid_2d)
    assert uniform_bound_ratio(u, WaveField.zeros(grid_2d), free_2d) == 0.0


@pytest.mark.slow
class TestLimitingAbsorptionTrend:
    """
    rho stays within a factor 2 and the Cauchy gaps shrink over eps = 1e-1, 3e-2, 1e-2. The boxes keep lambda away
    from the Dirichlet spectrum so that the truncated problem has a limit as eps -> 0.
    """

    @pytest.mark.parametrize(
        "name, lam, half_width, points",
        [
            # box eigenvalues ~0.29 and ~0.73 around lambda = 0.5
            ("free", 0.5, 4.0, 65),
            # lowest box eigenvalue ~2.8 above max n = 2.05
            ("saito", 1.05, 1.25, 33),
        ],
    )
    def test_uniform_bound_and_cauchy_gaps(self, name, lam, half_width, points):
        scenario = scenario_from_preset(name, lam=lam, dimension=2, half_width=half_width, points_per_axis=points)
        grid = build_grid(2, half_width, points)
        report = epsilon_sweep(grid, scenario, epsilons=[1e-1, 3e-2, 1e-2], preconditioner="ilu", tol=1e-10)
        assert all(rho > 0 for rho in report.rhos)
        assert report.rho_spread <= 2.0
        assert len(report.cauchy_gaps) == 2
        assert report.cauchy_gaps[1] < report.cauchy_gaps[0]
