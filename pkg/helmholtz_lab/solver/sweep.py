import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from helmholtz_lab.errors import (
    ConvergenceError,
    FieldDomainError,
    FieldEvaluationError,
    HelmholtzLabError,
    PreconditionError,
    SweepAbortedError,
)
from helmholtz_lab.functionals.norms import dual_norm, mc_norm
from helmholtz_lab.functionals.reports import FunctionalName, FunctionalReport, Verdict
from helmholtz_lab.grid.grid import Grid, WaveField
from helmholtz_lab.grid.operators import magnetic_gradient
from helmholtz_lab.model.scenario import Scenario
from helmholtz_lab.solver.krylov import SolveStats, solve_fixed_epsilon
from helmholtz_lab.utils.parallel_utils import parallel_map

logger = logging.getLogger(__name__)

# Local norms of the sweep are taken with R0 = 1.
LOCAL_NORM_OFFSET = 1.0
# Below this value of eps * L / (2 sqrt(lambda)) the box boundary reflects visibly.
WEAK_DAMPING_THRESHOLD = 3.0


@dataclass
class SweepStep:
    epsilon: float
    stats: SolveStats
    report: FunctionalReport
    solution: Optional[WaveField] = None

    @property
    def rho(self) -> float:
        return self.report.value


@dataclass
class SweepReport:
    """
    Result of a limiting absorption sweep.

    `cauchy_gaps[k]` is |||u_{eps_k} - u_{eps_{k+1}}|||_1, so there is one gap less than steps.
    """

    steps: List[SweepStep] = field(default_factory=list)
    cauchy_gaps: List[float] = field(default_factory=list)

    @property
    def epsilons(self) -> List[float]:
        return [step.epsilon for step in self.steps]

    @property
    def rhos(self) -> List[float]:
        return [step.rho for step in self.steps]

    @property
    def rho_spread(self) -> float:
        """max rho / min rho over the steps (1 when every rho vanishes)."""
        rhos = np.asarray(self.rhos)
        if rhos.size == 0 or np.all(rhos == 0):
            return 1.0
        if np.min(rhos) == 0:
            return float("inf")
        return float(np.max(rhos) / np.min(rhos))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for k, step in enumerate(self.steps):
            rows.append(
                {
                    "epsilon": step.epsilon,
                    "iterations": step.stats.iterations,
                    "residual": step.stats.final_relative_residual,
                    "rho": step.rho,
                    "cauchy_gap": self.cauchy_gaps[k - 1] if k > 0 else np.nan,
                }
            )
        return pd.DataFrame(rows, columns=["epsilon", "iterations", "residual", "rho", "cauchy_gap"])


def uniform_bound_ratio(
    u: WaveField,
    source: WaveField,
    scenario: Scenario,
    R0: float = LOCAL_NORM_OFFSET,  # noqa: N803
) -> float:
    """
    rho = (lambda |||u|||^2 + |||grad_b u|||^2) / N(f)^2, all norms with offset R0. Zero when f vanishes.
    """
    denominator = dual_norm(source, R0) ** 2
    if denominator == 0.0:
        return 0.0
    gradient = magnetic_gradient(u.grid, scenario, u)
    numerator = scenario.lam * mc_norm(u, R0) ** 2 + mc_norm(gradient, R0) ** 2
    return float(numerator / denominator)


def sweep_schedule(eps_start: float, factor: float, count: int) -> List[float]:
    """eps_k = eps_start * factor^k for k < count."""
    if count < 2:
        raise PreconditionError(f"an epsilon sweep needs at least 2 steps, got {count}")
    if not 0 < factor < 1:
        raise PreconditionError(f"eps factor must lie in (0, 1), got {factor}")
    if not eps_start > 0:
        raise PreconditionError(f"eps_start must be positive, got {eps_start}")
    return [eps_start * factor**k for k in range(count)]


# Failures of one fixed-eps step that end the sweep with a partial report.
STEP_FAILURES = (ConvergenceError, FieldEvaluationError, FieldDomainError)

StepOutcome = Tuple[Optional[Tuple[WaveField, SolveStats]], Optional[HelmholtzLabError]]


def epsilon_sweep(
    grid: Grid,
    scenario: Scenario,
    eps_start: float = 0.1,
    factor: float = 0.5,
    count: int = 5,
    epsilons: Optional[Sequence[float]] = None,
    warm_start: bool = True,
    tol: float = 1e-8,
    max_iter: int = 20000,
    method: str = "gmres",
    preconditioner: str = "diagonal",
    restart: int = 50,
    keep_solutions: bool = False,
    show_progress: bool = False,
    num_workers: Optional[int] = None,
) -> SweepReport:
    """
    Solve at decreasing eps and measure the uniform bound and the Cauchy gaps between consecutive solutions.

    Args:
        grid: box grid
        scenario: problem description, its `epsilon` is ignored
        eps_start, factor, count: geometric schedule eps_k = eps_start * factor^k
        epsilons: explicit strictly decreasing schedule, overrides the geometric one
        warm_start: start each solve from the previous solution
        keep_solutions: store every u_eps in the report (otherwise only the last one)
        show_progress: tqdm progress bar
        num_workers: threads solving the steps concurrently; only used without `warm_start`

    Returns:
        The `SweepReport`.

    Raises:
        PreconditionError: invalid schedule
        SweepAbortedError: a fixed-eps step failed; `partial_report` holds the steps done before it
    """
    if epsilons is None:
        schedule = sweep_schedule(eps_start, factor, count)
    else:
        schedule = [float(eps) for eps in epsilons]
        if len(schedule) < 2:
            raise PreconditionError(f"an epsilon sweep needs at least 2 steps, got {len(schedule)}")
        if any(eps <= 0 for eps in schedule) or any(a <= b for a, b in zip(schedule, schedule[1:])):
            raise PreconditionError(f"epsilons must be positive and strictly decreasing, got {schedule}")

    damping = schedule[-1] * grid.half_width / (2.0 * np.sqrt(scenario.lam))
    if damping < WEAK_DAMPING_THRESHOLD:
        logger.warning(
            f"Weak damping at the smallest eps: eps*L/(2*sqrt(lambda)) = {damping:.2f} < {WEAK_DAMPING_THRESHOLD}, "
            "box reflections may pollute the solution"
        )

    source = WaveField(scenario.source(grid.points), grid)

    def solve_step(eps: float, x0: Optional[WaveField] = None) -> StepOutcome:
        try:
            solved = solve_fixed_epsilon(
                grid,
                scenario,
                tol=tol,
                max_iter=max_iter,
                epsilon=eps,
                source=source,
                x0=x0,
                method=method,
                preconditioner=preconditioner,
                restart=restart,
            )
        except STEP_FAILURES as err:
            return None, err
        return solved, None

    if warm_start:
        outcomes = _warm_outcomes(schedule, solve_step)
    else:
        outcomes = iter(parallel_map(solve_step, schedule, num_workers))

    report = SweepReport()
    previous: Optional[WaveField] = None
    progress = tqdm(zip(schedule, outcomes), total=len(schedule), desc="eps sweep", disable=not show_progress)
    for eps, (solved, error) in progress:
        if error is not None:
            raise SweepAbortedError(
                f"epsilon sweep aborted at eps={eps:.3e} after {len(report.steps)} steps: {error}", report, error
            ) from error
        u, stats = solved
        try:
            rho = uniform_bound_ratio(u, source, scenario)
        except STEP_FAILURES as err:
            raise SweepAbortedError(
                f"epsilon sweep aborted at eps={eps:.3e} after {len(report.steps)} steps: {err}", report, err
            ) from err
        step_report = FunctionalReport(
            name=FunctionalName.LAP_RATIO,
            value=rho,
            verdict=Verdict.REPORTED,
            parameters={
                "R0": LOCAL_NORM_OFFSET,
                "lambda": scenario.lam,
                "epsilon": eps,
                "N": grid.points_per_axis,
                "L": grid.half_width,
            },
        )
        if previous is not None:
            report.cauchy_gaps.append(mc_norm(WaveField(u.values - previous.values, grid), LOCAL_NORM_OFFSET))
            if not keep_solutions:
                report.steps[-1].solution = None
        report.steps.append(SweepStep(epsilon=eps, stats=stats, report=step_report, solution=u))
        logger.info(f"eps={eps:.3e}: rho={rho:.4g}, {stats.iterations} iterations")
        previous = u

    return report


def _warm_outcomes(
    schedule: Sequence[float],
    solve_step: Callable[[float, Optional[WaveField]], StepOutcome],
) -> Iterator[StepOutcome]:
    """Solve the steps in order, each starting from the previous solution, and stop after a failure."""
    previous: Optional[WaveField] = None
    for eps in schedule:
        solved, error = solve_step(eps, previous)
        yield solved, error
        if error is not None:
            return
        previous = solved[0]
