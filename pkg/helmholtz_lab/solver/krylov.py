import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.sparse.linalg import bicgstab, gmres

from helmholtz_lab.errors import ConfigError, ConvergenceError, PreconditionError
from helmholtz_lab.grid.grid import Grid, WaveField
from helmholtz_lab.grid.operators import HelmholtzOperator
from helmholtz_lab.model.scenario import Scenario
from helmholtz_lab.solver.preconditioners import PRECONDITIONERS, build_preconditioner

logger = logging.getLogger(__name__)

METHODS = ("gmres", "bicgstab")
MIN_TOL = 1e-14
MAX_TOL = 1e-2
# Extra warm-started rounds when scipy stops on its preconditioned residual but the true one is still too large.
MAX_VERIFICATION_ROUNDS = 3


@dataclass
class SolverSettings:
    """
    Settings of the fixed-eps solve and of the eps sweep. Mirrors the `[solver]` section of a scenario document.
    """

    tol: float = 1e-8
    max_iter: int = 20000
    restart: int = 50
    method: str = "gmres"
    preconditioner: str = "diagonal"
    eps_start: float = 0.1
    eps_factor: float = 0.5
    eps_count: int = 5
    warm_start: bool = True

    def __post_init__(self):
        if not MIN_TOL < self.tol < MAX_TOL:
            raise ConfigError(f"tol must lie in ({MIN_TOL}, {MAX_TOL}), got {self.tol}")
        if self.max_iter < 1 or self.restart < 1:
            raise ConfigError("max_iter and restart must be positive")
        if self.method not in METHODS:
            raise ConfigError(f"Invalid method: {self.method}, expected one of {METHODS}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ConfigError(f"Invalid preconditioner: {self.preconditioner}, expected one of {PRECONDITIONERS}")
        if not self.eps_start > 0:
            raise ConfigError(f"eps_start must be positive, got {self.eps_start}")
        if not 0 < self.eps_factor < 1:
            raise ConfigError(f"eps_factor must lie in (0, 1), got {self.eps_factor}")
        if self.eps_count < 2:
            raise ConfigError(f"eps_count must be at least 2, got {self.eps_count}")


@dataclass
class SolveStats:
    """
    Outcome of one fixed-eps solve:
    - iterations: Krylov iterations (inner iterations for GMRES)
    - final_relative_residual: ||A u - f|| / ||f|| of the returned iterate
    - wall_time: seconds
    - residual_history: residual norms reported by the solver callback
    """

    iterations: int
    final_relative_residual: float
    wall_time: float
    epsilon: float
    method: str = "gmres"
    preconditioner: str = "diagonal"
    residual_history: List[float] = field(default_factory=list)


def _krylov_round(
    method: str,
    operator,
    rhs: NDArray[np.complex128],
    x0: NDArray[np.complex128],
    tol: float,
    max_iter: int,
    restart: int,
    preconditioner,
    history: List[float],
) -> Tuple[NDArray[np.complex128], int]:
    rhs_norm = float(np.linalg.norm(rhs))
    if method == "gmres":
        restart = min(restart, max_iter)
        # scipy counts GMRES `maxiter` in restart cycles.
        cycles = max(1, math.ceil(max_iter / restart))
        return gmres(
            operator,
            rhs,
            x0=x0,
            rtol=tol,
            atol=0.0,
            restart=restart,
            maxiter=cycles,
            M=preconditioner,
            callback=lambda residual: history.append(float(residual)),
            callback_type="pr_norm",
        )
    elif method == "bicgstab":
        return bicgstab(
            operator,
            rhs,
            x0=x0,
            rtol=tol,
            atol=0.0,
            maxiter=max_iter,
            M=preconditioner,
            callback=lambda xk: history.append(float(np.linalg.norm(rhs - operator @ xk)) / rhs_norm),
        )
    else:
        raise ValueError(f"Invalid method: {method}")


def solve_fixed_epsilon(
    grid: Grid,
    scenario: Scenario,
    tol: float = 1e-8,
    max_iter: int = 20000,
    epsilon: Optional[float] = None,
    source: Optional[WaveField] = None,
    x0: Optional[WaveField] = None,
    method: str = "gmres",
    preconditioner: str = "diagonal",
    restart: int = 50,
) -> Tuple[WaveField, SolveStats]:
    """
    Solve (grad + i b)^2 u + n u + Q u + i eps u = f on the grid with homogeneous Dirichlet truncation.

    Args:
        grid: box grid
        scenario: problem description; `scenario.source` is sampled unless `source` is given
        tol: relative residual target ||A u - f|| / ||f||, in (1e-14, 1e-2)
        max_iter: iteration budget (inner iterations for GMRES)
        epsilon: absorption, defaults to `scenario.epsilon`
        source: right-hand side f, overrides the scenario source
        x0: initial guess (warm start)
        method: "gmres" or "bicgstab"
        preconditioner: "diagonal", "shifted-laplacian", "ilu" or "none"
        restart: GMRES restart length

    Returns:
        The solution and its `SolveStats`.

    Raises:
        PreconditionError: eps <= 0 or tol outside of (1e-14, 1e-2)
        ConvergenceError: tolerance not reached within `max_iter`
    """
    eps = scenario.epsilon if epsilon is None else float(epsilon)
    if not eps > 0:
        raise PreconditionError(f"limiting absorption requires epsilon > 0, got {eps}")
    if not MIN_TOL < tol < MAX_TOL:
        raise PreconditionError(f"tol must lie in ({MIN_TOL}, {MAX_TOL}), got {tol}")
    if method not in METHODS:
        raise ValueError(f"Invalid method: {method}, expected one of {METHODS}")

    grid.check_resolution(scenario.lam)
    start = time.perf_counter()

    operator = HelmholtzOperator(grid, scenario, epsilon=eps)
    matrix = operator.to_sparse()
    rhs = source.values if source is not None else scenario.source(grid.points).astype(np.complex128)
    rhs_norm = float(np.linalg.norm(rhs))

    if rhs_norm == 0.0:
        stats = SolveStats(0, 0.0, time.perf_counter() - start, eps, method, preconditioner, [])
        return WaveField.zeros(grid), stats

    inverse = build_preconditioner(preconditioner, matrix, operator)
    guess = x0.values.copy() if x0 is not None else np.zeros(grid.num_nodes, dtype=np.complex128)

    history: List[float] = []
    solution = guess
    relative_residual = float(np.linalg.norm(rhs - matrix @ guess)) / rhs_norm
    for round_index in range(MAX_VERIFICATION_ROUNDS):
        remaining = max_iter - len(history)
        if remaining <= 0:
            break
        solution, info = _krylov_round(method, matrix, rhs, solution, tol, remaining, restart, inverse, history)
        if info < 0:
            raise ConvergenceError(f"{method} broke down (info={info})", solution, history)

        relative_residual = float(np.linalg.norm(rhs - matrix @ solution)) / rhs_norm
        if relative_residual <= tol:
            break
        logger.debug(
            f"Round {round_index}: true relative residual {relative_residual:.3e} above tol {tol:.1e}, restarting"
        )

    if relative_residual > tol:
        raise ConvergenceError(
            f"{method} did not converge within {max_iter} iterations "
            f"(relative residual {relative_residual:.3e} > tol {tol:.1e}, eps={eps})",
            solution,
            history,
        )

    stats = SolveStats(
        iterations=len(history),
        final_relative_residual=relative_residual,
        wall_time=time.perf_counter() - start,
        epsilon=eps,
        method=method,
        preconditioner=preconditioner,
        residual_history=history,
    )
    logger.info(
        f"Solved eps={eps:.3e} with {method}/{preconditioner}: {stats.iterations} iterations, "
        f"residual {relative_residual:.3e}, {stats.wall_time:.2f}s"
    )
    return WaveField(solution, grid), stats


def manufactured_source(
    grid: Grid,
    scenario: Scenario,
    u_star: WaveField,
    epsilon: Optional[float] = None,
) -> WaveField:
    """f := A u_star with the discrete operator, so that u_star is the exact discrete solution."""
    return HelmholtzOperator(grid, scenario, epsilon=epsilon)(u_star)
