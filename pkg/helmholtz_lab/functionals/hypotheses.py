"""
Sampled estimates of the structural hypotheses on a scenario.

- beta:             2 sum_j sup_{2^(j-1) < |x| <= 2^j} ((x . grad n)_- + 4^j |B_tau|^2) / n, hypothesis beta < 1
- gamma_est:        sup_{|x| >= 1} |x| |n - n_inf| / n_inf
- gamma_relaxed:    sup_{|x| > r0} |x|^delta |n - n_inf| / n, the relaxed decay of n - n_inf
- beta_tilde:       sup_{|x| > r0} (|x|^2 grad_perp(n - n_inf) . grad n_inf)_- / |grad_omega n_inf|^2; zero when
                    n - n_inf is radial, where gamma_relaxed alone suffices
- cstar_est:        sup_{|x| >= r0} |x|^|alpha| |d^alpha p_tilde| for |alpha| <= 2
- mu_decay:         c = sup |x|^(1 + mu) (max |B_jk| + |Q|), plus the decay exponent fitted over dyadic shells
- p1_decay:         sup |x|^(1 + mu) |d_r p_tilde|
- gauge_divergence: sup |x|^2 |div b|
- n_min:            min n over the grid
"""

import itertools
import logging
from typing import Callable, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.errors import HypothesisViolationError, PreconditionError
from helmholtz_lab.functionals.concentration import angular_gradient_sq, check_angular
from helmholtz_lab.functionals.reports import FunctionalName, FunctionalReport, Verdict
from helmholtz_lab.grid.grid import Grid, build_grid
from helmholtz_lab.model.expressions import FieldExpr, differentiate_field, field_gradient, second_derivative_field
from helmholtz_lab.model.magnetic import magnetic_field
from helmholtz_lab.model.scenario import Scenario
from helmholtz_lab.utils.parallel_utils import parallel_map

logger = logging.getLogger(__name__)

RADIAL_STEP = 1e-5
# Fitted decay exponents may fall short of mu by this much and still count as satisfied.
MU_TOLERANCE = 0.1
# Directions where |grad_omega n_inf|^2 falls below this fraction of its maximum are left out of beta_tilde.
ANGULAR_FLOOR = 1e-6


def oversampled_grid(grid: Grid, factor: int) -> Grid:
    """Same box with (N - 1) factor + 1 points per axis."""
    if factor < 1:
        raise ValueError(f"Invalid oversampling factor: {factor}")
    if factor == 1:
        return grid
    return build_grid(grid.dimension, grid.half_width, (grid.points_per_axis - 1) * factor + 1)


def radial_derivative(field: FieldExpr, points: NDArray[np.float64], step: float = RADIAL_STEP) -> NDArray[np.float64]:
    """x . grad f = d/dt f(t x) at t = 1, by central differences in t."""
    return (field(points * (1.0 + step)) - field(points * (1.0 - step))) / (2.0 * step)


def beta_profile(scenario: Scenario, grid: Grid, oversample: int = 1) -> Dict[int, float]:
    """
    Per-annulus suprema of ((x . grad n)_- + 4^j |B_tau|^2) / n over the nodes of C(j) = {2^(j-1) < |x| <= 2^j}.

    Raises:
        HypothesisViolationError: n <= 0 at a sampled node
    """
    grid = oversampled_grid(grid, oversample)
    points = grid.points
    radius = grid.radii

    index = scenario.refraction(points)
    if np.any(index <= 0):
        worst = int(np.argmin(index))
        raise HypothesisViolationError(f"n must be positive, got n={index[worst]:.6g} at x={points[worst]}")

    shells = np.ceil(np.log2(radius)).astype(int)
    numerator = np.maximum(-radial_derivative(scenario.index_field, points), 0.0)
    if scenario.has_magnetic_potential:
        b_tau_sq = magnetic_field(scenario, points).b_tau_norm ** 2
        numerator = numerator + 4.0**shells * b_tau_sq
    ratio = numerator / index

    profile: Dict[int, float] = {}
    for j in np.unique(shells):
        profile[int(j)] = float(np.max(ratio[shells == j]))
    return profile


def beta_indicator(scenario: Scenario, grid: Grid, oversample: int = 1) -> float:
    """
    beta = 2 sum_j sup_{C(j)} ((x . grad n)_- + 4^j |B_tau|^2) / n over the annuli that meet the grid. Suprema are
    taken over nodes, so on singular scenarios the value is a lower bound.
    """
    return 2.0 * float(sum(beta_profile(scenario, grid, oversample).values()))


def _verdict_at_most(value: float, bound: Optional[float]) -> Verdict:
    if bound is None:
        return Verdict.SATISFIED if value == 0.0 else Verdict.REPORTED
    return Verdict.SATISFIED if value <= bound else Verdict.VIOLATED


def _n_min_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    value = float(np.min(scenario.refraction(grid.points)))
    return FunctionalReport(FunctionalName.N_MIN, value, Verdict.SATISFIED if value > 0 else Verdict.VIOLATED)


def _beta_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    try:
        profile = beta_profile(scenario, grid)
    except HypothesisViolationError as err:
        return FunctionalReport(FunctionalName.BETA, float("nan"), Verdict.VIOLATED, details={"error": str(err)})
    value = 2.0 * sum(profile.values())
    if value > 0:
        logger.warning("beta is sampled on the grid nodes and is a lower bound on singular scenarios")
    return FunctionalReport(
        FunctionalName.BETA,
        value,
        Verdict.SATISFIED if value < 1 else Verdict.VIOLATED,
        details={"profile": profile},
    )


def _gamma_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    if scenario.n_inf is None:
        return FunctionalReport(FunctionalName.GAMMA_EST, float("nan"), Verdict.UNKNOWN)
    mask = grid.radii >= 1.0
    points = grid.points[mask]
    n_inf = scenario.n_inf(points / grid.radii[mask][:, None])
    if np.any(n_inf <= 0):
        details = {"error": "n_inf <= 0"}
        return FunctionalReport(FunctionalName.GAMMA_EST, float("nan"), Verdict.VIOLATED, details=details)
    gap = grid.radii[mask] * np.abs(scenario.refraction(points) - n_inf) / n_inf
    value = float(np.max(gap)) if gap.size else 0.0
    return FunctionalReport(FunctionalName.GAMMA_EST, value, _verdict_at_most(value, scenario.gamma_bound))


def _outer_points(scenario: Scenario, grid: Grid) -> NDArray[np.float64]:
    return grid.points[grid.radii > scenario.r0]


def _gamma_relaxed_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    parameters = {"delta": scenario.delta, "R0": scenario.r0}
    points = _outer_points(scenario, grid)
    if scenario.n_inf is None or not points.size:
        return FunctionalReport(FunctionalName.GAMMA_RELAXED, float("nan"), Verdict.UNKNOWN, parameters)
    radius = np.linalg.norm(points, axis=-1)
    index = scenario.refraction(points)
    if np.any(index <= 0):
        details = {"error": "n <= 0"}
        return FunctionalReport(FunctionalName.GAMMA_RELAXED, float("nan"), Verdict.VIOLATED, parameters, details)
    gap = np.abs(index - scenario.n_inf(points / radius[:, None]))
    value = float(np.max(radius**scenario.delta * gap / index))
    return FunctionalReport(FunctionalName.GAMMA_RELAXED, value, Verdict.REPORTED, parameters)


def _beta_tilde_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    """
    Tangential coupling of n - n_inf with n_inf, measured with the n-weighted slack set to zero: below 1 the relaxed
    condition holds, otherwise it needs a positive slack and the verdict stays unknown.
    """
    points = _outer_points(scenario, grid)
    if scenario.n_inf is None or not points.size:
        return FunctionalReport(FunctionalName.BETA_TILDE, float("nan"), Verdict.UNKNOWN)
    try:
        check_angular(scenario.n_inf)
    except PreconditionError as err:
        return FunctionalReport(FunctionalName.BETA_TILDE, float("nan"), Verdict.UNKNOWN, details={"error": str(err)})

    d = scenario.dimension
    remainder = FieldExpr(f"({scenario.index_field.source_text}) - ({scenario.n_inf.source_text})", d)
    radius_sq = np.sum(points**2, axis=-1)
    gradient = field_gradient(remainder, points)
    tangential = gradient - (np.sum(gradient * points, axis=-1) / radius_sq)[:, None] * points
    pairing = radius_sq * np.sum(tangential * field_gradient(scenario.n_inf, points), axis=-1)
    angular_sq = angular_gradient_sq(scenario.n_inf, points)
    details = {"tangential_remainder": float(np.max(np.sqrt(radius_sq * np.sum(tangential**2, axis=-1))))}

    peak = float(np.max(angular_sq))
    if peak == 0.0:
        return FunctionalReport(FunctionalName.BETA_TILDE, 0.0, Verdict.SATISFIED, details=details)
    usable = angular_sq > ANGULAR_FLOOR * peak
    value = float(np.max(np.maximum(-pairing[usable], 0.0) / angular_sq[usable]))
    verdict = Verdict.SATISFIED if value < 1 else Verdict.UNKNOWN
    return FunctionalReport(FunctionalName.BETA_TILDE, value, verdict, details=details)


def _cstar_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    field = scenario.long_range_field
    mask = grid.radii >= scenario.r0
    points = grid.points[mask]
    radius = grid.radii[mask]
    if field.is_constant:
        orders = {"order_0": abs(float(field.expression)), "order_1": 0.0, "order_2": 0.0}
    else:
        d = scenario.dimension
        first = max(float(np.max(radius * np.abs(differentiate_field(field, points, k)))) for k in range(d))
        second = max(
            float(np.max(radius**2 * np.abs(second_derivative_field(field, points, i, j))))
            for i, j in itertools.combinations_with_replacement(range(d), 2)
        )
        orders = {"order_0": float(np.max(np.abs(field(points)))), "order_1": first, "order_2": second}
    value = max(orders.values())
    return FunctionalReport(FunctionalName.CSTAR_EST, value, _verdict_at_most(value, scenario.c_star), details=orders)


def _short_range_magnitude(scenario: Scenario, points: NDArray[np.float64]) -> NDArray[np.float64]:
    magnitude = np.abs(scenario.potential(points))
    if scenario.has_magnetic_potential:
        magnitude = magnitude + np.max(np.abs(magnetic_field(scenario, points).b_matrix), axis=(-2, -1))
    return magnitude


def fit_decay_exponent(radius: NDArray[np.float64], magnitude: NDArray[np.float64]) -> Optional[float]:
    """
    Exponent p of magnitude ~ |x|^(-p), fitted by least squares on the per-shell suprema of the dyadic shells
    2^j <= |x| < 2^(j+1), j >= 0. None when fewer than two shells carry a nonzero supremum.
    """
    mask = radius >= 1.0
    shells = np.floor(np.log2(radius[mask])).astype(int)
    centers, suprema = [], []
    for j in np.unique(shells):
        peak = float(np.max(magnitude[mask][shells == j]))
        if peak > 0:
            centers.append(1.5 * 2.0**j)
            suprema.append(peak)
    if len(centers) < 2:
        return None
    slope, _ = np.polyfit(np.log(centers), np.log(suprema), 1)
    return float(-slope)


def _mu_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    mask = grid.radii >= 1.0
    points = grid.points[mask]
    radius = grid.radii[mask]
    magnitude = _short_range_magnitude(scenario, points)
    constant = float(np.max(radius ** (1.0 + scenario.mu) * magnitude)) if magnitude.size else 0.0
    if constant == 0.0:
        return FunctionalReport(FunctionalName.MU_DECAY, 0.0, Verdict.SATISFIED, details={"fitted_mu": None})

    exponent = fit_decay_exponent(radius, magnitude)
    if exponent is None:
        return FunctionalReport(FunctionalName.MU_DECAY, constant, Verdict.UNKNOWN, details={"fitted_mu": None})
    fitted_mu = exponent - 1.0
    verdict = Verdict.SATISFIED if fitted_mu >= scenario.mu - MU_TOLERANCE else Verdict.VIOLATED
    return FunctionalReport(FunctionalName.MU_DECAY, constant, verdict, details={"fitted_mu": fitted_mu})


def _p1_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    mask = grid.radii >= scenario.r0
    points = grid.points[mask]
    radius = grid.radii[mask]
    if not points.size:
        return FunctionalReport(FunctionalName.P1_DECAY, float("nan"), Verdict.UNKNOWN)
    # d_r p_tilde = (x . grad p_tilde) / |x|
    derivative = radial_derivative(scenario.long_range_field, points) / radius
    value = float(np.max(radius ** (1.0 + scenario.mu) * np.abs(derivative)))
    return FunctionalReport(FunctionalName.P1_DECAY, value, Verdict.REPORTED)


def _gauge_entry(scenario: Scenario, grid: Grid) -> FunctionalReport:
    if not scenario.has_magnetic_potential:
        return FunctionalReport(FunctionalName.GAUGE_DIVERGENCE, 0.0, Verdict.REPORTED)
    points = grid.points
    divergence = sum(differentiate_field(component, points, k) for k, component in enumerate(scenario.b))
    value = float(np.max(grid.radii**2 * np.abs(divergence)))
    return FunctionalReport(FunctionalName.GAUGE_DIVERGENCE, value, Verdict.REPORTED)


HYPOTHESIS_ENTRIES: List[Callable[[Scenario, Grid], FunctionalReport]] = [
    _n_min_entry,
    _beta_entry,
    _gamma_entry,
    _gamma_relaxed_entry,
    _beta_tilde_entry,
    _cstar_entry,
    _mu_entry,
    _p1_entry,
    _gauge_entry,
]


def hypothesis_report(scenario: Scenario, grid: Grid, num_workers: Optional[int] = None) -> List[FunctionalReport]:
    """
    Estimate every hypothesis constant on the grid nodes.

    Verdicts: beta against 1, n_min against 0, gamma_est and cstar_est against `scenario.gamma_bound` and
    `scenario.c_star` when given, the fitted decay exponent against `scenario.mu`, beta_tilde below 1 (unknown
    otherwise). Other entries are reported only.
    """
    reports = parallel_map(lambda entry: entry(scenario, grid), HYPOTHESIS_ENTRIES, num_workers)
    parameters = {"lambda": scenario.lam, "N": grid.points_per_axis, "L": grid.half_width}
    for report in reports:
        report.parameters.update(parameters)
    violated = [report.name.value for report in reports if report.verdict is Verdict.VIOLATED]
    if violated:
        logger.warning(f"Hypotheses violated: {', '.join(violated)}")
    return reports


def any_violated(reports: List[FunctionalReport]) -> bool:
    return any(report.verdict is Verdict.VIOLATED for report in reports)
