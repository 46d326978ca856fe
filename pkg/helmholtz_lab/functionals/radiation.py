"""
Sommerfeld radiation functionals

    eikonal:       int |grad_b u - i lambda^(1/2) grad K u|^2 (1 + |x|)^(delta - 1)
    explicit_n:    int |grad_b u - i n^(1/2)(x) x/|x| u|^2 / |x|
    explicit_ninf: int |grad_b u - i n_inf^(1/2)(x/|x|) x/|x| u|^2 / |x|

over the nodes with max(1, r0) <= region_min_radius <= |x| <= L - 2h. Next to the eikonal functional,
`weighted_radiation_terms` reports the absorption term eps int (1 + |x|)^delta |grad_b u - i lambda^(1/2) grad K u|^2
and the tangential term (1 - delta) int (|grad K|^2 |grad_b u|^2 - |grad K . grad_b u|^2) (1 + |x|)^(delta - 1).
"""

import logging
import math
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.eikonal.phases import Phase, RadialPhase
from helmholtz_lab.errors import PreconditionError
from helmholtz_lab.grid.grid import Grid, WaveField
from helmholtz_lab.grid.operators import magnetic_gradient
from helmholtz_lab.model.scenario import Scenario

logger = logging.getLogger(__name__)


class PhaseMode(str, Enum):
    EIKONAL = "eikonal"
    EXPLICIT_N = "explicit_n"
    EXPLICIT_NINF = "explicit_ninf"


def radiation_region(grid: Grid, region_min_radius: float) -> NDArray[np.bool_]:
    """Nodes with region_min_radius <= |x| <= L - 2h."""
    return grid.shell_mask(region_min_radius, grid.half_width - 2.0 * grid.spacing)


def _region_floor(scenario: Scenario, region_min_radius: Optional[float]) -> float:
    floor = max(1.0, scenario.r0)
    if region_min_radius is None:
        return floor
    if region_min_radius < floor:
        raise PreconditionError(f"region_min_radius must be at least max(1, r0) = {floor}, got {region_min_radius}")
    return region_min_radius


def _default_phase(scenario: Scenario) -> Phase:
    field = scenario.long_range_field
    if field.is_constant and float(field.expression) == 0.0:
        return RadialPhase(scenario.dimension)
    raise PreconditionError("the eikonal radiation functional needs a phase K for a long-range scenario")


def phase_vectors(
    scenario: Scenario,
    points: NDArray[np.float64],
    mode: PhaseMode,
    phase: Optional[Phase] = None,
) -> NDArray[np.float64]:
    """The real vector a(x) of the phase correction i a u, shape (P, d)."""
    mode = PhaseMode(mode)
    if mode is PhaseMode.EIKONAL:
        phase = _default_phase(scenario) if phase is None else phase
        return math.sqrt(scenario.lam) * phase.gradient(points)

    radius = np.linalg.norm(points, axis=-1, keepdims=True)
    directions = points / radius
    if mode is PhaseMode.EXPLICIT_N:
        index = scenario.refraction(points)
    else:
        if scenario.n_inf is None:
            raise PreconditionError("the explicit_ninf radiation functional needs n_inf")
        index = scenario.n_inf(directions)
    if np.any(index < 0):
        raise PreconditionError("the explicit radiation phases need a nonnegative index")
    return np.sqrt(index)[:, None] * directions


def radiation_functional(
    u: WaveField,
    scenario: Scenario,
    phase_mode: Union[str, PhaseMode] = PhaseMode.EIKONAL,
    delta: Optional[float] = None,
    region_min_radius: Optional[float] = None,
    phase: Optional[Phase] = None,
) -> float:
    """
    Evaluate one of the radiation functionals.

    Args:
        u: wave field
        scenario: supplies lambda, b, n and n_inf
        phase_mode: "eikonal", "explicit_n" or "explicit_ninf"
        delta: exponent of the eikonal weight, defaults to `scenario.delta`
        region_min_radius: inner radius of the region, at least max(1, r0); defaults to max(1, r0)
        phase: K for the eikonal mode (e.g. an `EikonalSolution` or a `SaitoPhase`); K = |x| for short range

    Raises:
        RangeError: the phase does not cover the region
        PreconditionError: missing phase or n_inf, or `region_min_radius` below max(1, r0)
    """
    mode = PhaseMode(phase_mode)
    region_min_radius = _region_floor(scenario, region_min_radius)
    grid = u.grid
    region = radiation_region(grid, region_min_radius)
    if not np.any(region):
        return 0.0

    points = grid.points[region]
    radius = grid.radii[region]
    gradient = magnetic_gradient(grid, scenario, u).components[region]
    corrected = gradient - 1j * phase_vectors(scenario, points, mode, phase) * u.values[region][:, None]

    if mode is PhaseMode.EIKONAL:
        delta = scenario.delta if delta is None else delta
        weight = (1.0 + radius) ** (delta - 1.0)
    else:
        weight = 1.0 / radius

    density = np.sum(np.abs(corrected) ** 2, axis=-1) * weight
    return float(np.sum(density) * grid.cell_volume)


def weighted_radiation_terms(
    u: WaveField,
    scenario: Scenario,
    delta: Optional[float] = None,
    region_min_radius: Optional[float] = None,
    phase: Optional[Phase] = None,
    epsilon: Optional[float] = None,
) -> Dict[str, float]:
    """
    The three terms controlled by the radiation estimate, with a = lambda^(1/2) grad K:

    - "sommerfeld": int |grad_b u - i a u|^2 (1 + |x|)^(delta - 1), the eikonal radiation functional
    - "absorption": eps int |grad_b u - i a u|^2 (1 + |x|)^delta
    - "tangential": (1 - delta) int (|grad K|^2 |grad_b u|^2 - |grad K . grad_b u|^2) (1 + |x|)^(delta - 1)

    plus their sum under "total". `epsilon` defaults to `scenario.epsilon`.
    """
    region_min_radius = _region_floor(scenario, region_min_radius)
    delta = scenario.delta if delta is None else delta
    epsilon = scenario.epsilon if epsilon is None else epsilon
    grid = u.grid
    region = radiation_region(grid, region_min_radius)
    if not np.any(region):
        return {"sommerfeld": 0.0, "absorption": 0.0, "tangential": 0.0, "total": 0.0}

    radius = grid.radii[region]
    values = u.values[region]
    gradient = magnetic_gradient(grid, scenario, u).components[region]
    vectors = phase_vectors(scenario, grid.points[region], PhaseMode.EIKONAL, phase)
    corrected_sq = np.sum(np.abs(gradient - 1j * vectors * values[:, None]) ** 2, axis=-1)

    # Lagrange identity with grad K = a / lambda^(1/2)
    grad_k_sq = np.sum(vectors**2, axis=-1) / scenario.lam
    aligned_sq = np.abs(np.sum(vectors * gradient, axis=-1)) ** 2 / scenario.lam
    transverse = np.maximum(grad_k_sq * np.sum(np.abs(gradient) ** 2, axis=-1) - aligned_sq, 0.0)

    weight = (1.0 + radius) ** (delta - 1.0)
    terms = {
        "sommerfeld": float(np.sum(corrected_sq * weight) * grid.cell_volume),
        "absorption": float(epsilon * np.sum(corrected_sq * (1.0 + radius) ** delta) * grid.cell_volume),
        "tangential": float((1.0 - delta) * np.sum(transverse * weight) * grid.cell_volume),
    }
    terms["total"] = sum(terms.values())
    return terms


def sommerfeld_terms(
    u: WaveField,
    scenario: Scenario,
    phase: Optional[Phase] = None,
    region_min_radius: float = 1.0,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Per-node |grad_b u - i a u|^2 with a = lambda^(1/2) grad K, computed directly and through the expansion

        |grad_b u|^2 + |a|^2 |u|^2 - 2 Im(a . grad_b u conj(u)).
    """
    grid = u.grid
    region = radiation_region(grid, region_min_radius)
    values = u.values[region]
    gradient = magnetic_gradient(grid, scenario, u).components[region]
    vectors = phase_vectors(scenario, grid.points[region], PhaseMode.EIKONAL, phase)

    direct = np.sum(np.abs(gradient - 1j * vectors * values[:, None]) ** 2, axis=-1)
    expanded = (
        np.sum(np.abs(gradient) ** 2, axis=-1)
        + np.sum(vectors**2, axis=-1) * np.abs(values) ** 2
        - 2.0 * np.imag(np.sum(vectors * gradient, axis=-1) * np.conj(values))
    )
    return direct, expanded


def explicit_phase_gap(phase: Phase, scenario: Scenario, points: NDArray[np.float64]) -> float:
    """
    Measured C of |lambda^(1/2) d_r K - n^(1/2)| <= C |lambda^(1/2) grad_perp K|^2 at the points. Points where the
    tangential part vanishes are skipped.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    directions = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    grad_k = math.sqrt(scenario.lam) * phase.gradient(pts)
    radial = np.sum(grad_k * directions, axis=-1)
    tangential_sq = np.sum((grad_k - radial[:, None] * directions) ** 2, axis=-1)
    gap = np.abs(radial - np.sqrt(scenario.refraction(pts)))

    usable = tangential_sq > 1e-14
    if not np.any(usable):
        return 0.0
    return float(np.max(gap[usable] / tangential_sq[usable]))
