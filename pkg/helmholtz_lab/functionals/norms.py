"""
Morrey-Campanato norm and its dyadic dual.

    |||f|||_{R0}^2 = sup_{R > R0} R^{-1} int_{|x| <= R} |f|^2
    N_{R0}(f)     = sum_{j >= J} (2^{j+1} int_{C(j), |x| > R0} |f|^2)^{1/2} + (R0 int_{|x| <= R0} |f|^2)^{1/2}

with C(j) = {2^j <= |x| < 2^{j+1}} and 2^J <= R0 < 2^{J+1}. Integrals are midpoint sums over grid nodes.
"""

import math
from typing import Dict, Optional, Union

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.grid.grid import GradientField, Grid, WaveField
from helmholtz_lab.model.scenario import Scenario

FieldLike = Union[WaveField, GradientField, NDArray]


def field_density(field: FieldLike, grid: Optional[Grid] = None):
    """
    Return (|f|^2 per node, grid) for a wave field, a gradient field (summed over components) or a raw node array
    of shape (num_nodes,) or (num_nodes, k).
    """
    if isinstance(field, (WaveField, GradientField)):
        return field.density, field.grid
    if grid is None:
        raise ValueError("A grid is required for raw node arrays")
    values = np.asarray(field)
    if values.shape[0] != grid.num_nodes:
        raise ValueError(f"Expected {grid.num_nodes} node values, got {values.shape[0]}")
    density = np.abs(values) ** 2
    if density.ndim == 2:
        density = density.sum(axis=-1)
    return density, grid


def mc_norm(field: FieldLike, R0: float = 0.0, grid: Optional[Grid] = None) -> float:  # noqa: N803
    """
    Morrey-Campanato norm |||f|||_{R0}.

    The supremum runs over every node radius above R0, and over R -> R0+ when R0 > 0. Between node radii the mass
    is constant and R^{-1} decreases, so this is the exact supremum of the discrete mass function.
    """
    if R0 < 0:
        raise ValueError(f"R0 must be nonnegative, got {R0}")
    density, grid = field_density(field, grid)

    order = np.argsort(grid.radii, kind="stable")
    radii = grid.radii[order]
    mass = np.cumsum(density[order]) * grid.cell_volume

    # Mass M(r_k) must include every node at the same radius.
    last_of_radius = np.r_[radii[1:] != radii[:-1], True]
    radii, mass = radii[last_of_radius], mass[last_of_radius]

    candidates = []
    above = radii > R0
    if np.any(above):
        candidates.append(np.max(mass[above] / radii[above]))
    if R0 > 0:
        inside = np.searchsorted(radii, R0, side="right")
        candidates.append((mass[inside - 1] if inside > 0 else 0.0) / R0)
    if not candidates:
        return 0.0
    return math.sqrt(max(0.0, float(max(candidates))))


def _shell_masses(density: NDArray, grid: Grid, R0: float) -> Dict[int, float]:  # noqa: N803
    region = grid.radii > R0
    if not np.any(region):
        return {}
    shells = np.floor(np.log2(grid.radii[region])).astype(int)
    masses: Dict[int, float] = {}
    for j in np.unique(shells):
        masses[int(j)] = float(np.sum(density[region][shells == j]) * grid.cell_volume)
    return masses


def dyadic_shell_masses(
    field: FieldLike,
    R0: float = 0.0,  # noqa: N803
    grid: Optional[Grid] = None,
) -> Dict[int, float]:
    """
    Mass h^d sum |f|^2 per dyadic shell C(j) = {2^j <= |x| < 2^{j+1}}, restricted to |x| > R0. Only shells that
    contain nodes appear.
    """
    density, grid = field_density(field, grid)
    return _shell_masses(density, grid, R0)


def dual_norm_terms(field: FieldLike, R0: float = 0.0, grid: Optional[Grid] = None) -> Dict[str, float]:  # noqa: N803
    """Per-term breakdown of N_{R0}: keys "ball" and "shell_<j>"."""
    if R0 < 0:
        raise ValueError(f"R0 must be nonnegative, got {R0}")
    density, grid = field_density(field, grid)

    terms: Dict[str, float] = {}
    if R0 > 0:
        ball_mass = grid.integrate(density, grid.radii <= R0)
        terms["ball"] = math.sqrt(R0 * ball_mass)
    for j, shell_mass in sorted(_shell_masses(density, grid, R0).items()):
        terms[f"shell_{j}"] = math.sqrt(2.0 ** (j + 1) * shell_mass)
    return terms


def dual_norm(field: FieldLike, R0: float = 0.0, grid: Optional[Grid] = None) -> float:  # noqa: N803
    """
    Dual norm N_{R0}(f). For R0 = 0 the dyadic sum runs over every shell that meets the grid; for R0 > 0 the first
    shell is the one containing R0, clipped to |x| > R0, so that the shells and the ball partition the nodes.
    """
    return float(sum(dual_norm_terms(field, R0, grid).values()))


def default_norm_offset(scenario: Scenario, grid: Grid) -> float:
    """
    Norm offset R0. In two dimensions R0 = n0^{-1/2}, n0 the grid minimum of n over |x| >= 1; otherwise the
    scenario's `big_r0`.
    """
    if scenario.dimension != 2:
        return scenario.big_r0
    mask = grid.radii >= 1.0
    n0 = float(np.min(scenario.refraction(grid.points[mask])))
    if n0 <= 0:
        return scenario.big_r0
    return max(scenario.big_r0, 1.0 / math.sqrt(n0))
