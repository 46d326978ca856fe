import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.errors import PreconditionError, RangeError
from helmholtz_lab.functionals.norms import default_norm_offset, dual_norm, mc_norm
from helmholtz_lab.grid.grid import WaveField
from helmholtz_lab.grid.operators import magnetic_gradient, radial_tangential_split
from helmholtz_lab.model.expressions import FieldExpr, as_field, field_gradient
from helmholtz_lab.model.scenario import Scenario

logger = logging.getLogger(__name__)

ANGULAR_TOLERANCE = 1e-10


def check_angular(n_inf: FieldExpr, samples: int = 32) -> None:
    """
    Raise PreconditionError unless n_inf depends on x/|x| only. Expressions over w alone pass; others are compared
    at x, 2x and 3x on random directions.
    """
    if n_inf.is_angular:
        return
    rng = np.random.default_rng(0)
    points = rng.normal(size=(samples, n_inf.dimension))
    points *= rng.uniform(1.0, 4.0, size=(samples, 1)) / np.linalg.norm(points, axis=-1, keepdims=True)
    base = n_inf(points)
    for scale in (2.0, 3.0):
        gap = float(np.max(np.abs(n_inf(scale * points) - base)))
        if gap > ANGULAR_TOLERANCE:
            raise PreconditionError(f"n_inf must depend on x/|x| only, it changes by {gap:.3e} along rays")


def angular_gradient_sq(n_inf: FieldExpr, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """|grad_omega n_inf|^2 = |x|^2 |grad_perp n_inf|^2 at points (P, d)."""
    gradient = field_gradient(n_inf, points)
    radius_sq = np.sum(points**2, axis=-1)
    radial = np.sum(gradient * points, axis=-1) / radius_sq
    tangential = gradient - radial[:, None] * points
    return radius_sq * np.sum(tangential**2, axis=-1)


def concentration_functional(u: WaveField, n_inf: Union[str, FieldExpr], R: float = 1.0) -> float:  # noqa: N803
    """
    int_{|x| >= R} |grad_omega n_inf(x/|x|)|^2 |u|^2 / |x|.

    Raises:
        PreconditionError: n_inf depends on |x|, or R < 1
    """
    if R < 1:
        raise PreconditionError(f"R must be at least 1, got {R}")
    grid = u.grid
    n_inf = as_field(n_inf, grid.dimension)
    check_angular(n_inf)

    region = grid.shell_mask(R)
    if not np.any(region):
        return 0.0
    if n_inf.is_constant:
        return 0.0
    weight = angular_gradient_sq(n_inf, grid.points[region]) / grid.radii[region]
    return grid.integrate(weight * u.density[region])


def tangential_energy(u: WaveField, scenario: Scenario, R0: float = 0.0) -> float:  # noqa: N803
    """int_{|x| >= R0} |grad_b_perp u|^2 / |x| over the nodes whose stencil stays in the box."""
    gradient = magnetic_gradient(u.grid, scenario, u)
    _, tangential = radial_tangential_split(gradient)
    region = gradient.interior & (u.grid.radii >= R0)
    return u.grid.integrate(tangential.density[region] / u.grid.radii[region])


def apriori_bound_ratio(
    u: WaveField,
    source: WaveField,
    scenario: Scenario,
    R0: Optional[float] = None,  # noqa: N803
) -> float:
    """
    M^2 / N_{R0}(f / n^(1/2))^2 with

        M^2 = |||grad_b u|||_{R0}^2 + |||n^(1/2) u|||_{R0}^2 + int_{|x| >= R0} |grad_b_perp u|^2 / |x|.

    R0 defaults to `default_norm_offset`, i.e. n0^(-1/2) in two dimensions. Zero when f vanishes.

    Raises:
        PreconditionError: n <= 0 at a node
    """
    grid = u.grid
    index = scenario.refraction(grid.points)
    if np.any(index <= 0):
        raise PreconditionError("the a-priori bound needs n > 0")
    offset = default_norm_offset(scenario, grid) if R0 is None else R0
    denominator = dual_norm(WaveField(source.values / np.sqrt(index), grid), offset) ** 2
    if denominator == 0.0:
        return 0.0
    gradient = magnetic_gradient(grid, scenario, u)
    energy = mc_norm(gradient, offset) ** 2 + mc_norm(WaveField(np.sqrt(index) * u.values, grid), offset) ** 2
    energy += tangential_energy(u, scenario, offset)
    logger.debug(f"a-priori bound: M^2 = {energy:.4g}, N^2 = {denominator:.4g}, R0 = {offset:.4g}")
    return float(energy / denominator)


def concentration_ratio(
    u: WaveField,
    source: WaveField,
    scenario: Scenario,
    R: float = 1.0,  # noqa: N803
    R0: Optional[float] = None,  # noqa: N803
) -> float:
    """concentration_functional(u) / N(f / n^(1/2))^2, with `default_norm_offset` as R0 unless given."""
    if scenario.n_inf is None:
        raise PreconditionError("the concentration ratio needs n_inf")
    grid = u.grid
    index = scenario.refraction(grid.points)
    if np.any(index <= 0):
        raise PreconditionError("the concentration ratio needs n > 0")
    scaled = WaveField(source.values / np.sqrt(index), grid)
    denominator = dual_norm(scaled, default_norm_offset(scenario, grid) if R0 is None else R0) ** 2
    if denominator == 0.0:
        return 0.0
    return concentration_functional(u, scenario.n_inf, R) / denominator


@dataclass
class AngularProfile:
    """
    |u|^2 mass per direction bin in a shell, normalized to total mass 1.

    Bins are over the angle atan2(x2, x1) in [-pi, pi) for d = 2 and over w1 in [-1, 1] (equal-area bands) for d = 3.
    """

    dimension: int
    edges: NDArray[np.float64]
    mass: NDArray[np.float64]
    directions: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def centers(self) -> NDArray[np.float64]:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def uniformity(self) -> float:
        """max / min bin mass."""
        lowest = float(np.min(self.mass))
        return float(np.max(self.mass)) / lowest if lowest > 0 else float("inf")

    def cone_fraction(
        self,
        axis: Optional[NDArray] = None,
        half_angle: float = math.radians(20.0),
        both: bool = True,
    ) -> float:
        """Share of the shell mass within `half_angle` (radians) of `axis` (default e1), or of +-axis if `both`."""
        axis = np.eye(self.dimension)[0] if axis is None else np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        cosine = self.directions @ axis
        if both:
            cosine = np.abs(cosine)
        inside = cosine >= math.cos(half_angle) - 1e-12
        return float(np.sum(self.weights[inside]) / np.sum(self.weights))


def angular_profile(u: WaveField, shell: Tuple[float, float], bins: int = 36) -> AngularProfile:
    """
    Histogram of |u|^2 over directions of the nodes with r_lo <= |x| <= r_hi.

    Raises:
        RangeError: the shell contains no node, or no mass
    """
    r_lo, r_hi = shell
    if bins < 1:
        raise ValueError(f"bins must be positive, got {bins}")
    grid = u.grid
    mask = grid.shell_mask(r_lo, r_hi)
    if not np.any(mask):
        raise RangeError(f"the shell [{r_lo}, {r_hi}] contains no grid node")
    directions = grid.directions[mask]
    weights = u.density[mask]
    total = float(np.sum(weights))
    if total == 0.0:
        raise RangeError(f"u vanishes on the shell [{r_lo}, {r_hi}]")

    if grid.dimension == 2:
        coordinate = np.arctan2(directions[:, 1], directions[:, 0])
        edges = np.linspace(-np.pi, np.pi, bins + 1)
    else:
        coordinate = directions[:, 0]
        edges = np.linspace(-1.0, 1.0, bins + 1)
    mass, _ = np.histogram(coordinate, bins=edges, weights=weights)
    return AngularProfile(grid.dimension, edges, mass / total, directions, weights)
