"""
Radial marching of g = K/|x| for the eikonal equation |grad K|^2 = 1 + p_tilde.

With s = log(|x| / r0) the equation becomes an ODE for the angular field g(s, .):

    dg/ds = -g + (1 + p_tilde - |grad_omega g|^2)^(1/2),

whose "+" root keeps g = 1 stationary when p_tilde = 0. Shells are r0 rho^m, stepped with classical RK4 in s.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicSpline
from scipy.ndimage import map_coordinates, spline_filter1d

from helmholtz_lab.eikonal.angular import AngularGrid, double_sphere_extension
from helmholtz_lab.errors import EikonalBreakdownError, PreconditionError, RangeError, SteadyStateError
from helmholtz_lab.model.expressions import FieldExpr, as_field

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1e-6
STEADY_STATE_THRESHOLD = 1e-8
INIT_MODES = ("default", "one")
_CHUNK = 4096
_PAD = 3

InitProfile = Union[str, FieldExpr, NDArray]


@dataclass(frozen=True)
class EikonalSolution:
    """
    Marched g on geometric shells.

    Attributes:
        angular_grid: directions of the samples
        radii: r0 rho^m, m = 0..S-1
        g_samples: g per shell and direction, shape (S, *angular_grid.shape)
        dg_ds: right-hand side of the marching law at the samples
        p_tilde: p_tilde at the samples
    """

    angular_grid: AngularGrid
    radii: NDArray[np.float64]
    g_samples: NDArray[np.float64]
    dg_ds: NDArray[np.float64]
    p_tilde: NDArray[np.float64]

    @property
    def dimension(self) -> int:
        return self.angular_grid.dimension

    @property
    def r0(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def log_step(self) -> float:
        return math.log(self.radii[1] / self.radii[0])

    @property
    def log_radii(self) -> NDArray[np.float64]:
        return np.log(self.radii / self.radii[0])

    @property
    def c0(self) -> float:
        return float(np.min(self.g_samples))

    @property
    def c1(self) -> float:
        return float(np.max(self.g_samples))

    def _check_range(self, radius: NDArray) -> None:
        tolerance = 1e-12 * self.r_max
        if np.any(radius < self.r0 - tolerance) or np.any(radius > self.r_max + tolerance):
            raise RangeError(
                f"points with |x| in [{np.min(radius):.6g}, {np.max(radius):.6g}] leave the marched range "
                f"[{self.r0:.6g}, {self.r_max:.6g}]"
            )

    @cached_property
    def _fourier_splines(self) -> Tuple[CubicSpline, CubicSpline]:
        s = self.log_radii
        return (
            CubicSpline(s, np.fft.fft(self.g_samples, axis=-1), axis=0),
            CubicSpline(s, np.fft.fft(self.dg_ds, axis=-1), axis=0),
        )

    @cached_property
    def _sphere_coefficients(self) -> List[NDArray[np.float64]]:
        """Cubic B-spline coefficients of g, dg/ds and the Cartesian components of grad_omega g."""
        tangential = self.angular_grid.tangential_gradient(self.g_samples)
        quantities = [self.g_samples, self.dg_ds] + [tangential[..., k] for k in range(3)]
        coefficients = []
        for quantity in quantities:
            extended = double_sphere_extension(quantity)
            filtered = spline_filter1d(extended, order=3, axis=0, mode="mirror")
            filtered = spline_filter1d(filtered, order=3, axis=1, mode="grid-wrap")
            filtered = spline_filter1d(filtered, order=3, axis=2, mode="grid-wrap")
            coefficients.append(np.pad(filtered, [(0, 0), (_PAD, _PAD), (_PAD, _PAD)], mode="wrap"))
        return coefficients

    def _interpolate_circle(self, s: NDArray, theta: NDArray) -> Tuple[NDArray, NDArray, NDArray]:
        size = self.angular_grid.angles
        wavenumbers = np.fft.fftfreq(size, d=1.0 / size)
        derivative_factor = 1j * wavenumbers
        derivative_factor[size // 2] = 0.0
        spline_g, spline_gs = self._fourier_splines

        basis = np.exp(1j * theta[:, None] * wavenumbers[None, :]) / size
        coeff_g = spline_g(s)
        g = np.real(np.sum(coeff_g * basis, axis=-1))
        g_s = np.real(np.sum(spline_gs(s) * basis, axis=-1))
        g_theta = np.real(np.sum(coeff_g * derivative_factor * basis, axis=-1))
        tangential = g_theta[:, None] * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        return g, g_s, tangential

    def _interpolate_sphere(self, s: NDArray, theta: NDArray, phi: NDArray) -> Tuple[NDArray, NDArray, NDArray]:
        grid = self.angular_grid
        coordinates = np.stack(
            [
                s / self.log_step,
                theta * grid.polar_angles / np.pi - 0.5 + _PAD,
                phi * grid.angles / (2.0 * np.pi) + _PAD,
            ]
        )
        values = [
            map_coordinates(coefficients, coordinates, order=3, prefilter=False, mode="mirror")
            for coefficients in self._sphere_coefficients
        ]
        return values[0], values[1], np.stack(values[2:], axis=-1)

    def interpolate(self, points: ArrayLike) -> Tuple[NDArray, NDArray, NDArray]:
        """
        g, dg/ds and grad_omega g (Cartesian, (..., d)) at points (..., d) inside the marched range.

        Raises:
            RangeError: a point lies outside [r0, r_max]
        """
        pts = np.asarray(points, dtype=np.float64)
        batch_shape = pts.shape[:-1]
        flat = pts.reshape(-1, self.dimension)
        radius = np.linalg.norm(flat, axis=-1)
        self._check_range(radius)
        radius = np.clip(radius, self.r0, self.r_max)
        s = np.log(radius / self.r0)
        angles = self.angular_grid.locate(flat / radius[:, None])

        g = np.empty(len(flat))
        g_s = np.empty(len(flat))
        tangential = np.empty((len(flat), self.dimension))
        for start in range(0, len(flat), _CHUNK):
            chunk = slice(start, start + _CHUNK)
            if self.dimension == 2:
                result = self._interpolate_circle(s[chunk], angles[0][chunk])
            else:
                result = self._interpolate_sphere(s[chunk], angles[0][chunk], angles[1][chunk])
            g[chunk], g_s[chunk], tangential[chunk] = result
        return g.reshape(batch_shape), g_s.reshape(batch_shape), tangential.reshape(batch_shape + (self.dimension,))

    def value(self, points: ArrayLike) -> NDArray[np.float64]:
        """K = |x| g."""
        pts = np.asarray(points, dtype=np.float64)
        g, _, _ = self.interpolate(pts)
        return np.linalg.norm(pts, axis=-1) * g

    def gradient(self, points: ArrayLike) -> NDArray[np.float64]:
        """grad K = (g + dg/ds) x/|x| + grad_omega g."""
        pts = np.asarray(points, dtype=np.float64)
        g, g_s, tangential = self.interpolate(pts)
        directions = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
        return (g + g_s)[..., None] * directions + tangential

    def to_frame(self) -> pd.DataFrame:
        """One row per sample: r, angle indices, g and dg/dr."""
        shells = self.g_samples.shape[0]
        index = np.indices((shells,) + self.angular_grid.shape).reshape(1 + len(self.angular_grid.shape), -1)
        frame = {"r": self.radii[index[0]]}
        for axis, name in enumerate(("i", "j")[: len(self.angular_grid.shape)]):
            frame[name] = index[axis + 1]
        frame["g"] = self.g_samples.ravel()
        frame["dg_dr"] = (self.dg_ds / self.radii.reshape((-1,) + (1,) * len(self.angular_grid.shape))).ravel()
        return pd.DataFrame(frame)


def _initial_profile(init: InitProfile, p_tilde: FieldExpr, grid: AngularGrid, r0: float) -> NDArray[np.float64]:
    points = r0 * grid.directions
    if isinstance(init, np.ndarray):
        if init.shape != grid.shape:
            raise PreconditionError(f"init profile must have shape {grid.shape}, got {init.shape}")
        profile = np.asarray(init, dtype=np.float64)
    elif isinstance(init, str) and init == "default":
        radicand = 1.0 + p_tilde(points)
        if np.min(radicand) <= 0:
            raise PreconditionError("1 + p_tilde must be positive on the inner shell")
        return np.sqrt(radicand)
    elif isinstance(init, str) and init == "one":
        profile = np.ones(grid.shape)
    else:
        profile = as_field(init, grid.dimension)(points)

    logger.warning("Marching from a non-default inner profile, the outer shells depend on this choice")
    if np.min(profile) <= 0:
        raise PreconditionError("the inner profile g must be positive")
    return profile


def march_g(
    p_tilde: Union[str, FieldExpr],
    angular_grid: AngularGrid,
    r0: float = 1.0,
    r_max: float = 100.0,
    rho: float = 1.1,
    init: InitProfile = "default",
    margin: float = DEFAULT_MARGIN,
) -> EikonalSolution:
    """
    March g from r0 outwards on the shells r0 rho^m until r_max is reached.

    Args:
        p_tilde: long-range part of the index
        angular_grid: directions
        r0: inner radius
        r_max: the last shell is the first one at or beyond r_max
        rho: radius ratio between shells
        init: "default" for (1 + p_tilde(r0 w))^(1/2), "one" for g = 1, an angular expression or an array
        margin: lower bound for the radicand 1 + p_tilde - |grad_omega g|^2

    Raises:
        PreconditionError: invalid radii or inner profile
        EikonalBreakdownError: the radicand dropped below `margin`
    """
    if not r0 > 0 or not r_max > r0:
        raise PreconditionError(f"need 0 < r0 < r_max, got r0={r0}, r_max={r_max}")
    if not rho > 1:
        raise PreconditionError(f"rho must exceed 1, got {rho}")
    p_tilde = as_field(p_tilde, angular_grid.dimension)
    directions = angular_grid.directions

    step = math.log(rho)
    shells = max(1, math.ceil(math.log(r_max / r0) / step - 1e-9))
    radii = r0 * rho ** np.arange(shells + 1)

    def rhs(shell: int, radius: float, g: NDArray) -> Tuple[NDArray, NDArray]:
        p = p_tilde(radius * directions)
        radicand = 1.0 + p - angular_grid.gradient_norm_sq(g)
        lowest = float(np.min(radicand))
        if not lowest >= margin:
            raise EikonalBreakdownError(shell, radius, lowest)
        return -g + np.sqrt(radicand), p

    g = _initial_profile(init, p_tilde, angular_grid, r0)
    g_samples = np.empty((len(radii),) + angular_grid.shape)
    dg_ds = np.empty_like(g_samples)
    p_samples = np.empty_like(g_samples)

    for m, radius in enumerate(radii):
        k1, p_samples[m] = rhs(m, radius, g)
        g_samples[m], dg_ds[m] = g, k1
        if m == len(radii) - 1:
            break
        middle = radius * math.sqrt(rho)
        k2, _ = rhs(m, middle, g + 0.5 * step * k1)
        k3, _ = rhs(m, middle, g + 0.5 * step * k2)
        k4, _ = rhs(m, radius * rho, g + step * k3)
        g = g + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(g)):
            raise EikonalBreakdownError(m + 1, radius * rho, float("nan"))

    solution = EikonalSolution(angular_grid, radii, g_samples, dg_ds, p_samples)
    logger.info(
        f"Marched g over {len(radii)} shells in [{r0:.4g}, {radii[-1]:.4g}]: c0={solution.c0:.6f}, c1={solution.c1:.6f}"
    )
    return solution


def shell_residuals(solution: EikonalSolution, p_tilde: Optional[Union[str, FieldExpr]] = None) -> NDArray:
    """
    Per-shell sup of | |grad K|^2 - (1 + p_tilde) |, with dg/ds taken from a cubic spline through the marched g
    rather than from the marching law itself.
    """
    grid = solution.angular_grid
    g = solution.g_samples
    g_s = CubicSpline(solution.log_radii, g, axis=0).derivative()(solution.log_radii)
    if p_tilde is None:
        p = solution.p_tilde
    else:
        field = as_field(p_tilde, grid.dimension)
        p = np.stack([field(radius * grid.directions) for radius in solution.radii])
    residual = np.abs((g + g_s) ** 2 + grid.gradient_norm_sq(g) - (1.0 + p))
    return residual.reshape(len(solution.radii), -1).max(axis=-1)


def eikonal_residual(solution: EikonalSolution, p_tilde: Optional[Union[str, FieldExpr]] = None) -> float:
    """sup over all samples of | |grad K|^2 - (1 + p_tilde) |."""
    return float(np.max(shell_residuals(solution, p_tilde)))


def radial_speed(solution: EikonalSolution) -> NDArray[np.float64]:
    """d K / d r = g + dg/ds at the samples."""
    return solution.g_samples + solution.dg_ds


def g_infinity_check(
    solution: EikonalSolution,
    n_inf: Optional[Union[str, FieldExpr]] = None,
    lam: float = 1.0,
    threshold: float = STEADY_STATE_THRESHOLD,
) -> float:
    """
    sup over directions of |g^2 + |grad_omega g|^2 - n_inf / lambda| on the outer shell. Without `n_inf` the
    target is 1 + p_tilde on that shell.

    Raises:
        SteadyStateError: sup |dg/dr| on the outer shell is not below `threshold`
    """
    grid = solution.angular_grid
    outer = solution.g_samples[-1]
    drift = float(np.max(np.abs(solution.dg_ds[-1]))) / solution.r_max
    if not drift < threshold:
        raise SteadyStateError(
            f"outer shell r={solution.r_max:.6g} is not steady (sup |dg/dr| = {drift:.3e} >= {threshold:.1e}): "
            "march further"
        )
    if n_inf is None:
        target = 1.0 + solution.p_tilde[-1]
    else:
        target = as_field(n_inf, grid.dimension)(grid.directions) / lam
    return float(np.max(np.abs(outer**2 + grid.gradient_norm_sq(outer) - target)))
