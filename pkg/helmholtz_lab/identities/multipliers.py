"""
Multipliers of the Morawetz identities.

Every kink of the classical multipliers is replaced by the quintic smoothstep S(t) = 6t^5 - 15t^4 + 10t^3 (clipped to
[0, 1]) over a band of width 0.4R centered on the kink, so that third derivatives of psi exist on the grid.
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

from helmholtz_lab.eikonal.phases import Phase, RadialPhase
from helmholtz_lab.model.expressions import FieldExpr, as_field

logger = logging.getLogger(__name__)

BAND_START = 0.8
BAND_WIDTH = 0.4
QUADRATURE_ORDER = 32


class MultiplierKind(str, Enum):
    PHI_CONSTANT = "phi_const"
    PHI_THETA_OVER_R = "phi_theta_over_R"
    PSI_RADIAL = "psi_radial"
    PSI_Q = "psi_q"
    PSI_EIKONAL = "psi_eikonal"


def smoothstep(t: ArrayLike) -> NDArray[np.float64]:
    s = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def smoothstep_derivatives(t: ArrayLike) -> Tuple[NDArray, NDArray, NDArray]:
    """S, S' and S'' (zero outside of [0, 1])."""
    t = np.asarray(t, dtype=np.float64)
    s = np.clip(t, 0.0, 1.0)
    inside = (t > 0.0) & (t < 1.0)
    first = np.where(inside, 30.0 * s**2 * (1.0 - s) ** 2, 0.0)
    second = np.where(inside, 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s), 0.0)
    return smoothstep(t), first, second


def _band(radius: NDArray, R: float) -> Tuple[NDArray, float]:  # noqa: N803
    """Band coordinate t = (r - 0.8R) / 0.4R and dt/dr."""
    width = BAND_WIDTH * R
    return (radius - BAND_START * R) / width, 1.0 / width


def _as_points(points: ArrayLike) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return pts, np.linalg.norm(pts, axis=-1)


class Multiplier(ABC):
    """
    A multiplier psi and/or phi evaluable on points (P, d).

    Subclasses implement the `_impl` methods; psi-only multipliers have phi = 0 and phi-only multipliers psi = 0.
    """

    kind: MultiplierKind
    has_psi: bool = False
    has_phi: bool = False

    def __init__(self, dimension: int):
        if dimension not in (2, 3):
            raise ValueError(f"Invalid dimension: {dimension}")
        self.dimension = dimension

    @property
    def params(self) -> Dict[str, Any]:
        return {}

    def _psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(len(pts))

    def _grad_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(pts.shape)

    def _hessian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(pts.shape + (self.dimension,))

    def _laplacian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.trace(self._hessian_psi_impl(pts, radius), axis1=-2, axis2=-1)

    def _grad_laplacian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(pts.shape)

    def _phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(len(pts))

    def _grad_phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.zeros(pts.shape)

    def psi(self, points: ArrayLike) -> NDArray:
        return self._psi_impl(*_as_points(points))

    def grad_psi(self, points: ArrayLike) -> NDArray:
        return self._grad_psi_impl(*_as_points(points))

    def hessian_psi(self, points: ArrayLike) -> NDArray:
        return self._hessian_psi_impl(*_as_points(points))

    def laplacian_psi(self, points: ArrayLike) -> NDArray:
        return self._laplacian_psi_impl(*_as_points(points))

    def grad_laplacian_psi(self, points: ArrayLike) -> NDArray:
        return self._grad_laplacian_psi_impl(*_as_points(points))

    def phi(self, points: ArrayLike) -> NDArray:
        return self._phi_impl(*_as_points(points))

    def grad_phi(self, points: ArrayLike) -> NDArray:
        return self._grad_phi_impl(*_as_points(points))

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, **self.params}


class PhiConstant(Multiplier):
    kind = MultiplierKind.PHI_CONSTANT
    has_phi = True

    def __init__(self, dimension: int, value: float = 1.0):
        super().__init__(dimension)
        self.value = float(value)

    @property
    def params(self) -> Dict[str, Any]:
        return {"value": self.value}

    def _phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return np.full(len(pts), self.value)


class PhiThetaOverR(Multiplier):
    """phi = theta_R / (2R) with theta_R = 1 - S((r - 0.8R) / 0.4R): 1/(2R) inside 0.8R, 0 beyond 1.2R."""

    kind = MultiplierKind.PHI_THETA_OVER_R
    has_phi = True

    def __init__(self, dimension: int, R: float):  # noqa: N803
        super().__init__(dimension)
        if not R > 0:
            raise ValueError(f"R must be positive, got {R}")
        self.R = float(R)

    @property
    def params(self) -> Dict[str, Any]:
        return {"R": self.R}

    def _phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        t, _ = _band(radius, self.R)
        return (1.0 - smoothstep(t)) / (2.0 * self.R)

    def _grad_phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        t, dt = _band(radius, self.R)
        _, s1, _ = smoothstep_derivatives(t)
        directions = pts / np.where(radius == 0.0, 1.0, radius)[:, None]
        return (-s1 * dt / (2.0 * self.R))[:, None] * directions


class RadialPsi(Multiplier):
    """
    Radial psi with psi'(r) = F'(r):

    - "morawetz": F' = A + S(t)(1 - A) with A = r/R, so grad psi = x/R inside 0.8R and x/|x| beyond 1.2R
    - "capped":   F' = A (1 - S(t_cap)) with t_cap over the band of `R_cap`, so D^2 psi = I/R inside 0.8 R_cap and
      psi is constant beyond 1.2 R_cap

    Args:
        R: scale of the inner region
        profile: "morawetz" or "capped"
        R_cap: cap radius of the "capped" profile (default 2R)
        with_phi: also carry phi = theta_R / (2R)
    """

    kind = MultiplierKind.PSI_RADIAL
    has_psi = True

    def __init__(
        self,
        dimension: int,
        R: float,  # noqa: N803
        profile: str = "morawetz",
        R_cap: Optional[float] = None,  # noqa: N803
        with_phi: bool = False,
    ):
        super().__init__(dimension)
        if not R > 0:
            raise ValueError(f"R must be positive, got {R}")
        if profile not in ("morawetz", "capped"):
            raise ValueError(f"Invalid profile: {profile}")
        self.R = float(R)
        self.profile = profile
        self.R_cap = float(2.0 * R if R_cap is None else R_cap)
        if not self.R_cap > 0:
            raise ValueError(f"R_cap must be positive, got {self.R_cap}")
        self.has_phi = with_phi
        self._phi = PhiThetaOverR(dimension, R) if with_phi else None

    @property
    def params(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {"R": self.R, "profile": self.profile}
        if self.profile == "capped":
            params["R_cap"] = self.R_cap
        return params

    def radial_derivatives(self, radius: NDArray) -> Tuple[NDArray, NDArray, NDArray]:
        """F', F'' and F''' at radii r."""
        a, da = radius / self.R, 1.0 / self.R
        if self.profile == "morawetz":
            t, dt = _band(radius, self.R)
            s, s1, s2 = smoothstep_derivatives(t)
            first = a + s * (1.0 - a)
            second = da + s1 * dt * (1.0 - a) - s * da
            third = s2 * dt**2 * (1.0 - a) - 2.0 * s1 * dt * da
        else:
            t, dt = _band(radius, self.R_cap)
            s, s1, s2 = smoothstep_derivatives(t)
            first = a * (1.0 - s)
            second = da * (1.0 - s) - a * s1 * dt
            third = -2.0 * da * s1 * dt - a * s2 * dt**2
        return first, second, third

    def _psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        nodes, weights = leggauss(QUADRATURE_ORDER)
        samples = 0.5 * radius[:, None] * (nodes[None, :] + 1.0)
        first, _, _ = self.radial_derivatives(samples)
        return 0.5 * radius * np.sum(weights[None, :] * first, axis=-1)

    def _grad_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        first, _, _ = self.radial_derivatives(radius)
        # F'(r) / r stays bounded at the origin: F' = r/R there.
        return (first / np.where(radius == 0.0, 1.0, radius))[:, None] * pts

    def _hessian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        first, second, _ = self.radial_derivatives(radius)
        safe = np.where(radius == 0.0, 1.0, radius)
        directions = pts / safe[:, None]
        outer = directions[:, :, None] * directions[:, None, :]
        identity = np.eye(self.dimension)[None, :, :]
        return second[:, None, None] * outer + (first / safe)[:, None, None] * (identity - outer)

    def _laplacian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        first, second, _ = self.radial_derivatives(radius)
        return second + (self.dimension - 1) * first / np.where(radius == 0.0, 1.0, radius)

    def _grad_laplacian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        first, second, third = self.radial_derivatives(radius)
        safe = np.where(radius == 0.0, 1.0, radius)
        radial = third + (self.dimension - 1) * (second * safe - first) / safe**2
        return radial[:, None] * pts / safe[:, None]

    def _phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        return self._phi._phi_impl(pts, radius) if self._phi is not None else super()._phi_impl(pts, radius)

    def _grad_phi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        if self._phi is None:
            return super()._grad_phi_impl(pts, radius)
        return self._phi._grad_phi_impl(pts, radius)


class _FiniteDifferencePsi(Multiplier):
    """Derivatives of psi by central differences: D^2 psi from psi, grad(lap psi) from lap psi."""

    has_psi = True
    gradient_step = 1e-5
    hessian_step = 1e-3
    third_step = 1e-2

    def _shifted(self, function, pts: NDArray, axis: int, step: NDArray) -> Tuple[NDArray, NDArray]:
        offset = np.zeros_like(pts)
        offset[:, axis] = step
        return function(pts + offset), function(pts - offset)

    def _psi_of(self, pts: NDArray) -> NDArray:
        return self._psi_impl(pts, np.linalg.norm(pts, axis=-1))

    def _grad_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        step = self.gradient_step * (1.0 + radius)
        columns = []
        for k in range(self.dimension):
            plus, minus = self._shifted(self._psi_of, pts, k, step)
            columns.append((plus - minus) / (2.0 * step))
        return np.stack(columns, axis=-1)

    def _hessian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        step = self.hessian_step * (1.0 + radius)
        d = self.dimension
        center = self._psi_of(pts)
        hessian = np.empty((len(pts), d, d))
        for i in range(d):
            plus, minus = self._shifted(self._psi_of, pts, i, step)
            hessian[:, i, i] = (plus - 2.0 * center + minus) / step**2
            for j in range(i + 1, d):
                offset = np.zeros_like(pts)
                offset[:, i] = step
                offset[:, j] = step
                cross = np.zeros_like(pts)
                cross[:, i] = step
                cross[:, j] = -step
                value = (
                    self._psi_of(pts + offset)
                    - self._psi_of(pts + cross)
                    - self._psi_of(pts - cross)
                    + self._psi_of(pts - offset)
                ) / (4.0 * step**2)
                hessian[:, i, j] = hessian[:, j, i] = value
        return hessian

    def _laplacian_of(self, pts: NDArray) -> NDArray:
        return self._laplacian_psi_impl(pts, np.linalg.norm(pts, axis=-1))

    def _grad_laplacian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        step = self.third_step * (1.0 + radius)
        columns = []
        for k in range(self.dimension):
            plus, minus = self._shifted(self._laplacian_of, pts, k, step)
            columns.append((plus - minus) / (2.0 * step))
        return np.stack(columns, axis=-1)


def q_profile(rho: ArrayLike) -> NDArray[np.float64]:
    """q(rho) = rho S(rho - 1): 0 for rho <= 1, rho for rho >= 2, non-decreasing."""
    rho = np.asarray(rho, dtype=np.float64)
    return rho * smoothstep(rho - 1.0)


class PsiQ(_FiniteDifferencePsi):
    """psi = q(|x| / R) n_inf(x/|x|)."""

    kind = MultiplierKind.PSI_Q

    def __init__(self, dimension: int, R: float, n_inf: Union[str, FieldExpr]):  # noqa: N803
        super().__init__(dimension)
        if not R > 0:
            raise ValueError(f"R must be positive, got {R}")
        self.R = float(R)
        self.n_inf = as_field(n_inf, dimension)

    @property
    def params(self) -> Dict[str, Any]:
        return {"R": self.R, "n_inf": self.n_inf.pretty()}

    def _psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        q = q_profile(radius / self.R)
        values = np.zeros(len(pts))
        active = q > 0
        if np.any(active):
            directions = pts[active] / radius[active][:, None]
            values[active] = q[active] * self.n_inf(directions)
        return values


class PsiEikonal(_FiniteDifferencePsi):
    """
    psi = G(K) with G'(K) = (1 + K)^delta S((K - 0.8 R1) / 0.4 R1), so grad psi = G'(K) grad K.

    Points inside the inner radius of the phase (`phase.r0` when it has one) get psi = 0; R1 must be large enough
    that K < 0.8 R1 there.
    """

    kind = MultiplierKind.PSI_EIKONAL
    hessian_step = 1e-4

    def __init__(
        self,
        dimension: int,
        R1: float,  # noqa: N803
        delta: float = 1.0,
        phase: Optional[Phase] = None,
    ):
        super().__init__(dimension)
        self.phase = RadialPhase(dimension) if phase is None else phase
        inner = float(getattr(self.phase, "r0", 0.0))
        if not 0 < delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {delta}")
        if not R1 > 0 or R1 < inner:
            raise ValueError(f"R1 must be positive and at least r0={inner}, got {R1}")
        self.R1 = float(R1)
        self.delta = float(delta)
        self.inner_radius = inner

    @property
    def params(self) -> Dict[str, Any]:
        return {"R1": self.R1, "delta": self.delta}

    def profile_derivative(self, k: NDArray) -> NDArray:
        t, _ = _band(k, self.R1)
        return (1.0 + k) ** self.delta * smoothstep(t)

    def _active(self, radius: NDArray) -> NDArray[np.bool_]:
        return radius >= self.inner_radius if self.inner_radius > 0 else radius > 0

    def _psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        values = np.zeros(len(pts))
        active = self._active(radius)
        if np.any(active):
            k = self.phase.value(pts[active])
            nodes, weights = leggauss(QUADRATURE_ORDER)
            samples = 0.5 * k[:, None] * (nodes[None, :] + 1.0)
            values[active] = 0.5 * k * np.sum(weights[None, :] * self.profile_derivative(samples), axis=-1)
        return values

    def _grad_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        gradient = np.zeros(pts.shape)
        active = self._active(radius)
        if np.any(active):
            k = self.phase.value(pts[active])
            gradient[active] = self.profile_derivative(k)[:, None] * self.phase.gradient(pts[active])
        return gradient

    def _hessian_psi_impl(self, pts: NDArray, radius: NDArray) -> NDArray:
        step = self.hessian_step * (1.0 + radius)
        columns = []
        for k in range(self.dimension):
            offset = np.zeros_like(pts)
            offset[:, k] = step
            plus = self._grad_psi_impl(pts + offset, np.linalg.norm(pts + offset, axis=-1))
            minus = self._grad_psi_impl(pts - offset, np.linalg.norm(pts - offset, axis=-1))
            columns.append((plus - minus) / (2.0 * step[:, None]))
        hessian = np.stack(columns, axis=-1)
        return 0.5 * (hessian + np.swapaxes(hessian, -1, -2))


def multiplier_catalog(kind: Union[str, MultiplierKind], dimension: int = 3, **params: Any) -> Multiplier:
    """
    Build a multiplier by kind:

    - phi_const: value (default 1)
    - phi_theta_over_R: R
    - psi_radial: R, profile ("morawetz" | "capped"), R_cap, with_phi
    - psi_q: R, n_inf
    - psi_eikonal: R1, delta, phase
    """
    kind = MultiplierKind(kind)
    if kind is MultiplierKind.PHI_CONSTANT:
        return PhiConstant(dimension, **params)
    elif kind is MultiplierKind.PHI_THETA_OVER_R:
        return PhiThetaOverR(dimension, **params)
    elif kind is MultiplierKind.PSI_RADIAL:
        return RadialPsi(dimension, **params)
    elif kind is MultiplierKind.PSI_Q:
        return PsiQ(dimension, **params)
    elif kind is MultiplierKind.PSI_EIKONAL:
        return PsiEikonal(dimension, **params)
    else:
        raise ValueError(f"Invalid multiplier kind: {kind}")
