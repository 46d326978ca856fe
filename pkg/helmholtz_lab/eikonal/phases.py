import math
from typing import Protocol, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from helmholtz_lab.errors import FieldDomainError


class Phase(Protocol):
    """A solution K of |grad K|^2 = 1 + p_tilde, evaluable on arrays of points (..., d)."""

    dimension: int

    def value(self, points: ArrayLike) -> NDArray[np.float64]: ...

    def gradient(self, points: ArrayLike) -> NDArray[np.float64]: ...


def _radii(points: ArrayLike) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    pts = np.asarray(points, dtype=np.float64)
    radius = np.linalg.norm(pts, axis=-1)
    if np.any(radius == 0.0):
        raise FieldDomainError("phases are undefined at the origin")
    return pts, radius


class RadialPhase:
    """K = |x|, the phase of every short-range scenario."""

    def __init__(self, dimension: int = 3):
        self.dimension = dimension

    def value(self, points: ArrayLike) -> NDArray[np.float64]:
        return _radii(points)[1]

    def gradient(self, points: ArrayLike) -> NDArray[np.float64]:
        pts, radius = _radii(points)
        return pts / radius[..., None]


def saito_coefficients(lam: float) -> Tuple[float, float]:
    """
    a(lambda), b(lambda) of the closed-form phase K = a |x| - b x1 for p_tilde = -x1 / (lambda |x|). They satisfy
    a^2 + b^2 = 1 and 2 a b = 1 / lambda.
    """
    if not lam > 1:
        raise FieldDomainError(f"the closed-form phase needs lambda > 1, got {lam}")
    plus = math.sqrt(1.0 + 1.0 / lam)
    minus = math.sqrt(1.0 - 1.0 / lam)
    return 0.5 * (plus + minus), 0.5 * (plus - minus)


class SaitoPhase:
    """
    K = a |x| - b x1, the exact phase of p_tilde = -x1 / (lambda |x|) for lambda > 1.
    """

    def __init__(self, lam: float, dimension: int = 3):
        self.lam = lam
        self.dimension = dimension
        self.a, self.b = saito_coefficients(lam)

    def value(self, points: ArrayLike) -> NDArray[np.float64]:
        pts, radius = _radii(points)
        return self.a * radius - self.b * pts[..., 0]

    def gradient(self, points: ArrayLike) -> NDArray[np.float64]:
        pts, radius = _radii(points)
        grad = self.a * pts / radius[..., None]
        grad[..., 0] -= self.b
        return grad

    def profile(self, directions: NDArray) -> NDArray[np.float64]:
        """g = K/|x| = a - b w1 on unit vectors (..., d)."""
        return self.a - self.b * directions[..., 0]


def saito_exact(lam: float, point: ArrayLike) -> Tuple[Union[float, NDArray], NDArray[np.float64]]:
    """
    Closed-form K and grad K = a x/|x| - b e1 at one point (d,) or at points (..., d).

    Raises:
        FieldDomainError: lambda <= 1 or a point at the origin
    """
    pts = np.asarray(point, dtype=np.float64)
    phase = SaitoPhase(lam, dimension=pts.shape[-1])
    value = phase.value(pts)
    return (float(value) if value.ndim == 0 else value), phase.gradient(pts)
