"""
Second-order diagnostics of a marched phase.

    F_ij = K d_ij K - |grad K|^2 delta_ij + d_i K d_j K

vanishes for K = |x| and measures how far the level sets of K are from spheres.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from helmholtz_lab.eikonal.marching import EikonalSolution
from helmholtz_lab.errors import RangeError
from helmholtz_lab.model.expressions import FieldExpr, as_field, field_gradient

logger = logging.getLogger(__name__)

RELATIVE_STEP = 1e-3
SMALLNESS_SHELLS = 8


@dataclass
class CurvatureReport:
    points: NDArray[np.float64]
    values: NDArray[np.float64]
    gradients: NDArray[np.float64]
    hessians: NDArray[np.float64]
    f_matrix: NDArray[np.float64]

    @property
    def sup_norm(self) -> float:
        """max over points of max_ij |F_ij|."""
        if self.f_matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.f_matrix)))


@dataclass
class SmallnessProfile:
    """sup |g - 1|, sup |x| |grad g| and sup |x|^2 |d^2 g| over the marched shells, with the bounds c0, c1 of g."""

    g_deviation: float
    scaled_gradient: float
    scaled_hessian: float
    c0: float
    c1: float


def _check_inner(solution: EikonalSolution, radius: NDArray) -> None:
    ratio = solution.radii[1] / solution.radii[0]
    lower, upper = solution.r0 * ratio**2, solution.r_max / ratio**2
    if np.any(radius < lower * (1 - 1e-12)) or np.any(radius > upper * (1 + 1e-12)):
        raise RangeError(
            f"curvature needs two shells of margin: |x| must lie in [{lower:.6g}, {upper:.6g}], "
            f"got [{np.min(radius):.6g}, {np.max(radius):.6g}]"
        )


def _central_jacobian(function, pts: NDArray, step: NDArray) -> NDArray:
    """J[..., i, k] = d function_i / d x_k by central differences of a vector function of points (P, d)."""
    d = pts.shape[-1]
    offsets = np.eye(d)[None, :, :] * step[:, None, None]
    shifted = np.concatenate([pts[:, None, :] + offsets, pts[:, None, :] - offsets], axis=1)
    values = function(shifted.reshape(-1, d)).reshape(len(pts), 2 * d, -1)
    return np.swapaxes((values[:, :d] - values[:, d:]) / (2.0 * step[:, None, None]), 1, 2)


def curvature_report(solution: EikonalSolution, points: ArrayLike) -> CurvatureReport:
    """
    F_ij at points (P, d) from central differences of the reconstructed grad K (step 1e-3 |x|).

    Raises:
        RangeError: a point lies within two shells of either end of the marched range
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    radius = np.linalg.norm(pts, axis=-1)
    _check_inner(solution, radius)

    values = solution.value(pts)
    gradients = solution.gradient(pts)
    hessians = _central_jacobian(solution.gradient, pts, RELATIVE_STEP * radius)
    hessians = 0.5 * (hessians + np.swapaxes(hessians, 1, 2))

    identity = np.eye(solution.dimension)
    f_matrix = (
        values[:, None, None] * hessians
        - np.sum(gradients**2, axis=-1)[:, None, None] * identity
        + gradients[:, :, None] * gradients[:, None, :]
    )
    return CurvatureReport(pts, values, gradients, hessians, f_matrix)


def hessian_F(solution: EikonalSolution, point: ArrayLike) -> NDArray[np.float64]:  # noqa: N802
    """F_ij at a single point (d,), shape (d, d)."""
    return curvature_report(solution, np.asarray(point, dtype=np.float64)[None, :]).f_matrix[0]


def _interior_sample_points(solution: EikonalSolution, shells: int = SMALLNESS_SHELLS) -> NDArray[np.float64]:
    if len(solution.radii) < 5:
        raise RangeError(f"need at least 5 shells, got {len(solution.radii)}")
    inner = np.arange(2, len(solution.radii) - 2)
    chosen = inner[np.unique(np.linspace(0, len(inner) - 1, min(shells, len(inner))).round().astype(int))]
    directions = solution.angular_grid.directions.reshape(-1, solution.dimension)
    return (solution.radii[chosen][:, None, None] * directions[None, :, :]).reshape(-1, solution.dimension)


def smallness_profile(solution: EikonalSolution, shells: int = SMALLNESS_SHELLS) -> SmallnessProfile:
    """
    Smallness of g - 1 and its scaled derivatives. The first two use every sample; the Hessian of g is sampled on up
    to `shells` interior shells by central differences.
    """
    grid = solution.angular_grid
    g = solution.g_samples
    gradient_sq = grid.gradient_norm_sq(g)

    def grad_g(pts: NDArray) -> NDArray:
        _, g_s, tangential = solution.interpolate(pts)
        radius = np.linalg.norm(pts, axis=-1, keepdims=True)
        return (g_s[:, None] * pts / radius + tangential) / radius

    pts = _interior_sample_points(solution, shells)
    radius = np.linalg.norm(pts, axis=-1)
    hessian = _central_jacobian(grad_g, pts, RELATIVE_STEP * radius)
    scaled_hessian = float(np.max(radius[:, None, None] ** 2 * np.abs(hessian)))

    return SmallnessProfile(
        g_deviation=float(np.max(np.abs(g - 1.0))),
        scaled_gradient=float(np.max(np.sqrt(solution.dg_ds**2 + gradient_sq))),
        scaled_hessian=scaled_hessian,
        c0=solution.c0,
        c1=solution.c1,
    )


def index_gradient_residual(
    solution: EikonalSolution,
    p_tilde: Union[str, FieldExpr],
    points: Optional[ArrayLike] = None,
) -> Tuple[float, float]:
    """
    Compare grad p_tilde with (2/K) F grad K, which agree for an exact eikonal phase.

    Returns:
        (sup of the absolute gap, sup |grad p_tilde|) over the points (default: interior shell samples)
    """
    pts = _interior_sample_points(solution) if points is None else np.atleast_2d(np.asarray(points, dtype=np.float64))
    report = curvature_report(solution, pts)
    field = as_field(p_tilde, solution.dimension)
    expected = field_gradient(field, pts)
    reconstructed = 2.0 / report.values[:, None] * np.einsum("pkj,pj->pk", report.f_matrix, report.gradients)
    gap = float(np.max(np.abs(expected - reconstructed)))
    scale = float(np.max(np.abs(expected)))
    logger.debug(f"Pressure gradient gap {gap:.3e} against sup |grad p_tilde| = {scale:.3e}")
    return gap, scale
