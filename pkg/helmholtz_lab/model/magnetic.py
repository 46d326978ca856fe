from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from helmholtz_lab.errors import FieldDomainError
from helmholtz_lab.model.expressions import differentiate_field
from helmholtz_lab.model.scenario import Scenario


@dataclass(frozen=True)
class MagneticFieldData:
    """
    Magnetic field of a potential b at one point or at an array of points:
    - b_matrix: (..., d, d) antisymmetric matrix with B_jk = d b_j / d x_k - d b_k / d x_j
    - b_tau: (..., d) tangential trace (B_tau)_j = sum_k (x_k/|x|) B_kj
    """

    b_matrix: NDArray[np.float64]
    b_tau: NDArray[np.float64]

    @property
    def b_tau_norm(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.b_tau, axis=-1)


def potential_jacobian(
    scenario: Scenario,
    points: ArrayLike,
    step: Optional[Union[float, NDArray]] = None,
) -> NDArray[np.float64]:
    """(Db)_jk = d b_j / d x_k by central differences, shape (..., d, d)."""
    pts = np.asarray(points, dtype=np.float64)
    d = scenario.dimension
    jacobian = np.zeros(pts.shape + (d,), dtype=np.float64)
    for j, component in enumerate(scenario.b):
        if component.is_constant:
            continue
        for k in range(d):
            jacobian[..., j, k] = differentiate_field(component, pts, k, step)
    return jacobian


def magnetic_field(
    scenario: Scenario,
    point: ArrayLike,
    step: Optional[Union[float, NDArray]] = None,
) -> MagneticFieldData:
    """
    Compute B = Db - (Db)^T and its tangential trace B_tau = (x/|x|) B at one point (d,) or at points (..., d).

    Raises:
        FieldDomainError: at the origin (B_tau needs x/|x|) or where b is singular
    """
    pts = np.asarray(point, dtype=np.float64)
    radius = np.linalg.norm(pts, axis=-1, keepdims=True)
    if np.any(radius == 0.0):
        raise FieldDomainError("the tangential magnetic field is undefined at the origin")

    jacobian = potential_jacobian(scenario, pts, step)
    # Built as a difference of transposes, so exactly antisymmetric.
    b_matrix = jacobian - np.swapaxes(jacobian, -1, -2)
    directions = pts / radius
    b_tau = np.einsum("...k,...kj->...j", directions, b_matrix)
    return MagneticFieldData(b_matrix=b_matrix, b_tau=b_tau)
