import logging
from typing import Optional

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, spilu

from helmholtz_lab.grid.operators import HelmholtzOperator

logger = logging.getLogger(__name__)

PRECONDITIONERS = ("diagonal", "shifted-laplacian", "ilu", "none")
SHIFT_IMAGINARY = 0.5


def diagonal_preconditioner(matrix: sp.spmatrix) -> LinearOperator:
    inverse = 1.0 / matrix.diagonal()
    return LinearOperator(matrix.shape, matvec=lambda x: inverse * np.ravel(x), dtype=np.complex128)


def ilu_preconditioner(matrix: sp.spmatrix, drop_tol: float = 1e-5, fill_factor: float = 10.0) -> LinearOperator:
    factor = spilu(matrix.tocsc(), drop_tol=drop_tol, fill_factor=fill_factor)
    return LinearOperator(matrix.shape, matvec=factor.solve, dtype=np.complex128)


def shifted_laplacian_preconditioner(operator: HelmholtzOperator, beta: float = SHIFT_IMAGINARY) -> LinearOperator:
    """
    One smoothed-aggregation V-cycle on the shifted operator

        S = L_b + (1 + i beta) (n + Q)_+ + i eps,

    i.e. A with its zeroth-order term rotated into the complex plane.
    """

    zeroth = operator.zeroth_order
    shift = (1.0 + 1j * beta) * np.maximum(zeroth, 0.0) + np.minimum(zeroth, 0.0)
    matrix = operator.to_sparse() + sp.diags(shift - zeroth)

    # -S has a positive-definite-like principal part.
    hierarchy = pyamg.smoothed_aggregation_solver((-matrix).tocsr(), symmetry="nonsymmetric", max_coarse=64)
    cycle = hierarchy.aspreconditioner(cycle="V")
    logger.debug(f"Shifted-Laplacian hierarchy:\n{hierarchy}")
    return LinearOperator(matrix.shape, matvec=lambda x: -cycle.matvec(np.ravel(x)), dtype=np.complex128)


def build_preconditioner(
    kind: str,
    matrix: sp.spmatrix,
    operator: Optional[HelmholtzOperator] = None,
) -> Optional[LinearOperator]:
    """
    Return the approximate inverse M of the system matrix for `kind` in
    {"diagonal", "shifted-laplacian", "ilu", "none"}.
    """
    if kind == "diagonal":
        return diagonal_preconditioner(matrix)
    elif kind == "ilu":
        return ilu_preconditioner(matrix)
    elif kind == "shifted-laplacian":
        if operator is None:
            raise ValueError("The shifted-laplacian preconditioner needs the HelmholtzOperator")
        return shifted_laplacian_preconditioner(operator)
    elif kind == "none":
        return None
    else:
        raise ValueError(f"Invalid preconditioner: {kind}, expected one of {PRECONDITIONERS}")
