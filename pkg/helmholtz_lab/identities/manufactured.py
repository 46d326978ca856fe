import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from tqdm.auto import tqdm

from helmholtz_lab.grid.grid import Grid, WaveField, build_grid
from helmholtz_lab.grid.operators import gaussian_bump
from helmholtz_lab.identities.morawetz import IdentityKind, identity_residual
from helmholtz_lab.identities.multipliers import Multiplier, MultiplierKind
from helmholtz_lab.model.scenario import Scenario
from helmholtz_lab.solver.krylov import manufactured_source
from helmholtz_lab.utils.parallel_utils import parallel_map

logger = logging.getLogger(__name__)

MATRIX_COLUMNS = [
    "which",
    "kind",
    "R",
    "delta",
    "h",
    "lhs",
    "rhs",
    "rel_residual",
    "observed_order",
    "accounting_gap",
]


def manufactured_pair(
    grid: Grid,
    scenario: Scenario,
    center: Optional[NDArray] = None,
    width: Optional[float] = None,
    wavevector: Optional[NDArray] = None,
    epsilon: Optional[float] = None,
) -> Tuple[WaveField, WaveField]:
    """
    A Gaussian wave packet u and f := A u with the discrete operator.

    Args:
        width: defaults to L/8
        wavevector: defaults to sqrt(lambda) e1, an outgoing-looking packet
    """
    width = grid.half_width / 8.0 if width is None else width
    if wavevector is None:
        wavevector = np.zeros(grid.dimension)
        wavevector[0] = math.sqrt(scenario.lam)
    u = gaussian_bump(grid, center=center, width=width, wavevector=wavevector)
    return u, manufactured_source(grid, scenario, u, epsilon=epsilon)


def _applicable(multiplier: Multiplier, which: IdentityKind) -> bool:
    if which is IdentityKind.SYMMETRIC:
        return multiplier.has_psi
    if which in (IdentityKind.REAL, IdentityKind.IMAGINARY):
        return multiplier.has_phi
    # The a-priori pair has no multiplier; one row per level under phi = 1.
    return multiplier.kind is MultiplierKind.PHI_CONSTANT


def verification_matrix(
    scenario: Scenario,
    multipliers: Sequence[Multiplier],
    levels: Sequence[int] = (65, 129, 257),
    which: Sequence[Union[str, IdentityKind]] = (IdentityKind.SYMMETRIC, IdentityKind.REAL, IdentityKind.IMAGINARY),
    half_width: Optional[float] = None,
    show_progress: bool = False,
    num_workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    Evaluate every applicable (identity, multiplier) combination on manufactured pairs over grid levels.

    `observed_order` is log(r_coarse / r_fine) / log(h_coarse / h_fine) between consecutive levels of the same
    combination (NaN on the coarsest level or when a residual is 0). `accounting_gap` compares the sum of the
    identity terms with the single-pass pairing against A u.

    Args:
        scenario: the problem; its dimension sets the grids
        multipliers: catalog entries, each paired with the identities it can drive
        levels: points per axis, coarse to fine
        which: identities to evaluate; a-priori kinds run once per level, under the phi_const entry
        half_width: box half width, defaults to `scenario.half_width`
        num_workers: threads evaluating the combinations of one level
    """
    half_width = scenario.half_width if half_width is None else half_width
    kinds = [IdentityKind(entry) for entry in which]
    combinations = [
        (index, multiplier, kind)
        for index, multiplier in enumerate(multipliers)
        for kind in kinds
        if _applicable(multiplier, kind)
    ]
    rows: List[Dict] = []
    previous: Dict[Tuple[int, IdentityKind], Tuple[float, float]] = {}

    for points in tqdm(levels, desc="Grid levels", disable=not show_progress):
        grid = build_grid(scenario.dimension, half_width, points)
        u, f = manufactured_pair(grid, scenario)
        results = parallel_map(
            lambda combination: identity_residual(u, f, scenario, combination[1], combination[2]),
            combinations,
            num_workers,
        )
        for (index, multiplier, kind), result in zip(combinations, results):
            order = float("nan")
            if (index, kind) in previous:
                coarse_h, coarse_residual = previous[(index, kind)]
                if coarse_residual > 0 and result.rel_residual > 0:
                    order = math.log(coarse_residual / result.rel_residual) / math.log(coarse_h / grid.spacing)
            previous[(index, kind)] = (grid.spacing, result.rel_residual)
            params = multiplier.params
            rows.append(
                {
                    "which": kind.value,
                    "kind": multiplier.kind.value,
                    "R": params.get("R", params.get("R1")),
                    "delta": params.get("delta"),
                    "h": grid.spacing,
                    "lhs": result.lhs,
                    "rhs": result.rhs,
                    "rel_residual": result.rel_residual,
                    "observed_order": order,
                    "accounting_gap": result.accounting_gap,
                }
            )
        logger.info(f"Verified {len(rows)} identity rows up to N={points}")
    return pd.DataFrame(rows, columns=MATRIX_COLUMNS)
