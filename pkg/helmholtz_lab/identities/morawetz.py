"""
Morawetz-type integral identities and a-priori estimates evaluated on computed (u, f) pairs.

With A u = L_b u + c u + i eps u = f, c = lambda (1 + p_tilde) + Q:

- imag_4_2:   eps sum phi |u|^2 - Im sum_edges (d phi) w conj(avg) = Im sum phi f conj(u)
- real_4_11:  sum_edges phi_mid |w|^2 + Re sum_edges (d phi) w conj(avg) - sum phi c |u|^2 = -Re sum phi f conj(u)
- sym_4_3:    the real part of A u against grad psi . conj(grad_b u) + (lap psi / 2) conj(u), integrated by parts
- apriori_a:  eps sum |u|^2 <= sum |f| |u|
- apriori_b:  sum_edges |w|^2 <= sum (c)_+ |u|^2 + sum |f| |u|

Sums carry the cell volume h^d. The first two and the a-priori pair live on the Peierls edges, where summation by
parts against the discrete operator is exact; the symmetric identity uses centered gradients and is O(h^2).

Besides the integrated-by-parts sum of its terms, every identity also reports `direct`: the same pairing taken
against A u in one pass, before any summation by parts.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.errors import PreconditionError
from helmholtz_lab.grid.grid import WaveField
from helmholtz_lab.grid.operators import HelmholtzOperator, edge_differences, magnetic_gradient
from helmholtz_lab.identities.multipliers import Multiplier, PhiConstant
from helmholtz_lab.model.expressions import field_gradient
from helmholtz_lab.model.magnetic import magnetic_field
from helmholtz_lab.model.scenario import Scenario

logger = logging.getLogger(__name__)

DEFAULT_CONSISTENCY_TOL = 1e-6
VIOLATION_FACTOR = 10.0

# Pairing of the identity against a node array g (f for the right-hand side, A u for `direct`).
Pairing = Callable[[NDArray[np.complex128]], float]


class IdentityKind(str, Enum):
    SYMMETRIC = "sym_4_3"
    REAL = "real_4_11"
    IMAGINARY = "imag_4_2"
    APRIORI_A = "apriori_a"
    APRIORI_B = "apriori_b"

    @classmethod
    def _missing_(cls, value):
        aliases = {"symmetric": cls.SYMMETRIC, "real": cls.REAL, "imaginary": cls.IMAGINARY}
        return aliases.get(value)


@dataclass
class IdentityResidual:
    """
    Both sides of one identity (or inequality lhs <= rhs) and their relative gap
    |lhs - rhs| / (|lhs| + |rhs| + ||f|| ||u||), 0 when the denominator vanishes.

    `terms` holds the individually evaluated summands of lhs; `direct` is lhs computed in a single pass against
    A u, None for the a-priori pair.
    """

    which: IdentityKind
    lhs: float
    rhs: float
    rel_residual: float
    spacing: float
    norm_product: float
    terms: Dict[str, float] = field(default_factory=dict)
    direct: Optional[float] = None

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def saturation(self) -> float:
        return self.lhs / self.rhs if self.rhs != 0.0 else float("nan")

    @property
    def accounting_gap(self) -> float:
        """Relative gap between the sum of `terms` and `direct`."""
        if self.direct is None:
            return float("nan")
        return relative_residual(self.lhs, self.direct, self.norm_product)

    def violated(self, tol: float = 1e-8) -> bool:
        """Negative slack beyond 10 tol ||f|| ||u||."""
        return self.slack < -VIOLATION_FACTOR * tol * self.norm_product


def relative_residual(lhs: float, rhs: float, norm_product: float) -> float:
    denominator = abs(lhs) + abs(rhs) + norm_product
    return abs(lhs - rhs) / denominator if denominator > 0 else 0.0


def check_consistency(
    u: WaveField,
    f: WaveField,
    scenario: Scenario,
    epsilon: Optional[float] = None,
    tol: float = DEFAULT_CONSISTENCY_TOL,
) -> HelmholtzOperator:
    """
    Raise PreconditionError unless ||A u - f|| <= tol ||f||. Returns the operator.
    """
    if u.grid != f.grid:
        raise PreconditionError("u and f live on different grids")
    operator = HelmholtzOperator(u.grid, scenario, epsilon=epsilon)
    residual = np.linalg.norm(operator.matvec(u.values) - f.values)
    reference = np.linalg.norm(f.values)
    if residual > tol * reference:
        relative = residual / reference if reference > 0 else float("inf")
        raise PreconditionError(f"(u, f) is not a solution pair: ||Au - f|| / ||f|| = {relative:.3e} > {tol:.1e}")
    return operator


def _zeroth_order(scenario: Scenario, points: NDArray[np.float64], literal_coefficient: bool) -> NDArray[np.float64]:
    """c = lambda (1 + p_tilde) + Q, or lambda + p_tilde + Q with `literal_coefficient`."""
    if literal_coefficient:
        return scenario.lam + scenario.long_range(points) + scenario.potential(points)
    return scenario.refraction(points) + scenario.potential(points)


def _edge_sums(
    u: WaveField,
    scenario: Scenario,
    multiplier: Multiplier,
    links: List[NDArray[np.complex128]],
) -> Tuple[float, complex]:
    """sum_edges phi_mid |w|^2 and sum_edges (d phi) w conj(avg), without the cell volume."""
    h = u.grid.spacing
    energy, flux = 0.0, 0.0 + 0.0j
    for edges in edge_differences(u.grid, scenario, u, links):
        offset = np.zeros(u.grid.dimension)
        offset[edges.axis] = h / 2.0
        tail = multiplier.phi(edges.midpoints - offset)
        head = multiplier.phi(edges.midpoints + offset)
        energy += float(np.sum(0.5 * (tail + head) * np.abs(edges.forward) ** 2))
        flux += complex(np.sum((head - tail) / h * edges.forward * np.conj(edges.average)))
    return energy, flux


def _phi_identity(
    u: WaveField,
    scenario: Scenario,
    multiplier: Multiplier,
    operator: HelmholtzOperator,
    which: IdentityKind,
    literal_coefficient: bool,
) -> Tuple[Dict[str, float], Pairing]:
    grid = u.grid
    volume = grid.cell_volume
    phi = multiplier.phi(grid.points)
    energy, flux = _edge_sums(u, scenario, multiplier, operator.links)
    conj_u = np.conj(u.values)

    if which is IdentityKind.IMAGINARY:
        terms = {
            "epsilon": operator.epsilon * float(np.sum(phi * u.density)) * volume,
            "edge_flux": -flux.imag * volume,
        }
        return terms, lambda g: float(np.imag(np.sum(phi * g * conj_u))) * volume

    coefficient = _zeroth_order(scenario, grid.points, literal_coefficient)
    terms = {
        "edge_energy": energy * volume,
        "edge_flux": flux.real * volume,
        "zeroth_order": -float(np.sum(phi * coefficient * u.density)) * volume,
    }
    return terms, lambda g: -float(np.real(np.sum(phi * g * conj_u))) * volume


def _symmetric_identity(
    u: WaveField,
    scenario: Scenario,
    multiplier: Multiplier,
    operator: HelmholtzOperator,
) -> Tuple[Dict[str, float], Pairing]:
    grid = u.grid
    volume = grid.cell_volume
    points = grid.points
    values = u.values
    conj_u = np.conj(values)

    gradient = magnetic_gradient(grid, scenario, u).components
    grad_psi = multiplier.grad_psi(points)
    hessian = multiplier.hessian_psi(points)
    laplacian = multiplier.laplacian_psi(points)
    grad_laplacian = multiplier.grad_laplacian_psi(points)
    # grad psi . conj(grad_b u)
    transport = np.einsum("pk,pk->p", grad_psi, np.conj(gradient))
    potential = scenario.potential(points)

    terms = {
        "hessian": float(np.real(np.einsum("pj,pjk,pk->", gradient, hessian, np.conj(gradient)))),
        "grad_laplacian": 0.5 * float(np.real(np.sum(np.einsum("pk,pk->p", grad_laplacian, gradient) * conj_u))),
        "epsilon": operator.epsilon * float(np.imag(np.sum(transport * values))),
        "magnetic": 0.0,
        "q_laplacian": -0.5 * float(np.sum(laplacian * potential * u.density)),
        "q_gradient": -float(np.real(np.sum(potential * conj_u * np.conj(transport)))),
        "long_range": 0.0,
    }
    if scenario.has_magnetic_potential:
        b_matrix = magnetic_field(scenario, points).b_matrix
        # sum_jk d_k psi B_kj (grad_b u)_j conj(u)
        twisted = np.einsum("pk,pkj,pj->p", grad_psi, b_matrix, gradient)
        terms["magnetic"] = float(np.imag(np.sum(twisted * conj_u)))
    long_range = scenario.long_range_field
    if not long_range.is_constant:
        grad_p = field_gradient(long_range, points)
        terms["long_range"] = 0.5 * scenario.lam * float(np.sum(np.sum(grad_p * grad_psi, axis=-1) * u.density))

    terms = {name: value * volume for name, value in terms.items()}

    def pairing(g: NDArray[np.complex128]) -> float:
        paired = np.real(np.sum(g * transport)) + 0.5 * np.real(np.sum(g * laplacian * conj_u))
        return -float(paired) * volume

    return terms, pairing


def identity_residual(
    u: WaveField,
    f: WaveField,
    scenario: Scenario,
    multiplier: Optional[Multiplier] = None,
    which: Union[str, IdentityKind] = IdentityKind.IMAGINARY,
    tol: float = DEFAULT_CONSISTENCY_TOL,
    literal_coefficient: bool = False,
    epsilon: Optional[float] = None,
) -> IdentityResidual:
    """
    Evaluate one identity on a solution pair.

    Args:
        u: the solution
        f: the source, A u = f up to `tol`
        scenario: the problem the pair solves
        multiplier: phi for the real and imaginary identities, psi for the symmetric one; phi defaults to 1
        which: sym_4_3, real_4_11, imag_4_2, apriori_a or apriori_b ("symmetric", "real" and "imaginary" also work)
        tol: consistency tolerance on ||A u - f|| / ||f||
        literal_coefficient: use lambda + p_tilde + Q instead of lambda (1 + p_tilde) + Q as zeroth-order coefficient
        epsilon: absorption of the pair, defaults to `scenario.epsilon`

    Raises:
        PreconditionError: (u, f) is not consistent, or the multiplier lacks the needed part
    """
    which = IdentityKind(which)
    if which in (IdentityKind.APRIORI_A, IdentityKind.APRIORI_B):
        first, second = apriori_check(u, f, scenario, epsilon=epsilon, tol=tol, literal_coefficient=literal_coefficient)
        return first if which is IdentityKind.APRIORI_A else second

    operator = check_consistency(u, f, scenario, epsilon=epsilon, tol=tol)
    multiplier = PhiConstant(u.grid.dimension) if multiplier is None else multiplier
    if which is IdentityKind.SYMMETRIC:
        if not multiplier.has_psi:
            raise PreconditionError(f"the {which.value} identity needs a psi multiplier, got {multiplier.kind.value}")
        terms, pairing = _symmetric_identity(u, scenario, multiplier, operator)
    else:
        if not multiplier.has_phi:
            raise PreconditionError(f"the {which.value} identity needs a phi multiplier, got {multiplier.kind.value}")
        terms, pairing = _phi_identity(u, scenario, multiplier, operator, which, literal_coefficient)

    lhs = float(sum(terms.values()))
    rhs = pairing(f.values)
    norm_product = f.norm() * u.norm()
    result = IdentityResidual(
        which=which,
        lhs=lhs,
        rhs=rhs,
        rel_residual=relative_residual(lhs, rhs, norm_product),
        spacing=u.grid.spacing,
        norm_product=norm_product,
        terms=terms,
        direct=pairing(operator.matvec(u.values)),
    )
    logger.debug(
        f"{which.value} identity with {multiplier.kind.value}: rel_residual={result.rel_residual:.3e}, "
        f"accounting gap {result.accounting_gap:.3e}"
    )
    return result


def apriori_check(
    u: WaveField,
    f: WaveField,
    scenario: Scenario,
    epsilon: Optional[float] = None,
    tol: float = DEFAULT_CONSISTENCY_TOL,
    literal_coefficient: bool = False,
) -> Tuple[IdentityResidual, IdentityResidual]:
    """
    The a-priori pair
        eps sum |u|^2 <= sum |f||u|,        sum_edges |grad_b u|^2 <= sum (c)_+ |u|^2 + sum |f||u|.

    Raises:
        PreconditionError: (u, f) is not consistent
    """
    operator = check_consistency(u, f, scenario, epsilon=epsilon, tol=tol)
    grid = u.grid
    volume = grid.cell_volume
    norm_product = f.norm() * u.norm()
    cross = float(np.sum(np.abs(f.values) * np.abs(u.values))) * volume

    damping = operator.epsilon * float(np.sum(u.density)) * volume
    energy = sum(float(np.sum(np.abs(e.forward) ** 2)) for e in edge_differences(grid, scenario, u, operator.links))
    coefficient = np.maximum(_zeroth_order(scenario, grid.points, literal_coefficient), 0.0)
    bound = float(np.sum(coefficient * u.density)) * volume + cross

    results = (
        IdentityResidual(
            which=IdentityKind.APRIORI_A,
            lhs=damping,
            rhs=cross,
            rel_residual=relative_residual(damping, cross, norm_product),
            spacing=grid.spacing,
            norm_product=norm_product,
            terms={"epsilon": damping},
        ),
        IdentityResidual(
            which=IdentityKind.APRIORI_B,
            lhs=energy * volume,
            rhs=bound,
            rel_residual=relative_residual(energy * volume, bound, norm_product),
            spacing=grid.spacing,
            norm_product=norm_product,
            terms={"edge_energy": energy * volume},
        ),
    )
    for result in results:
        if result.violated(tol):
            logger.warning(f"a-priori estimate {result.which.value} violated: slack {result.slack:.3e}")
    return results
