"""
Discrete magnetic operators on a `Grid`.

The magnetic Laplacian uses Peierls links: the edge from node x to x + h e_j carries U_j = exp(i h b_j(x + h e_j/2)),
and

    (L u)(x) = sum_j [U_j(x) u(x + h e_j) + conj(U_j(x - h e_j)) u(x - h e_j) - 2 u(x)] / h^2.

Values outside the box are homogeneous Dirichlet ghost nodes. Each axis has N + 1 edges per grid line, the first and
the last one connecting to a ghost node.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator

from helmholtz_lab.grid.grid import GradientField, Grid, WaveField
from helmholtz_lab.model.scenario import Scenario

logger = logging.getLogger(__name__)


def _along(axis: int, dimension: int, start: int, stop: int) -> Tuple[slice, ...]:
    """Index tuple selecting `start:stop` along `axis` and everything along the other axes."""
    index = [slice(None)] * dimension
    index[axis] = slice(start, stop)
    return tuple(index)


def _pad_axis(values: NDArray, axis: int) -> NDArray:
    """Add one ghost layer of zeros on both sides of `axis`."""
    widths = [(0, 0)] * values.ndim
    widths[axis] = (1, 1)
    return np.pad(values, widths)


def edge_midpoints(grid: Grid, axis: int) -> NDArray[np.float64]:
    """Midpoints of the N + 1 edges per line along `axis`, shape grid.shape with `axis` of length N + 1, plus (d,)."""
    h = grid.spacing
    edge_coords = grid.axis[0] - h / 2.0 + h * np.arange(grid.points_per_axis + 1)
    axes = [grid.axis] * grid.dimension
    axes[axis] = edge_coords
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def link_phases(grid: Grid, scenario: Scenario, axis: int) -> NDArray[np.complex128]:
    """Peierls factors exp(i h b_axis(midpoint)) on every edge along `axis` (ghost edges included)."""
    midpoints = edge_midpoints(grid, axis)
    if not scenario.has_magnetic_potential:
        return np.ones(midpoints.shape[:-1], dtype=np.complex128)
    return np.exp(1j * grid.spacing * scenario.b[axis](midpoints))


class HelmholtzOperator:
    """
    The discrete operator A = L_b + n + Q + i eps on a grid.

    Args:
        grid: the box grid
        scenario: supplies n, Q, b and the default eps
        epsilon: overrides `scenario.epsilon`; 0 gives the self-adjoint part
    """

    def __init__(self, grid: Grid, scenario: Scenario, epsilon: Optional[float] = None):
        if grid.dimension != scenario.dimension:
            raise ValueError(f"Grid dimension {grid.dimension} does not match scenario dimension {scenario.dimension}")
        self.grid = grid
        self.scenario = scenario
        self.epsilon = scenario.epsilon if epsilon is None else float(epsilon)
        self.links: List[NDArray[np.complex128]] = [link_phases(grid, scenario, j) for j in range(grid.dimension)]
        self.zeroth_order: NDArray[np.float64] = scenario.refraction(grid.points) + scenario.potential(grid.points)

    @property
    def diagonal(self) -> NDArray[np.complex128]:
        h = self.grid.spacing
        return -2.0 * self.grid.dimension / h**2 + self.zeroth_order + 1j * self.epsilon

    def laplacian(self, values: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Matrix-free magnetic Laplacian of flat node values."""
        grid = self.grid
        d, n, h = grid.dimension, grid.points_per_axis, grid.spacing
        u = np.asarray(values, dtype=np.complex128).reshape(grid.shape)

        out = (-2.0 * d) * u
        for j, link in enumerate(self.links):
            padded = _pad_axis(u, j)
            forward = padded[_along(j, d, 2, n + 2)]
            backward = padded[_along(j, d, 0, n)]
            right = link[_along(j, d, 1, n + 1)]
            left = link[_along(j, d, 0, n)]
            out += right * forward + np.conj(left) * backward
        return (out / h**2).ravel()

    def matvec(self, values: NDArray[np.complex128]) -> NDArray[np.complex128]:
        u = np.asarray(values, dtype=np.complex128).ravel()
        return self.laplacian(u) + (self.zeroth_order + 1j * self.epsilon) * u

    def __call__(self, field: WaveField) -> WaveField:
        return WaveField(self.matvec(field.values), self.grid)

    def to_sparse(self) -> sp.csr_matrix:
        """Assemble A as a CSR matrix."""
        grid = self.grid
        d, n, h = grid.dimension, grid.points_per_axis, grid.spacing
        index = np.arange(grid.num_nodes).reshape(grid.shape)

        rows = [index.ravel()]
        cols = [index.ravel()]
        data = [self.diagonal]
        for j, link in enumerate(self.links):
            source = index[_along(j, d, 0, n - 1)].ravel()
            target = index[_along(j, d, 1, n)].ravel()
            inner = link[_along(j, d, 1, n)].ravel() / h**2
            rows += [source, target]
            cols += [target, source]
            data += [inner, np.conj(inner)]

        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(grid.num_nodes, grid.num_nodes),
        )

    def as_linear_operator(self) -> LinearOperator:
        size = self.grid.num_nodes
        return LinearOperator((size, size), matvec=self.matvec, dtype=np.complex128)


def apply_helmholtz_operator(
    grid: Grid,
    scenario: Scenario,
    u: WaveField,
    epsilon: Optional[float] = None,
) -> WaveField:
    """
    Apply (grad + i b)^2 + n + Q + i eps to `u` with homogeneous Dirichlet ghost nodes.
    """
    return HelmholtzOperator(grid, scenario, epsilon=epsilon)(u)


def magnetic_gradient(grid: Grid, scenario: Scenario, u: WaveField) -> GradientField:
    """
    Centered differences plus i b(x) u(x) per component: (u(x + h e_j) - u(x - h e_j)) / (2h) + i b_j(x) u(x).
    """
    d, n, h = grid.dimension, grid.points_per_axis, grid.spacing
    values = u.values.reshape(grid.shape)
    potential = scenario.magnetic_potential(grid.points)

    components = np.empty((grid.num_nodes, d), dtype=np.complex128)
    for j in range(d):
        padded = _pad_axis(values, j)
        centered = (padded[_along(j, d, 2, n + 2)] - padded[_along(j, d, 0, n)]) / (2.0 * h)
        components[:, j] = centered.ravel() + 1j * potential[:, j] * u.values
    return GradientField(components, grid)


def radial_tangential_split(gradient: GradientField) -> Tuple[NDArray[np.complex128], GradientField]:
    """
    Split g into its radial component (x/|x|) . g and its tangential part g - ((x/|x|) . g) x/|x|.
    """
    directions = gradient.grid.directions
    radial = np.sum(directions * gradient.components, axis=-1)
    tangential = gradient.components - radial[:, None] * directions
    return radial, GradientField(tangential, gradient.grid)


@dataclass
class EdgeDifferences:
    """
    Forward differences of `u` on the Peierls edges along one axis (ghost edges included), flattened:
    - midpoints: (E, d) edge midpoints
    - forward: (U u(y) - u(x)) / h
    - average: (u(x) + U u(y)) / 2
    """

    axis: int
    midpoints: NDArray[np.float64]
    forward: NDArray[np.complex128]
    average: NDArray[np.complex128]


def edge_differences(
    grid: Grid,
    scenario: Scenario,
    u: WaveField,
    links: Optional[List[NDArray[np.complex128]]] = None,
) -> List[EdgeDifferences]:
    """
    Forward edge differences of `u` for every axis. These are the quantities for which summation by parts against
    the magnetic Laplacian is exact:

        sum_x phi conj(u) (L u) = sum_edges [-phi_mid |w|^2 - (d phi) w conj(average)]

    holds exactly when phi_mid and d phi are the edge mean and the edge difference of phi.
    """
    d, n, h = grid.dimension, grid.points_per_axis, grid.spacing
    values = u.values.reshape(grid.shape)
    result = []
    for j in range(d):
        link = links[j] if links is not None else link_phases(grid, scenario, j)
        padded = _pad_axis(values, j)
        tail = padded[_along(j, d, 0, n + 1)]
        head = padded[_along(j, d, 1, n + 2)]
        midpoints = edge_midpoints(grid, j).reshape(-1, d)
        result.append(
            EdgeDifferences(
                axis=j,
                midpoints=midpoints,
                forward=((link * head - tail) / h).ravel(),
                average=((tail + link * head) / 2.0).ravel(),
            )
        )
    return result


def diamagnetic_gap(grid: Grid, scenario: Scenario, u: WaveField) -> float:
    """
    h^d sum_edges |grad |u||^2 - h^d sum_edges |grad_b u|^2 on the Peierls edges. Non-positive up to round-off, by
    the triangle inequality ||U u(y)| - |u(x)|| <= |U u(y) - u(x)|.
    """
    modulus = WaveField(np.abs(u.values).astype(np.complex128), grid)
    free = scenario.with_updates(b=())
    plain = edge_differences(grid, free, modulus)
    magnetic = edge_differences(grid, scenario, u)
    plain_energy = sum(float(np.sum(np.abs(e.forward) ** 2)) for e in plain)
    magnetic_energy = sum(float(np.sum(np.abs(e.forward) ** 2)) for e in magnetic)
    return (plain_energy - magnetic_energy) * grid.cell_volume


def gaussian_bump(
    grid: Grid,
    center: Optional[NDArray] = None,
    width: float = 1.0,
    wavevector: Optional[NDArray] = None,
) -> WaveField:
    """exp(-|x - c|^2 / (2 width^2)) exp(i k.x) sampled on the grid."""
    center = np.zeros(grid.dimension) if center is None else np.asarray(center, dtype=np.float64)
    wavevector = np.zeros(grid.dimension) if wavevector is None else np.asarray(wavevector, dtype=np.float64)
    offset = grid.points - center
    envelope = np.exp(-np.sum(offset**2, axis=-1) / (2.0 * width**2))
    return WaveField(envelope * np.exp(1j * grid.points @ wavevector), grid)
