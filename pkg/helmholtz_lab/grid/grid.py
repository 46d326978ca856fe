import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from helmholtz_lab.errors import ResourceLimitError

logger = logging.getLogger(__name__)

MIN_POINTS_PER_AXIS = 16
DEFAULT_MAX_NODES = 2**25
RESOLUTION_WARNING_THRESHOLD = 0.2


@dataclass(frozen=True)
class Grid:
    """
    Structured box grid on [-L, L]^d with N points per axis.

    Nodes sit at x_i = (i - (N - 1)/2) h with h = 2L/(N - 1). For odd N this would put a node at the origin, so the
    whole lattice is shifted by h/2 (`origin_offset`). Every node therefore has |x| >= h/2. Node arrays are flattened
    in row-major (C) order over the axes (x1, ..., xd).
    """

    dimension: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"Invalid dimension: {self.dimension}")
        if self.points_per_axis < MIN_POINTS_PER_AXIS:
            raise ValueError(f"points_per_axis must be at least {MIN_POINTS_PER_AXIS}, got {self.points_per_axis}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    @property
    def origin_offset(self) -> bool:
        return self.points_per_axis % 2 == 1

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def num_nodes(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @cached_property
    def axis(self) -> NDArray[np.float64]:
        """Node coordinates along one axis."""
        h = self.spacing
        coords = (np.arange(self.points_per_axis) - (self.points_per_axis - 1) / 2.0) * h
        if self.origin_offset:
            coords = coords + h / 2.0
        return coords

    @cached_property
    def points(self) -> NDArray[np.float64]:
        """Node coordinates, shape (num_nodes, d)."""
        mesh = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def radii(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.points, axis=-1)

    @cached_property
    def directions(self) -> NDArray[np.float64]:
        """x/|x| per node, shape (num_nodes, d)."""
        return self.points / self.radii[:, None]

    def reshape(self, values: NDArray) -> NDArray:
        """View flat node values (num_nodes, ...) as an array of shape (N, ..., N, ...)."""
        return values.reshape(self.shape + values.shape[1:])

    def shell_mask(self, r_lo: float, r_hi: Optional[float] = None) -> NDArray[np.bool_]:
        """Nodes with r_lo <= |x| <= r_hi (r_hi defaults to infinity)."""
        mask = self.radii >= r_lo
        if r_hi is not None:
            mask &= self.radii <= r_hi
        return mask

    def integrate(self, density: NDArray, mask: Optional[NDArray[np.bool_]] = None) -> float:
        """Midpoint sum h^d * sum(density) over the (masked) nodes."""
        values = density if mask is None else density[mask]
        return float(np.sum(values) * self.cell_volume)

    def check_resolution(self, lam: float) -> bool:
        """Warn when h * sqrt(lambda) exceeds 0.2 (fewer than ~30 nodes per wavelength)."""
        ratio = self.spacing * math.sqrt(lam)
        if ratio > RESOLUTION_WARNING_THRESHOLD:
            logger.warning(
                f"Grid resolution h*sqrt(lambda) = {ratio:.3f} exceeds {RESOLUTION_WARNING_THRESHOLD} "
                f"(about {2 * math.pi / ratio:.1f} nodes per wavelength)"
            )
            return False
        return True


def build_grid(dimension: int, half_width: float, points_per_axis: int, max_nodes: Optional[int] = None) -> Grid:
    """
    Build a staggered box grid.

    Args:
        dimension: d in {2, 3}
        half_width: L, the box is [-L, L]^d
        points_per_axis: N >= 16
        max_nodes: node budget, defaults to 2^25

    Raises:
        ValueError: invalid dimension or N < 16
        ResourceLimitError: N^d beyond the node budget
    """
    budget = DEFAULT_MAX_NODES if max_nodes is None else max_nodes
    if points_per_axis**dimension > budget:
        raise ResourceLimitError(
            f"grid of {points_per_axis}^{dimension} = {points_per_axis**dimension} nodes exceeds the budget of "
            f"{budget} nodes"
        )
    return Grid(dimension=dimension, half_width=float(half_width), points_per_axis=int(points_per_axis))


@dataclass
class WaveField:
    """
    Complex node values of a field on a grid (a solution u or a source f).
    """

    values: NDArray[np.complex128]
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128).ravel()
        if self.values.shape[0] != self.grid.num_nodes:
            raise ValueError(
                f"WaveField has {self.values.shape[0]} values but the grid has {self.grid.num_nodes} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("WaveField values must be finite")

    @classmethod
    def zeros(cls, grid: Grid) -> "WaveField":
        return cls(np.zeros(grid.num_nodes, dtype=np.complex128), grid)

    @property
    def density(self) -> NDArray[np.float64]:
        """|u|^2 per node."""
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        """Discrete L2 norm (h^d sum |u|^2)^(1/2)."""
        return math.sqrt(self.grid.integrate(self.density))


@dataclass
class GradientField:
    """
    d complex components per node, e.g. the magnetic gradient of a `WaveField`.

    `interior` marks nodes whose stencil stays inside the box (one-cell margin); values on the outer ring use the
    homogeneous Dirichlet ghost nodes.
    """

    components: NDArray[np.complex128]
    grid: Grid

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=np.complex128)
        expected = (self.grid.num_nodes, self.grid.dimension)
        if self.components.shape != expected:
            raise ValueError(f"GradientField components must have shape {expected}, got {self.components.shape}")
        if not np.all(np.isfinite(self.components)):
            raise ValueError("GradientField components must be finite")

    @cached_property
    def interior(self) -> NDArray[np.bool_]:
        index = np.indices(self.grid.shape).reshape(self.grid.dimension, -1)
        last = self.grid.points_per_axis - 1
        return np.all((index > 0) & (index < last), axis=0)

    @property
    def density(self) -> NDArray[np.float64]:
        """|g|^2 per node, summed over components."""
        return np.sum(np.abs(self.components) ** 2, axis=-1)
