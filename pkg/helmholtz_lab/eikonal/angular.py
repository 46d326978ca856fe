"""
Angular grids on the unit circle (d = 2) and the unit sphere (d = 3), with spectral angular derivatives.

The sphere uses a shifted latitude-longitude grid, theta_i = (i + 1/2) pi / M_theta and phi_k = 2 pi k / M_phi, so no
row sits on a pole. Polar derivatives are taken on the double Fourier sphere: a field is continued to theta in
[pi, 2 pi) by g(2 pi - theta, phi + pi), which makes it smooth and 2 pi-periodic in theta.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

MIN_ANGLES = 32


def _spectral_derivative(values: NDArray, axis: int) -> NDArray:
    """Derivative of a 2 pi-periodic sampled function along `axis`, Nyquist mode dropped."""
    size = values.shape[axis]
    wavenumbers = np.fft.fftfreq(size, d=1.0 / size)
    if size % 2 == 0:
        wavenumbers[size // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = size
    spectrum = np.fft.fft(values, axis=axis) * (1j * wavenumbers.reshape(shape))
    return np.real(np.fft.ifft(spectrum, axis=axis))


def double_sphere_extension(values: NDArray) -> NDArray:
    """
    Continue samples (..., M_theta, M_phi) to (..., 2 M_theta, M_phi) with row M_theta + i holding the values of
    row M_theta - 1 - i rotated by half a turn in longitude.
    """
    polar, azimuthal = values.shape[-2:]
    mirrored = np.roll(values[..., ::-1, :], -(azimuthal // 2), axis=-1)
    return np.concatenate([values, mirrored], axis=-2)


@dataclass(frozen=True)
class AngularGrid:
    """
    Directions on which g = K/|x| is marched.

    Args:
        dimension: 2 (M equispaced angles) or 3 (M_theta x M_phi shifted latitude-longitude grid)
        angles: M for d = 2, M_phi (longitudes) for d = 3
        polar_angles: M_theta for d = 3, defaults to angles // 2
    """

    dimension: int
    angles: int
    polar_angles: Optional[int] = None

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"Invalid dimension: {self.dimension}")
        if self.angles < MIN_ANGLES or self.angles % 2:
            raise ValueError(f"angles must be an even number >= {MIN_ANGLES}, got {self.angles}")
        if self.dimension == 3:
            polar = self.angles // 2 if self.polar_angles is None else self.polar_angles
            if polar < MIN_ANGLES // 2:
                raise ValueError(f"polar_angles must be at least {MIN_ANGLES // 2}, got {polar}")
            object.__setattr__(self, "polar_angles", int(polar))
        elif self.polar_angles is not None:
            raise ValueError("polar_angles only applies to d = 3")

    @property
    def shape(self) -> Tuple[int, ...]:
        if self.dimension == 2:
            return (self.angles,)
        return (self.polar_angles, self.angles)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def theta(self) -> NDArray[np.float64]:
        """Polar angle of each row (d = 3) or the circle angle (d = 2)."""
        if self.dimension == 2:
            return 2.0 * np.pi * np.arange(self.angles) / self.angles
        return (np.arange(self.polar_angles) + 0.5) * np.pi / self.polar_angles

    @cached_property
    def phi(self) -> NDArray[np.float64]:
        if self.dimension == 2:
            raise AttributeError("a circle grid has no longitude")
        return 2.0 * np.pi * np.arange(self.angles) / self.angles

    @cached_property
    def directions(self) -> NDArray[np.float64]:
        """Unit vectors, shape (*shape, d)."""
        if self.dimension == 2:
            return np.stack([np.cos(self.theta), np.sin(self.theta)], axis=-1)
        theta, phi = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)

    @cached_property
    def frame(self) -> Tuple[NDArray[np.float64], ...]:
        """Unit tangent vectors: (e_theta,) for d = 2, (e_theta, e_phi) for d = 3."""
        if self.dimension == 2:
            return (np.stack([-np.sin(self.theta), np.cos(self.theta)], axis=-1),)
        theta, phi = np.meshgrid(self.theta, self.phi, indexing="ij")
        e_theta = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=-1)
        e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
        return e_theta, e_phi

    def derivatives(self, values: NDArray) -> Tuple[NDArray, ...]:
        """
        Orthonormal-frame components of the sphere gradient of samples (..., *shape):
        (g_theta,) for d = 2 and (g_theta, g_phi / sin theta) for d = 3.
        """
        if self.dimension == 2:
            return (_spectral_derivative(values, axis=-1),)
        polar = self.polar_angles
        g_theta = _spectral_derivative(double_sphere_extension(values), axis=-2)[..., :polar, :]
        g_phi = _spectral_derivative(values, axis=-1) / np.sin(self.theta)[:, None]
        return g_theta, g_phi

    def gradient_norm_sq(self, values: NDArray) -> NDArray:
        """|grad_omega g|^2 per sample."""
        return sum(component**2 for component in self.derivatives(values))

    def tangential_gradient(self, values: NDArray) -> NDArray:
        """grad_omega g as Cartesian vectors, shape (..., *shape, d)."""
        return sum(component[..., None] * unit for component, unit in zip(self.derivatives(values), self.frame))

    def locate(self, directions: NDArray) -> Tuple[NDArray, ...]:
        """Angles of unit vectors (..., d): (theta in [0, 2 pi),) or (theta in [0, pi], phi in [0, 2 pi))."""
        if self.dimension == 2:
            return (np.mod(np.arctan2(directions[..., 1], directions[..., 0]), 2.0 * np.pi),)
        theta = np.arccos(np.clip(directions[..., 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(directions[..., 1], directions[..., 0]), 2.0 * np.pi)
        return theta, phi


def build_angular_grid(dimension: int, angles: int = 64, polar_angles: Optional[int] = None) -> AngularGrid:
    return AngularGrid(dimension=dimension, angles=angles, polar_angles=polar_angles)
