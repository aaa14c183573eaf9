"""Periodic space-time grids shared by the kernel, noise and solver modules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _as_tuple(value, dim, cast):
    if np.isscalar(value):
        return (cast(value),) * dim
    out = tuple(cast(v) for v in value)
    if len(out) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L)^d with an optional uniform time mesh.

    Spatial nodes are x_m = m * dx per axis; the discrete frequencies are
    xi_k = 2*pi*k/L for k in {-N/2, ..., N/2 - 1}, stored in FFT order.
    ``points`` must be even per axis (powers of two keep the FFTs fast).
    """

    dim: int
    extent: tuple[float, ...]
    points: tuple[int, ...]
    dt: float = 1.0
    steps: int = 1

    def __init__(self, extent, points, dim=None, dt=1.0, steps=1):
        if dim is None:
            dim = 1 if np.isscalar(extent) else len(extent)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "extent", _as_tuple(extent, self.dim, float))
        object.__setattr__(self, "points", _as_tuple(points, self.dim, int))
        object.__setattr__(self, "dt", float(dt))
        object.__setattr__(self, "steps", int(steps))
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        for L in self.extent:
            if L <= 0:
                raise ValueError("extent must be positive")
        for n in self.points:
            if n < 2 or n % 2 != 0:
                raise ValueError("points must be even and >= 2 per axis")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def horizon(self) -> float:
        return self.dt * self.steps

    def axis_coords(self, axis: int = 0) -> np.ndarray:
        n = self.points[axis]
        return np.arange(n) * self.dx[axis]

    def axis_freqs(self, axis: int = 0) -> np.ndarray:
        """Angular frequencies 2*pi*k/L in FFT order for one axis."""
        n = self.points[axis]
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.dx[axis])

    @cached_property
    def freq_radius(self) -> np.ndarray:
        """|xi| on the full frequency lattice, shape ``points``."""
        axes = [self.axis_freqs(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(m**2 for m in mesh))

    @cached_property
    def freq_vectors(self) -> np.ndarray:
        """Frequency vectors stacked on a trailing axis, shape ``points + (dim,)``."""
        axes = [self.axis_freqs(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @property
    def nyquist(self) -> tuple[float, ...]:
        return tuple(np.pi * n / L for L, n in zip(self.extent, self.points))

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt
