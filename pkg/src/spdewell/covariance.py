"""Spatial covariance structures of the noise, given by spectral densities.

The covariance pairing of two test functions equals the integral of
``F(phi) * conj(F(psi))`` against the spectral measure.  Under the fixed
Fourier convention (forward transform without prefactor) white noise has the
flat density ``(2*pi)**-d``; every measure here is absolutely continuous
with a nonnegative density carrying power-law metadata at the origin and at
infinity that drives the quadrature and synthesis modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import PreconditionError
from .grids import Grid

_SLOPE_FACTOR = 10.0  # declared-vs-measured exponent tolerance (value ratio)
_TAIL_PROBE = 1e3
_ORIGIN_PROBE = 1e-3


# ---------------------------------------------------------------------------
# built-in radial density profiles (picklable, usable from worker processes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerDensity:
    """amplitude * |xi|**exponent"""

    amplitude: float = 1.0
    exponent: float = 0.0

    def __call__(self, r):
        if isinstance(r, (int, float)):
            if r == 0 and self.exponent < 0:
                return math.inf
            return self.amplitude * r**self.exponent
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.amplitude * r**self.exponent


@dataclass(frozen=True)
class ConstantDensity:
    amplitude: float = 1.0

    def __call__(self, r):
        if isinstance(r, (int, float)):
            return self.amplitude
        r = np.asarray(r, dtype=float)
        return np.full(r.shape, self.amplitude)


@dataclass(frozen=True)
class RationalDensity:
    """amplitude / (1 + |xi|)**decay"""

    amplitude: float = 1.0
    decay: float = 0.0

    def __call__(self, r):
        if isinstance(r, (int, float)):
            return self.amplitude / (1.0 + r) ** self.decay
        r = np.asarray(r, dtype=float)
        return self.amplitude / (1.0 + r) ** self.decay


@dataclass(frozen=True)
class GaussianDensity:
    """amplitude * exp(-scale * |xi|^2)"""

    amplitude: float = 1.0
    scale: float = 1.0

    def __call__(self, r):
        if isinstance(r, (int, float)):
            return self.amplitude * math.exp(-self.scale * r * r)
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-self.scale * r**2)


DENSITY_TABLE = {
    "power": PowerDensity,
    "constant": ConstantDensity,
    "rational": RationalDensity,
    "gaussian": GaussianDensity,
}


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralMeasure:
    """Absolutely continuous spectral measure with density rho(xi) >= 0.

    ``origin_exponent`` is a with rho ~ |xi|**-a near 0 (0 when bounded; must
    stay below the dimension for local integrability); ``tail_exponent`` is b
    with rho = O(|xi|**-b) at infinity (``math.inf`` marks super-power decay).
    """

    dim: int
    profile: Callable[[np.ndarray], np.ndarray]
    origin_exponent: float
    tail_exponent: float
    family_tag: str = "custom"
    is_radial: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.origin_exponent >= self.dim:
            raise ValueError(
                f"origin exponent {self.origin_exponent} >= dim {self.dim}: "
                "the measure is not locally finite"
            )

    def radial_density(self, r):
        if not self.is_radial:
            raise ValueError("measure is not radial; evaluate on frequency vectors")
        return self.profile(np.asarray(r, dtype=float))

    def density(self, xi):
        """Density at frequency vectors (trailing axis holds components)."""
        xi = np.asarray(xi, dtype=float)
        vector_shaped = xi.ndim > 0 and xi.shape[-1] == self.dim
        if not vector_shaped and self.dim != 1:
            raise ValueError(f"expected trailing axis of size {self.dim}")
        if self.is_radial:
            r = np.sqrt((xi**2).sum(axis=-1)) if vector_shaped else np.abs(xi)
            return self.profile(r)
        if not vector_shaped:
            xi = xi[..., None]
        return self.profile(xi)

    # -- grid support ------------------------------------------------------

    def cell_average(self, grid: Grid) -> float:
        """Average of the density over the fundamental frequency cell.

        The cell is the cube of side 2*pi/L around the origin; a singular
        origin (Riesz type) is still locally integrable, so the average is
        finite and gives an unbiased torus weight for the zero mode.
        """
        half = tuple(math.pi / L for L in grid.extent)
        if not self.is_radial:
            return _cube_average_directional(self.density, self.dim, half)
        return _cube_average_radial(self.profile, self.dim, half, self.origin_exponent)

    def grid_weights(self, grid: Grid, zero_mode: str = "cell_average") -> np.ndarray:
        """Density sampled on the grid frequency lattice.

        The origin node gets the cell average of the density (or 0.0 with
        ``zero_mode='zero'``); an infinite value at any other node means the
        lattice hits a singularity and the grid must be shifted or resized.
        """
        if self.is_radial:
            weights = self.profile(grid.freq_radius).astype(float)
        else:
            weights = self.density(grid.freq_vectors).astype(float)
        origin = (0,) * grid.dim
        if zero_mode == "cell_average":
            weights[origin] = self.cell_average(grid)
        elif zero_mode == "zero":
            weights[origin] = 0.0
        else:
            raise ValueError(f"unknown zero_mode '{zero_mode}'")
        if not np.all(np.isfinite(weights)):
            raise PreconditionError(
                "spectral density is not finite at a nonzero grid frequency; "
                "shift or refine the grid"
            )
        if weights.min() < 0:
            raise PreconditionError("spectral density must be nonnegative")
        return weights


def _cube_average_radial(profile, dim, half, origin_exponent):
    h = min(half)
    cell_volume = float(np.prod([2.0 * hh for hh in half]))

    def radial_piece(rmax):
        # integral of rho(r) r^(d-1) over (0, rmax), singularity-aware
        expo = dim - 1 - origin_exponent  # > -1 by local integrability
        if expo < 0:
            m = min(50, max(1, math.ceil(2.0 / (1.0 + expo))))
            val, _ = quad(
                lambda u: float(profile(u**m)) * u ** (m * (dim - 1)) * m * u ** (m - 1),
                0.0,
                rmax ** (1.0 / m),
                limit=200,
            )
        else:
            val, _ = quad(lambda r: float(profile(r)) * r ** (dim - 1), 0.0, rmax, limit=200)
        return val

    if dim == 1:
        total = 2.0 * radial_piece(half[0])
        return total / cell_volume
    if dim == 2:
        # polar decomposition of the square: R(theta) = h / max(|cos|, |sin|)
        thetas = (np.arange(256) + 0.5) * (2.0 * math.pi / 256)
        total = 0.0
        for th in thetas:
            rmax = h / max(abs(math.cos(th)), abs(math.sin(th)))
            total += radial_piece(rmax)
        total *= 2.0 * math.pi / 256
        return total / cell_volume
    if dim == 3:
        from numpy.polynomial.legendre import leggauss

        uu, wu = leggauss(24)
        phis = (np.arange(48) + 0.5) * (2.0 * math.pi / 48)
        total = 0.0
        for u, w in zip(uu, wu):
            st = math.sqrt(max(0.0, 1.0 - u * u))
            for ph in phis:
                omega = (st * math.cos(ph), st * math.sin(ph), u)
                rmax = h / max(abs(c) for c in omega)
                total += w * radial_piece(rmax)
        total *= 2.0 * math.pi / 48
        return total / cell_volume
    raise PreconditionError("cell averages supported for dim <= 3 only")


def _cube_average_directional(density, dim, half):
    # midpoint tensor rule; non-radial customs are assumed bounded near 0
    n = 33
    axes = [np.linspace(-hh, hh, n) for hh in half]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return float(np.mean(density(mesh)))


# ---------------------------------------------------------------------------
# catalogue
# ---------------------------------------------------------------------------

def riesz_measure(dim: int, lam: float) -> SpectralMeasure:
    """Riesz covariance: spectral density |xi|**(lam - d), 0 < lam < d."""
    if not 0.0 < lam < dim:
        raise PreconditionError(f"Riesz exponent must lie in (0, {dim}), got {lam}")
    return SpectralMeasure(
        dim=dim,
        profile=PowerDensity(amplitude=1.0, exponent=lam - dim),
        origin_exponent=dim - lam,
        tail_exponent=dim - lam,
        family_tag="riesz",
    )


def white_noise_measure(dim: int) -> SpectralMeasure:
    """Delta covariance: flat density (2*pi)**-d under the fixed convention."""
    if dim < 1:
        raise PreconditionError("dim must be >= 1")
    return SpectralMeasure(
        dim=dim,
        profile=ConstantDensity(amplitude=(2.0 * math.pi) ** (-dim)),
        origin_exponent=0.0,
        tail_exponent=0.0,
        family_tag="white",
    )


def sobolev_bound_measure(dim: int, k: float, c: float = 1.0) -> SpectralMeasure:
    """Envelope density C/(1+|xi|)**k of a covariance with k integrable derivatives."""
    if k < 0:
        raise PreconditionError("k must be >= 0")
    if c <= 0:
        raise PreconditionError("C must be positive")
    return SpectralMeasure(
        dim=dim,
        profile=RationalDensity(amplitude=c, decay=k),
        origin_exponent=0.0,
        tail_exponent=k,
        family_tag="sobolev",
    )


def custom_measure(
    density,
    dim: int,
    origin_exponent: float = 0.0,
    tail_exponent: float = 0.0,
    is_radial: bool = True,
    family_tag: str = "custom",
) -> SpectralMeasure:
    """Wrap a user density after validating the declared exponent metadata.

    The density is probed for nonnegativity on random frequencies and the
    local log-slopes at |xi| ~ 1e-3 and |xi| ~ 1e3 are compared with the
    declared origin/tail exponents (the value ratio must stay within a
    factor of 10).  A ``tail_exponent`` of ``math.inf`` declares super-power
    decay and is checked as such.
    """
    measure = SpectralMeasure(
        dim=dim,
        profile=density,
        origin_exponent=origin_exponent,
        tail_exponent=tail_exponent,
        family_tag=family_tag,
        is_radial=is_radial,
    )
    rng = np.random.default_rng(1315423911)
    radii = np.concatenate([10.0 ** rng.uniform(-3, 3, 64), [_ORIGIN_PROBE, _TAIL_PROBE]])
    if is_radial:
        samples = np.asarray(density(radii), dtype=float)
    else:
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        samples = np.asarray(density(radii[:, None] * direction[None, :]), dtype=float)
    if np.any(samples < 0) or not np.all(np.isfinite(samples)):
        raise PreconditionError("custom density must be finite and nonnegative away from 0")

    def probe(r):
        if is_radial:
            return float(density(np.asarray([r]))[0])
        return float(density((r * direction)[None, :])[0])

    lo1, lo2 = probe(_ORIGIN_PROBE), probe(2.0 * _ORIGIN_PROBE)
    if lo2 > 0:
        ratio = lo1 / (lo2 * 2.0**origin_exponent)
        if not (1.0 / _SLOPE_FACTOR <= ratio <= _SLOPE_FACTOR):
            measured = math.log(lo1 / lo2) / math.log(2.0) if lo1 > 0 else math.inf
            raise PreconditionError(
                f"declared origin exponent {origin_exponent} inconsistent with "
                f"measured local exponent {-measured:.3g} near |xi|={_ORIGIN_PROBE}"
            )
    hi1, hi2 = probe(_TAIL_PROBE), probe(2.0 * _TAIL_PROBE)
    if math.isinf(tail_exponent):
        if hi2 > hi1 * 2.0**-30 and hi1 > 0:
            raise PreconditionError(
                "declared super-power tail, but the density decays slower than "
                f"|xi|**-30 near |xi|={_TAIL_PROBE}"
            )
    elif hi1 > 0:
        ratio = hi2 / (hi1 * 2.0**-tail_exponent)
        if not (1.0 / _SLOPE_FACTOR <= ratio <= _SLOPE_FACTOR):
            measured = math.log(hi1 / hi2) / math.log(2.0) if hi2 > 0 else math.inf
            raise PreconditionError(
                f"declared tail exponent {tail_exponent} inconsistent with "
                f"measured local exponent {measured:.3g} near |xi|={_TAIL_PROBE}"
            )
    return measure
