"""Built-in coefficient and initial-data expressions with declared constants.

The solver takes drift and diffusion coefficients from this closed table so
that every coefficient ships with an honest spatial Lipschitz constant; the
dataclasses are picklable and safe to send to worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

COEFFICIENT_KINDS = ("zero", "const", "linear", "sin", "tanh")


@dataclass(frozen=True)
class Coefficient:
    """Scalar coefficient (t, u) -> value, applied pointwise in space.

    kinds: ``zero``; ``const`` (value ``scale``); ``linear`` = scale*u;
    ``sin`` = scale*sin(u); ``tanh`` = scale*tanh(u).  The declared
    Lipschitz constant is exact for each kind.
    """

    kind: str
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise PreconditionError(
                f"unknown coefficient kind '{self.kind}'; choose one of {COEFFICIENT_KINDS}"
            )

    def __call__(self, t, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "const":
            return np.full_like(u, self.scale)
        if self.kind == "linear":
            return self.scale * u
        if self.kind == "sin":
            return self.scale * np.sin(u)
        return self.scale * np.tanh(u)

    @property
    def lipschitz(self) -> float:
        if self.kind in ("zero", "const"):
            return 0.0
        return abs(self.scale)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind in ("const", "linear", "sin", "tanh") and self.scale == 0.0)

    @property
    def is_state_independent(self) -> bool:
        """True when the coefficient does not depend on u (additive case)."""
        return self.kind in ("zero", "const") or self.is_zero


def coefficient(kind: str, scale: float = 1.0) -> Coefficient:
    return Coefficient(kind=kind, scale=scale)


@dataclass(frozen=True)
class InitialData:
    """Bounded deterministic initial datum on the periodic domain.

    kinds: ``const`` (level ``value``) and ``bump`` (Gaussian bump of
    amplitude ``value``, center ``center``, width ``width`` per axis).
    """

    kind: str = "const"
    value: float = 1.0
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "bump"):
            raise PreconditionError(f"unknown initial-data kind '{self.kind}'")
        if self.kind == "bump" and self.width <= 0:
            raise PreconditionError("bump width must be positive")

    @property
    def sup_norm(self) -> float:
        return abs(self.value)

    def field(self, grid) -> np.ndarray:
        if self.kind == "const":
            return np.full(grid.shape, float(self.value))
        axes = [grid.axis_coords(a) for a in range(grid.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        r2 = np.zeros(grid.shape)
        for coords, L in zip(mesh, grid.extent):
            delta = coords - self.center
            delta = np.minimum(np.abs(delta), L - np.abs(delta))  # periodic distance
            r2 = r2 + delta**2
        return self.value * np.exp(-r2 / (2.0 * self.width**2))


def initial_data(kind: str = "const", value: float = 1.0, center: float = 0.0, width: float = 1.0) -> InitialData:
    return InitialData(kind=kind, value=value, center=center, width=width)


def validate_lipschitz(coeff: Coefficient, n_samples: int = 1000, seed: int = 20210907) -> None:
    """Spot-check the declared Lipschitz constant on random argument pairs."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 10.0, n_samples)
    x = rng.uniform(-50.0, 50.0, n_samples)
    y = rng.uniform(-50.0, 50.0, n_samples)
    lhs = np.abs(np.asarray(coeff(t, x)) - np.asarray(coeff(t, y)))
    rhs = coeff.lipschitz * np.abs(x - y)
    bad = lhs > rhs * (1.0 + 1e-12) + 1e-12
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PreconditionError(
            f"coefficient '{coeff.kind}' violates its declared Lipschitz "
            f"constant {coeff.lipschitz} at u = ({x[i]}, {y[i]})"
        )
