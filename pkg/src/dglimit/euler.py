"""State algebra, fluxes and constraint functionals for the Euler equations.

Every function here is vectorized: a state is an array whose last axis is
``[rho, m_1, ..., m_d, E]`` with ``d`` in ``{1, 2}``, and any leading axes are
treated as a batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np


class DegenerateStateError(ValueError):
    """Raised when a state makes an operation numerically undefined."""


@dataclass(frozen=True)
class GasParams:
    gamma: float = 1.4
    rho_min: float = 1e-11
    p_min: float = 1e-11
    sigma_min: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.rho_min < 0 or self.p_min < 0:
            raise ValueError("density and pressure floors must be nonnegative")


class ConstraintKind(enum.Enum):
    DENSITY = "density"
    PRESSURE = "pressure"
    MIN_ENTROPY = "entropy"


@dataclass(frozen=True)
class ConstraintSpec:
    kind: ConstraintKind
    bound: float

    def __post_init__(self):
        if not np.isfinite(self.bound):
            raise ValueError("constraint bound must be finite")

    @classmethod
    def density(cls, gp: GasParams) -> "ConstraintSpec":
        return cls(ConstraintKind.DENSITY, gp.rho_min)

    @classmethod
    def pressure(cls, gp: GasParams) -> "ConstraintSpec":
        return cls(ConstraintKind.PRESSURE, gp.p_min)

    @classmethod
    def min_entropy(cls, gp: GasParams) -> "ConstraintSpec":
        if gp.sigma_min is None:
            raise ValueError("GasParams.sigma_min is not set")
        return cls(ConstraintKind.MIN_ENTROPY, gp.sigma_min)


def positivity_specs(gp: GasParams) -> list[ConstraintSpec]:
    """Density then pressure: the positivity-preserving constraint set."""
    return [ConstraintSpec.density(gp), ConstraintSpec.pressure(gp)]


def all_specs(gp: GasParams) -> list[ConstraintSpec]:
    """Density, pressure and (when ``gp.sigma_min`` is set) minimum entropy,
    in the order they must be enforced."""
    specs = positivity_specs(gp)
    if gp.sigma_min is not None:
        specs.append(ConstraintSpec.min_entropy(gp))
    return specs


def _split(u):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] not in (3, 4):
        raise ValueError(f"state must have 3 or 4 components, got {u.shape[-1]}")
    return u[..., 0], u[..., 1:-1], u[..., -1]


def _internal(rho, m, E):
    return E - 0.5 * np.sum(m * m, axis=-1) / rho


def pressure(u, gp: GasParams):
    """Pressure ``(gamma - 1) (E - |m|^2 / (2 rho))``; negative values are
    returned as-is for inadmissible states."""
    rho, m, E = _split(u)
    if np.any(rho == 0):
        raise DegenerateStateError("pressure undefined at zero density")
    return (gp.gamma - 1.0) * _internal(rho, m, E)


def specific_entropy(u, gp: GasParams):
    rho, _, _ = _split(u)
    if np.any(rho <= 0):
        raise DegenerateStateError("specific entropy requires positive density")
    return pressure(u, gp) * rho ** (-gp.gamma)


def constraint_g(spec: ConstraintSpec, u, gp: GasParams):
    """Signed constraint value, nonnegative where the state is admissible."""
    if spec.kind is ConstraintKind.DENSITY:
        return np.asarray(u, dtype=float)[..., 0] - spec.bound
    if spec.kind is ConstraintKind.PRESSURE:
        return pressure(u, gp) - spec.bound
    return specific_entropy(u, gp) - spec.bound


def flux(u, gp: GasParams):
    """Physical flux with shape ``u.shape + (d,)``; column ``j`` is the flux
    in coordinate direction ``j``."""
    rho, m, E = _split(u)
    d = m.shape[-1]
    P = pressure(u, gp)
    v = m / rho[..., None]
    F = np.empty(np.shape(u) + (d,))
    F[..., 0, :] = m
    F[..., 1:-1, :] = m[..., :, None] * v[..., None, :]
    for j in range(d):
        F[..., 1 + j, j] += P
    F[..., -1, :] = (E + P)[..., None] * v
    return F


def prim_to_cons(w, gp: GasParams):
    w = np.asarray(w, dtype=float)
    rho, v, P = w[..., 0], w[..., 1:-1], w[..., -1]
    u = np.empty_like(w)
    u[..., 0] = rho
    u[..., 1:-1] = rho[..., None] * v
    u[..., -1] = P / (gp.gamma - 1.0) + 0.5 * rho * np.sum(v * v, axis=-1)
    return u


def cons_to_prim(u, gp: GasParams):
    rho, m, _ = _split(u)
    P = pressure(u, gp)
    w = np.empty_like(np.asarray(u, dtype=float))
    w[..., 0] = rho
    w[..., 1:-1] = m / rho[..., None]
    w[..., -1] = P
    return w


def max_wave_speed(u, gp: GasParams):
    """Largest signal speed ``|v| + c`` of an admissible state."""
    rho, m, _ = _split(u)
    if np.any(rho <= 0):
        raise DegenerateStateError("wave speed requires positive density")
    P = pressure(u, gp)
    if np.any(P < 0):
        raise DegenerateStateError("wave speed requires nonnegative pressure")
    speed = np.sqrt(np.sum(m * m, axis=-1)) / rho
    return speed + np.sqrt(gp.gamma * P / rho)
