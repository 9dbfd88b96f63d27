"""Benchmark problems: a static discontinuity inside one P9 element and the
near-vacuum isentropic vortex, plus the pressure error metric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dglimit.element import ElementSolution, reference
from dglimit.euler import GasParams, pressure, prim_to_cons


def demo_gas() -> GasParams:
    """Gas parameters of the static-discontinuity demo (with entropy floor)."""
    return GasParams(gamma=1.4, rho_min=1e-11, p_min=1e-11, sigma_min=0.1)


def static_discontinuity_element(gp: GasParams, degree: int = 9) -> ElementSolution:
    """Degree-``degree`` interpolant of a jump at ``x = 0.5`` on ``[0, 1]``.

    Left state ``(rho, u, P) = (1, 1, 2 p_min)`` for ``x <= 0.5`` and right
    state ``(3, 3, 1)``.
    """
    x = reference(degree, 1).nodes[:, 0]
    left = np.array([1.0, 1.0, 2.0 * gp.p_min])
    right = np.array([3.0, 3.0, 1.0])
    w = np.where((x <= 0.5)[:, None], left, right)
    return ElementSolution(degree, 1, prim_to_cons(w, gp), [0.0], [1.0])


@dataclass(frozen=True)
class VortexParams:
    """Isentropic vortex parameters.

    ``density`` selects how density follows from pressure:

    ``"balanced"`` (default)
        ``rho = (gamma M^2 P)^(1/gamma)``, the only isentrope for which the
        swirl is in radial momentum balance, so the advected vortex is an
        exact solution. Far-field density is 1 and the minimum is ~8e-9.
    ``"unit-entropy"``
        ``rho = P^(1/gamma)``, i.e. ``sigma = 1``. Not an equilibrium for these
        velocities; kept for comparison.
    """

    R: float = 1.5
    M: float = 0.4
    S: float = 28.11711
    x0: tuple = (0.0, 0.0)
    lo: tuple = (-10.0, -10.0)
    hi: tuple = (10.0, 10.0)
    velocity: tuple = field(default=(0.0, 1.0))
    density: str = "balanced"

    def __post_init__(self):
        if not (self.R > 0 and self.M > 0):
            raise ValueError("vortex radius and Mach number must be positive")
        if self.density not in ("balanced", "unit-entropy"):
            raise ValueError(f"unknown density form {self.density!r}")


def vortex_primitive(x, vp: VortexParams, gp: GasParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = gp.gamma
    dx = x[..., 0] - vp.x0[0]
    dy = x[..., 1] - vp.x0[1]
    phi = np.exp((1.0 - (dx * dx + dy * dy)) / (2.0 * vp.R ** 2))
    base = 1.0 - vp.S ** 2 * vp.M ** 2 * (g - 1.0) / (8.0 * np.pi ** 2) * phi ** 2
    if np.any(base < 0):
        raise ValueError("vortex parameters give negative pressure")
    P = base ** (g / (g - 1.0)) / (g * vp.M ** 2)
    amp = vp.S / (2.0 * np.pi * vp.R)
    w = np.empty(x.shape[:-1] + (4,))
    scale = g * vp.M ** 2 if vp.density == "balanced" else 1.0
    w[..., 0] = (scale * P) ** (1.0 / g)
    w[..., 1] = vp.velocity[0] + amp * dy * phi
    w[..., 2] = vp.velocity[1] - amp * dx * phi
    w[..., 3] = P
    return w


def vortex_ic(x, vp: VortexParams, gp: GasParams) -> np.ndarray:
    return prim_to_cons(vortex_primitive(x, vp, gp), gp)


def wrap(x, lo, hi) -> np.ndarray:
    """Periodic wrap into ``[lo, hi]``; points already inside (up to
    roundoff in the node coordinates) are kept."""
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    tol = 1e-12 * (hi - lo)
    inside = (x >= lo - tol) & (x <= hi + tol)
    return np.where(inside, x, lo + np.mod(x - lo, hi - lo))


def vortex_exact(x, t: float, vp: VortexParams, gp: GasParams) -> np.ndarray:
    """The initial vortex advected by the background flow, periodically
    wrapped."""
    shifted = np.asarray(x, dtype=float) - t * np.asarray(vp.velocity)
    return vortex_ic(wrap(shifted, vp.lo, vp.hi), vp, gp)


@dataclass(frozen=True)
class ErrorReport:
    norm: str
    variable: str
    value: float
    nodes: str

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("error norm must be nonnegative")


def linf_pressure_error(fs, exact, gp: GasParams) -> ErrorReport:
    """Max pressure error over all elements' Gauss-Lobatto solution nodes.

    ``exact`` maps physical points ``(..., dim)`` to conserved states.
    """
    x = fs.node_coordinates()
    P_num = pressure(fs.nodal, gp)
    P_ex = pressure(exact(x), gp)
    return ErrorReport("Linf", "pressure", float(np.max(np.abs(P_num - P_ex))),
                       "gauss-lobatto solution nodes")
