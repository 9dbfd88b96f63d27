"""Nodal DG semi-discretization of the Euler equations on uniform periodic
Cartesian meshes, with SSP-RK3 time stepping and limiting after every stage.

The whole field is stored as one array ``nodal`` of shape
``(K, (p+1)**d, d+2)`` with elements in C order over the mesh index
``(i_x[, i_y])``. Every operator works on the full array at once, so a stage
always reads a completely limited field: limiting returns a new array that
replaces the old one only after all elements are done.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from dglimit.element import ElementSolution, gauss_legendre_1d, reference
from dglimit.euler import (
    ConstraintSpec,
    DegenerateStateError,
    GasParams,
    flux,
    max_wave_speed,
    positivity_specs,
)
from dglimit.limiter import BatchResult, LimiterConfig, limit_batch


class SolverError(RuntimeError):
    """The solution became non-finite or inadmissible."""

    def __init__(self, message: str, element: Optional[int] = None):
        super().__init__(message if element is None else f"{message} (element {element})")
        self.element = element


@dataclass(frozen=True)
class Mesh:
    dim: int
    n: tuple
    lo: tuple
    hi: tuple
    periodic: tuple = None

    def __post_init__(self):
        n = tuple(int(v) for v in np.broadcast_to(self.n, (self.dim,)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lo", tuple(float(v) for v in np.broadcast_to(self.lo, (self.dim,))))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.broadcast_to(self.hi, (self.dim,))))
        if self.periodic is None:
            object.__setattr__(self, "periodic", (True,) * self.dim)
        if min(n) < 1:
            raise ValueError("need at least one element per direction")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("mesh extent must be positive")
        if not all(self.periodic):
            raise NotImplementedError("only periodic meshes are supported")

    @property
    def num_elements(self) -> int:
        return int(np.prod(self.n))

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / np.array(self.n)

    @property
    def element_volume(self) -> float:
        return float(np.prod(self.h))

    def element_lo(self) -> np.ndarray:
        """Lower corner of every element, shape ``(K, dim)``."""
        idx = np.indices(self.n).reshape(self.dim, -1).T
        return np.array(self.lo) + idx * self.h


@dataclass(frozen=True)
class SolverConfig:
    degree: int
    t_final: float = 0.0
    cfl: float = 0.1
    limiter: Optional[LimiterConfig] = field(default_factory=LimiterConfig)
    gas: GasParams = field(default_factory=GasParams)
    specs: Optional[Sequence[ConstraintSpec]] = None

    def __post_init__(self):
        if not self.cfl > 0:
            raise ValueError("cfl must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")

    @property
    def constraints(self) -> list:
        return list(self.specs) if self.specs is not None else positivity_specs(self.gas)


@dataclass
class FieldState:
    mesh: Mesh
    degree: int
    nodal: np.ndarray
    t: float = 0.0
    limited: bool = False

    def __post_init__(self):
        expected = (self.mesh.num_elements, (self.degree + 1) ** self.mesh.dim, self.mesh.dim + 2)
        if self.nodal.shape != expected:
            raise ValueError(f"nodal shape {self.nodal.shape}, expected {expected}")

    def node_coordinates(self) -> np.ndarray:
        """Physical coordinates of all solution nodes, ``(K, nnodes, dim)``."""
        ref = reference(self.degree, self.mesh.dim)
        return self.mesh.element_lo()[:, None, :] + ref.nodes[None] * self.mesh.h

    def element(self, k: int) -> ElementSolution:
        lo = self.mesh.element_lo()[k]
        return ElementSolution(self.degree, self.mesh.dim, self.nodal[k], lo, lo + self.mesh.h)

    def means(self) -> np.ndarray:
        return reference(self.degree, self.mesh.dim).mean_weights @ self.nodal

    def totals(self) -> np.ndarray:
        """Domain integral of every conserved variable."""
        return self.means().sum(axis=0) * self.mesh.element_volume


def project(f: Callable, mesh: Mesh, degree: int) -> FieldState:
    """Interpolate ``f`` (physical points -> conserved states) on the nodes."""
    ref = reference(degree, mesh.dim)
    x = mesh.element_lo()[:, None, :] + ref.nodes[None] * mesh.h
    return FieldState(mesh, degree, np.asarray(f(x), dtype=float))


def riemann_rusanov(uL, uR, n, gp: GasParams):
    """Local Lax-Friedrichs flux ``F_hat(uL, uR, n)``; ``n`` points from
    ``uL`` into ``uR``."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    n = np.asarray(n, dtype=float)
    FL = flux(uL, gp) @ n
    FR = flux(uR, gp) @ n
    lam = np.maximum(max_wave_speed(uL, gp), max_wave_speed(uR, gp))
    return 0.5 * (FL + FR) - 0.5 * lam[..., None] * (uR - uL)


def _face_flux(uL, uR, axis: int, gp: GasParams):
    # Rusanov flux along a coordinate direction, without building normals.
    FL = flux(uL, gp)[..., axis]
    FR = flux(uR, gp)[..., axis]
    lam = np.maximum(max_wave_speed(uL, gp), max_wave_speed(uR, gp))
    return 0.5 * (FL + FR) - 0.5 * lam[..., None] * (uR - uL)


class DGOperator:
    """Weak-form residual ``M^{-1} (volume - surface)`` for one mesh/degree."""

    def __init__(self, mesh: Mesh, degree: int, gp: GasParams):
        self.mesh, self.p, self.gp = mesh, degree, gp
        ref1 = reference(degree, 1)
        xq, self.wq = gauss_legendre_1d(degree + 1)
        self.Iq = ref1.lagrange(xq[:, None])  # (nq, np)
        self.Dq = ref1.lagrange_grad(xq[:, None])[:, 0, :]
        M1 = self.Iq.T @ (self.wq[:, None] * self.Iq)
        self.M1inv = np.linalg.inv(M1)

    def _check(self, fn, *args):
        try:
            return fn(*args)
        except DegenerateStateError as exc:
            raise SolverError(str(exc)) from exc

    def quad_values(self, nodal):
        if self.mesh.dim == 1:
            return self.Iq @ nodal
        p1 = self.p + 1
        U = nodal.reshape(-1, p1, p1, nodal.shape[-1])
        return _along_y(self.Iq, _along_x(self.Iq, U))

    def __call__(self, nodal):
        if not np.all(np.isfinite(nodal)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(nodal), axis=(1, 2)))[0])
            raise SolverError("non-finite state", bad)
        if self.mesh.dim == 1:
            return self._rhs_1d(nodal)
        return self._rhs_2d(nodal)

    def _rhs_1d(self, U):
        gp, h = self.gp, self.mesh.h[0]
        F = self._check(flux, self.quad_values(U), gp)[..., 0]
        R = self.Dq.T @ (self.wq[:, None] * F)
        uL = U[:, -1, :]                      # right trace of element k
        uR = np.roll(U[:, 0, :], -1, axis=0)  # left trace of element k+1
        Fh = self._check(_face_flux, uL, uR, 0, gp)  # flux through right face of k
        R[:, -1, :] -= Fh
        R[:, 0, :] += np.roll(Fh, 1, axis=0)
        return (self.M1inv @ R) / h

    def _rhs_2d(self, nodal):
        gp = self.gp
        nx, ny = self.mesh.n
        hx, hy = self.mesh.h
        p1 = self.p + 1
        nv = nodal.shape[-1]
        U = nodal.reshape(nx, ny, p1, p1, nv)
        F = self._check(flux, self.quad_values(nodal), gp)  # (K, q, r, v, 2)
        W = (self.wq[:, None] * self.wq[None, :])[None, :, :, None]
        R = hy * _along_x(self.Dq.T, _along_y(self.Iq.T, W * F[..., 0]))
        R += hx * _along_x(self.Iq.T, _along_y(self.Dq.T, W * F[..., 1]))
        R = R.reshape(nx, ny, p1, p1, nv)
        wq = self.wq[:, None]

        # x faces: traces along y interpolated to Gauss-Legendre points.
        right = self.Iq @ U[:, :, -1]
        left = self.Iq @ U[:, :, 0]
        wFx = hy * wq * self._check(_face_flux, right, np.roll(left, -1, axis=0), 0, gp)
        R[:, :, -1] -= self.Iq.T @ wFx
        R[:, :, 0] += self.Iq.T @ np.roll(wFx, 1, axis=0)

        top = self.Iq @ U[:, :, :, -1]
        bottom = self.Iq @ U[:, :, :, 0]
        wFy = hx * wq * self._check(_face_flux, top, np.roll(bottom, -1, axis=1), 1, gp)
        R[:, :, :, -1] -= self.Iq.T @ wFy
        R[:, :, :, 0] += self.Iq.T @ np.roll(wFy, 1, axis=1)

        R = R.reshape(nx * ny, p1, p1, nv)
        out = _along_y(self.M1inv, _along_x(self.M1inv, R)) / (hx * hy)
        return out.reshape(nodal.shape)


def _along_x(A, U):
    # Apply a 1D operator along axis 1 of (K, a, b, v).
    K, a, b, v = U.shape
    return (A @ U.reshape(K, a, b * v)).reshape(K, A.shape[0], b, v)


def _along_y(A, U):
    # Apply a 1D operator along axis 2 of (K, a, b, v).
    return A @ U


_OPERATORS: dict = {}


def operator(fs: FieldState, cfg: SolverConfig) -> DGOperator:
    key = (fs.mesh, fs.degree, cfg.gas)
    op = _OPERATORS.get(key)
    if op is None:
        op = _OPERATORS[key] = DGOperator(fs.mesh, fs.degree, cfg.gas)
    return op


def rhs(fs: FieldState, cfg: SolverConfig) -> np.ndarray:
    """Time derivative of all nodal coefficients."""
    return operator(fs, cfg)(fs.nodal)


def stable_dt(fs: FieldState, cfg: SolverConfig) -> float:
    """``cfl * h / ((2p + 1) * max wave speed over volume quadrature points)``."""
    Uq = operator(fs, cfg).quad_values(fs.nodal)
    try:
        lam = float(np.max(max_wave_speed(Uq, cfg.gas)))
    except DegenerateStateError as exc:
        raise SolverError(str(exc)) from exc
    return cfg.cfl * float(np.min(fs.mesh.h)) / ((2 * fs.degree + 1) * lam)


StageCallback = Callable[[FieldState, int, Optional[list]], None]


def apply_limiter(fs: FieldState, cfg: SolverConfig):
    """Limit every element; returns the new state and per-constraint
    :class:`BatchResult` list (``None`` when limiting is off)."""
    if cfg.limiter is None:
        return replace(fs, limited=True), None
    try:
        nodal, results = limit_batch(fs.nodal, fs.degree, fs.mesh.dim,
                                     cfg.constraints, cfg.limiter, cfg.gas)
    except (DegenerateStateError, ArithmeticError) as exc:
        raise SolverError(f"limiter failed: {exc}") from exc
    return replace(fs, nodal=nodal, limited=True), results


def forward_euler(fs: FieldState, cfg: SolverConfig, dt: float) -> FieldState:
    """One unlimited forward-Euler update (the first SSP-RK3 stage)."""
    return replace(fs, nodal=fs.nodal + dt * rhs(fs, cfg), t=fs.t + dt, limited=False)


def step(fs: FieldState, cfg: SolverConfig, dt: float,
         callback: Optional[StageCallback] = None) -> FieldState:
    """Three-stage SSP-RK3 step with limiting after every stage.

    An unlimited input (e.g. a freshly projected initial condition) is
    limited first.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not fs.limited:
        fs, _ = apply_limiter(fs, cfg)
    u0 = fs.nodal
    s1, res = apply_limiter(forward_euler(fs, cfg, dt), cfg)
    if callback:
        callback(s1, 1, res)
    s2 = forward_euler(s1, cfg, dt)
    s2, res = apply_limiter(replace(s2, nodal=0.75 * u0 + 0.25 * s2.nodal, t=fs.t + 0.5 * dt), cfg)
    if callback:
        callback(s2, 2, res)
    s3 = forward_euler(s2, cfg, dt)
    s3, res = apply_limiter(
        replace(s3, nodal=u0 / 3.0 + 2.0 / 3.0 * s3.nodal, t=fs.t + dt), cfg)
    if callback:
        callback(s3, 3, res)
    return s3


def run(fs: FieldState, cfg: SolverConfig, callback: Optional[StageCallback] = None,
        max_steps: Optional[int] = None) -> FieldState:
    """Advance to ``cfg.t_final`` with adaptive ``stable_dt`` steps; the last
    step is shortened to land on ``t_final`` exactly."""
    nsteps = 0
    while fs.t < cfg.t_final * (1 - 1e-14):
        if not fs.limited:
            fs, _ = apply_limiter(fs, cfg)
        dt = min(stable_dt(fs, cfg), cfg.t_final - fs.t)
        t_next = fs.t + dt
        fs = step(fs, cfg, dt, callback)
        if t_next >= cfg.t_final:
            t_next = cfg.t_final
        fs.t = t_next
        nsteps += 1
        if max_steps is not None and nsteps >= max_steps:
            break
    return fs
