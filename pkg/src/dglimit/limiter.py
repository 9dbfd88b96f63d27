"""Continuously bounds-preserving squeeze limiting.

The limiting factor of an element is ``alpha = max(0, -min_x h(u(x)))`` where
``h`` is the modified limiting functional: ``g(u) / g(mean)`` on the feasible
side and, on the infeasible side, either the linearized value
``g(u) / (g(mean) - g(u))`` or minus the exact root ``alpha*(x)`` of
``g(u + alpha (mean - u)) = 0``.

The heavy lifting is vectorized over a batch of elements (``limit_batch``);
the per-element functions wrap it with a batch of one.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dglimit.element import (
    ElementSolution,
    ModalForm,
    fd_derivatives,
    shift_gradient,
    fd_points,
    gauss_lobatto_nodes,
    horner,
    nodal_to_modal,
    reference,
    element_mean,
)
from dglimit.euler import (
    ConstraintKind,
    ConstraintSpec,
    DegenerateStateError,
    GasParams,
    constraint_g,
    pressure,
)


class ContractError(ValueError):
    """A limiter routine was called outside its precondition."""


class BracketError(ValueError):
    """The initial root bracket does not straddle a sign change."""


class Mode(enum.Enum):
    LINEARIZED = "linear"
    NONLINEAR = "nonlinear"


class LimitStatus(enum.Enum):
    NO_LIMITING_NEEDED = 0
    LIMITED = 1
    MEAN_INFEASIBLE = 2


@dataclass(frozen=True)
class LimiterConfig:
    """Limiter knobs.

    ``safety_margin`` subtracts ``safety_margin * max(|h_seed_min|, eps)``
    from the optimized minimum; ``extrapolate`` instead lowers it by the
    decrease predicted by the local quadratic model at the final iterate.
    ``certify`` skips the spatial search on elements whose density or
    pressure polynomial has nonnegative Bernstein coefficients (alpha is then
    provably zero). ``n_starts`` caps the number of seeds refined per element; only
    seeds that are local minima among their neighbours are started from.
    """

    mode: Mode = Mode.NONLINEAR
    eps: float = 1e-12
    newton_iters: int = 2
    max_newton_iters: int = 12
    newton_tol: float = 1e-14
    illinois_iters: int = 5
    fd_step: float = 1e-5
    seed_samples: int = 0
    n_starts: int = 8
    safety_margin: float = 0.0
    extrapolate: bool = True
    certify: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.newton_iters < 1 or self.illinois_iters < 1 or self.n_starts < 1:
            raise ValueError("iteration and start counts must be at least 1")


@dataclass
class LimitResult:
    alpha: float
    argmin_x: np.ndarray
    g_min_before: float
    g_min_after: float
    status: LimitStatus


# Gradient-descent fallback parameters.
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 20
# Largest model decrease trusted for extrapolation; starts stopped at the
# iteration cap far from a minimum would otherwise overshoot.
EXTRAPOLATE_MAX = 1e-8


def squeeze(u_x, mean, alpha):
    """Contract ``u_x`` toward ``mean``: ``u + alpha (mean - u)``."""
    u_x = np.asarray(u_x, dtype=float)
    return u_x + np.asarray(alpha, dtype=float)[..., None] * (np.asarray(mean, dtype=float) - u_x)


def h_plus(g_u, g_mean):
    return np.asarray(g_u, dtype=float) / g_mean


def h_minus_linear(g_u, g_mean):
    g_u = np.asarray(g_u, dtype=float)
    return g_u / (g_mean - g_u)


def pressure_quadratic(u, mean, gamma, p_min):
    """Coefficients of ``A a^2 + B a + C = rho_hat (P_hat - p_min) / (gamma - 1)``
    along the squeeze path from ``u`` to ``mean``."""
    du = mean - u
    rho, m, E = u[..., 0], u[..., 1:-1], u[..., -1]
    drho, dm, dE = du[..., 0], du[..., 1:-1], du[..., -1]
    floor = p_min / (gamma - 1.0)
    A = drho * dE - 0.5 * np.sum(dm * dm, axis=-1)
    B = E * drho + rho * dE - np.sum(m * dm, axis=-1) - drho * floor
    C = rho * E - 0.5 * np.sum(m * m, axis=-1) - rho * floor
    return A, B, C


def quadratic_root(A, B, C, eps):
    """Root ``(-B + sqrt(B^2 - 4AC)) / 2A`` clipped to ``[0, 1]``; 1 if ``|A| < eps``."""
    sq = np.sqrt(np.maximum(0.0, B * B - 4.0 * A * C))
    small = np.abs(A) < eps
    with np.errstate(divide="ignore", invalid="ignore"):
        # Same root, written without cancellation for B > 0.
        alpha = np.where(B > 0, 2.0 * C / (-B - sq), (-B + sq) / (2.0 * np.where(small, 1.0, A)))
    alpha = np.where(small, 1.0, alpha)
    return np.clip(alpha, 0.0, 1.0)


def _pressure_root(u, mean, gamma, p_min, eps):
    return quadratic_root(*pressure_quadratic(u, mean, gamma, p_min), eps)


def pressure_alpha_star(u, mean, gp: GasParams, eps: float = 1e-12, p_min: float | None = None):
    """Exact squeeze factor at which the pressure reaches ``p_min``.

    Requires ``P(u) < p_min`` and ``P(mean) >= p_min + eps``. Returns 1 when
    the quadratic degenerates (``|A| < eps``).
    """
    p_min = gp.p_min if p_min is None else p_min
    spec = ConstraintSpec(ConstraintKind.PRESSURE, p_min)
    u = np.asarray(u, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if np.any(constraint_g(spec, u, gp) >= 0):
        raise ContractError("pressure root requested at a feasible state")
    if np.any(constraint_g(spec, mean, gp) < eps):
        raise ContractError("pressure root requires a feasible mean")
    out = _pressure_root(u, mean, gp.gamma, p_min, eps)
    return float(out) if out.ndim == 0 else out


def _illinois(g, alpha_hi, iters):
    # Vectorized over the shape of alpha_hi; g maps alpha arrays to values.
    al = np.zeros_like(alpha_hi)
    ah = np.array(alpha_hi, dtype=float)
    gl = g(al)
    gh = g(ah)
    # +1 / -1: the upper / lower endpoint was replaced on the last iteration.
    last = np.zeros(ah.shape, dtype=int)
    for _ in range(iters):
        am = (al * gh - ah * gl) / (gh - gl)
        gm = g(am)
        low = gm < 0
        # Halve the retained endpoint's value unless it was just computed.
        gh = np.where(low, np.where(last != 1, 0.5 * gh, gh), gm)
        gl = np.where(low, gm, np.where(last != -1, 0.5 * gl, gl))
        al = np.where(low, am, al)
        ah = np.where(low, ah, am)
        last = np.where(low, -1, 1)
    return ah


def illinois_alpha_star(g_of_alpha, alpha_hi, iters: int = 5):
    """Feasible upper bracket after ``iters`` Illinois iterations on
    ``[0, alpha_hi]``.

    ``g_of_alpha`` must accept numpy arrays of squeeze factors. The bracket
    must satisfy ``g(0) < 0 <= g(alpha_hi)``.
    """
    ah = np.asarray(alpha_hi, dtype=float)
    if np.any((ah <= 0) | (ah > 1)):
        raise BracketError("upper bracket must lie in (0, 1]")
    if np.any(np.asarray(g_of_alpha(np.zeros_like(ah))) >= 0):
        raise BracketError("lower bracket is not infeasible")
    if np.any(np.asarray(g_of_alpha(ah)) < 0):
        raise BracketError("upper bracket is not feasible")
    out = _illinois(g_of_alpha, ah, iters)
    return float(out) if out.ndim == 0 else out


def entropy_alpha_star(u, mean, gp: GasParams, alpha_hi, iters: int = 5,
                       sigma_min: float | None = None):
    """Illinois squeeze factor for the entropy floor on ``[0, alpha_hi]``.

    Iterates on ``P - sigma_min rho^gamma``, which has the same zero and sign
    as ``sigma - sigma_min`` for ``rho > 0`` and is far closer to linear in
    alpha. The result is then nudged up by a few ulps where rounding leaves
    ``sigma - sigma_min`` marginally negative.
    """
    s_min = gp.sigma_min if sigma_min is None else sigma_min
    spec = ConstraintSpec(ConstraintKind.MIN_ENTROPY, s_min)
    u = np.asarray(u, dtype=float)
    mean = np.asarray(mean, dtype=float)

    def root_alpha(a):
        st = squeeze(u, mean, a)
        return pressure(st, gp) - s_min * st[..., 0] ** gp.gamma

    a = _illinois(root_alpha, np.asarray(alpha_hi, dtype=float), iters)
    step = np.finfo(float).eps * np.maximum(a, np.finfo(float).tiny)
    for _ in range(60):
        low = (constraint_g(spec, squeeze(u, mean, a), gp) < 0) & (a < 1.0)
        if not np.any(low):
            break
        a = np.where(low, np.minimum(a + step, 1.0), a)
        step = np.where(low, 2.0 * step, step)
    return a


def _check_entropy_density(u):
    if np.any(u[..., 0] <= 0):
        raise DegenerateStateError(
            "entropy constraint evaluated at nonpositive density; enforce density first")


def h_values(u, mean, g_mean, spec: ConstraintSpec, cfg: LimiterConfig, gp: GasParams):
    """Limiting functional and constraint value at states ``u``.

    ``mean`` and ``g_mean`` broadcast against ``u[..., 0]``; ``g_mean`` must
    be at least ``cfg.eps``. Returns ``(h, g(u))``.
    """
    if spec.kind is ConstraintKind.MIN_ENTROPY:
        _check_entropy_density(u)
    g_u = constraint_g(spec, u, gp)
    h = g_u / g_mean
    neg = g_u < 0
    if not np.any(neg):
        return h, g_u
    mean_b = np.broadcast_to(mean, u.shape)
    gm_b = np.broadcast_to(g_mean, g_u.shape)
    hl = g_u[neg] / (gm_b[neg] - g_u[neg])
    if cfg.mode is Mode.LINEARIZED or spec.kind is ConstraintKind.DENSITY:
        h[neg] = hl
    elif spec.kind is ConstraintKind.PRESSURE:
        h[neg] = -_pressure_root(u[neg], mean_b[neg], gp.gamma, spec.bound, cfg.eps)
    else:
        un, mn = u[neg], mean_b[neg]
        hi = np.clip(-hl, np.finfo(float).tiny, 1.0)
        # Quasiconcavity alone does not guarantee the linearized bound is
        # feasible; fall back to the full bracket where it is not.
        g_hi = constraint_g(spec, squeeze(un, mn, hi), gp)
        hi = np.where(g_hi >= 0, hi, 1.0)
        h[neg] = -entropy_alpha_star(un, mn, gp, hi, cfg.illinois_iters, spec.bound)
    return h, g_u


def h_functional(u_x, mean, spec: ConstraintSpec, cfg: LimiterConfig, gp: GasParams):
    """Limiting functional of a single state (or a batch of states)."""
    u_x = np.asarray(u_x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    g_mean = _g_mean(spec, mean, gp)
    if np.any(g_mean < cfg.eps):
        raise ContractError("limiting functional requires g(mean) >= eps")
    if u_x.ndim == 1:
        return float(h_values(u_x[None], mean, g_mean, spec, cfg, gp)[0][0])
    return h_values(u_x, mean, g_mean, spec, cfg, gp)[0]


def _g_mean(spec, mean, gp):
    # Entropy is undefined for a nonpositive mean density; report it as
    # infeasible instead of raising.
    if spec.kind is ConstraintKind.MIN_ENTROPY:
        ok = mean[..., 0] > 0
        safe = np.where(ok[..., None], mean, 1.0)
        return np.where(ok, constraint_g(spec, safe, gp), -np.inf)
    return constraint_g(spec, mean, gp)


# ---------------------------------------------------------------------------
# Seeds, certificates and spatial minimization


@functools.lru_cache(maxsize=None)
def seed_points(p: int, dim: int, extra: int = 0) -> np.ndarray:
    """Solution nodes, volume and surface quadrature nodes, plus an optional
    uniform grid of about ``extra`` points."""
    ref = reference(p, dim)
    pts = [ref.nodes, ref.quad.points, ref.face_points()]
    if extra > 0:
        pts.append(uniform_points(extra, dim))
    out = np.unique(np.round(np.concatenate(pts), 15), axis=0)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=None)
def uniform_points(n: int, dim: int) -> np.ndarray:
    """Uniform grid with about ``n`` points (endpoints included)."""
    k = max(2, int(round(n ** (1.0 / dim))))
    x = np.linspace(0.0, 1.0, k)
    if dim == 1:
        return x[:, None]
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=-1)


def _bernstein_1d(q: int, x: np.ndarray) -> np.ndarray:
    from math import comb

    k = np.arange(q + 1)
    c = np.array([comb(q, i) for i in k], dtype=float)
    return c * x[:, None] ** k * (1.0 - x[:, None]) ** (q - k)


@functools.lru_cache(maxsize=None)
def _bernstein_ops(p: int, dim: int, q: int):
    """Interpolation from degree-``p`` nodal values to degree-``q``
    Gauss-Lobatto nodes and the nodal-to-Bernstein map of degree ``q``."""
    ref = reference(p, dim)
    xq = gauss_lobatto_nodes(q)
    Tq = np.linalg.inv(_bernstein_1d(q, xq))
    if dim == 1:
        pts = xq[:, None]
        T = Tq
    else:
        X, Y = np.meshgrid(xq, xq, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        T = np.kron(Tq, Tq)
    return ref.lagrange(pts), T


def _positive_certificate(vals_b):
    lo = vals_b.min(axis=-1)
    scale = np.abs(vals_b).max(axis=-1)
    return lo > 1e-14 * scale


def certify_feasible(nodal, p: int, dim: int, spec: ConstraintSpec, gp: GasParams):
    """Boolean mask of elements whose constraint provably holds everywhere.

    Uses the nonnegativity of Bernstein coefficients of ``rho - rho_min``
    (degree ``p``) or of ``rho (P - P_min) / (gamma - 1)`` (degree ``2p``,
    together with positive density). Entropy is never certified.
    """
    K = nodal.shape[0]
    if spec.kind is ConstraintKind.MIN_ENTROPY:
        return np.zeros(K, dtype=bool)
    if spec.kind is ConstraintKind.DENSITY:
        _, T = _bernstein_ops(p, dim, p)
        return _positive_certificate((nodal[..., 0] - spec.bound) @ T.T)
    _, T = _bernstein_ops(p, dim, p)
    rho_pos = _positive_certificate(nodal[..., 0] @ T.T)
    L, T2 = _bernstein_ops(p, dim, 2 * p)
    u = L @ nodal
    rho, m, E = u[..., 0], u[..., 1:-1], u[..., -1]
    q = rho * E - 0.5 * np.sum(m * m, axis=-1) - rho * spec.bound / (gp.gamma - 1.0)
    return rho_pos & _positive_certificate(q @ T2.T)


class _Field:
    """Evaluator of ``h`` over points of a batch of elements."""

    def __init__(self, modal, mean, g_mean, spec, cfg, gp, p, dim):
        self.modal, self.mean, self.g_mean = modal, mean, g_mean
        self.spec, self.cfg, self.gp = spec, cfg, gp
        self.p, self.dim = p, dim

    def __call__(self, eidx, x):
        u = horner(self.modal[eidx], x, self.p, self.dim)
        return h_values(u, self.mean[eidx, None, :], self.g_mean[eidx, None],
                        self.spec, self.cfg, self.gp)


def _free_system(x, grad, hess):
    # Box-projected gradient/Hessian: coordinates pinned at a face with the
    # gradient pointing outward are frozen.
    fixed = ((x <= 0.0) & (grad > 0)) | ((x >= 1.0) & (grad < 0))
    g = np.where(fixed, 0.0, grad)
    H = np.where(fixed[..., :, None] | fixed[..., None, :], 0.0, hess)
    d = x.shape[-1]
    H = H + np.where(fixed[..., :, None], np.eye(d), 0.0)
    return g, H


def _newton_data(g, H):
    w = np.linalg.eigvalsh(H)
    pd = np.all(w > 0, axis=-1)
    Hs = np.where(pd[..., None, None], H, np.eye(H.shape[-1]))
    step = -np.linalg.solve(Hs, g[..., None])[..., 0]
    return pd, step


@functools.lru_cache(maxsize=None)
def _seed_neighbour_cache(key, p):
    seeds = np.frombuffer(key[0]).reshape(key[1])
    d = np.abs(seeds[:, None, :] - seeds[None, :, :]).max(axis=-1)
    out = (d <= 0.5 / p) & (d > 0)
    out.setflags(write=False)
    return out


def _seed_neighbours(seeds, p):
    """Seeds within half an average node spacing (max norm) of each other."""
    seeds = np.ascontiguousarray(seeds, dtype=float)
    return _seed_neighbour_cache((seeds.tobytes(), seeds.shape), p)


def minimize_h(field: _Field, eidx: np.ndarray, seeds: np.ndarray,
               hints: np.ndarray | None = None):
    """Seeded Newton minimization of ``h`` for the elements ``eidx``.

    Every start takes ``cfg.newton_iters`` safeguarded Newton steps; starts
    whose local quadratic model still predicts a decrease above
    ``cfg.newton_tol`` keep iterating up to ``cfg.max_newton_iters``. The
    returned minimum is lowered by the final predicted decrease when
    ``cfg.extrapolate`` is set.

    ``hints`` of shape ``(n, k, dim)`` are extra per-element starts that are
    always refined (e.g. binding points of previously enforced constraints).

    Returns ``(h_min, x_min, h_seed_min, g_seed_min)`` per element.
    """
    cfg, p, dim = field.cfg, field.p, field.dim
    n = eidx.size
    hs, gs = field(eidx, np.broadcast_to(seeds, (n,) + seeds.shape))
    rows = np.arange(n)[:, None]
    order = np.argsort(hs, axis=1, kind="stable")
    best_h = hs[rows, order[:, :1]][:, 0].copy()
    best_x = seeds[order[:, 0]].copy()
    h_seed_min = best_h.copy()
    g_seed_min = gs.min(axis=1)

    # Start from the lowest seeds that are also local minima among their
    # neighbours, so separate basins each get refined.
    nb = _seed_neighbours(seeds, p)
    local = np.all((hs[:, :, None] <= hs[:, None, :]) | ~nb, axis=2)
    # Any infeasible seed may sit in a separate basin lying between seeds.
    local |= hs < 0
    local[rows[:, 0], order[:, 0]] = True
    rank = np.cumsum(local[rows, order], axis=1)
    pick = local[rows, order] & (rank <= cfg.n_starts)
    owner, col = np.nonzero(pick)
    sidx = order[owner, col]
    x = seeds[sidx].copy()
    hcur = hs[owner, sidx].copy()
    if hints is not None and hints.shape[1]:
        hh, hg = field(eidx, hints)
        k = hints.shape[1]
        x = np.concatenate([x, hints.reshape(-1, dim)])
        hcur = np.concatenate([hcur, hh.reshape(-1)])
        owner = np.concatenate([owner, np.repeat(np.arange(n), k)])
        j = np.argmin(hh, axis=1)
        better = hh[np.arange(n), j] < best_h
        best_h[better] = hh[np.arange(n), j][better]
        best_x[better] = hints[np.arange(n), j][better]
        h_seed_min = np.minimum(h_seed_min, hh.min(axis=1))
        g_seed_min = np.minimum(g_seed_min, hg.min(axis=1))
    flat_e = eidx[owner]
    fd = cfg.fd_step
    t0 = 1.0 / (p + 1)

    def record(hv, xv, who):
        # Fold evaluated points (hv: (P, m), xv: (P, m, dim)) into the
        # per-element running minimum.
        if not hv.shape[0]:
            return
        j = np.argmin(hv, axis=1)
        r = np.arange(hv.shape[0])
        hm, xm = hv[r, j], xv[r, j]
        srt = np.lexsort((hm, who))
        who_s = who[srt]
        first = srt[np.r_[True, who_s[1:] != who_s[:-1]]]
        w = who[first]
        better = hm[first] < best_h[w]
        best_h[w[better]] = hm[first][better]
        best_x[w[better]] = xm[first][better]

    active = np.arange(x.shape[0])
    max_iters = max(cfg.max_newton_iters, cfg.newton_iters)
    for it in range(max_iters + 1):
        if not active.size:
            break
        xa, ea, oa = x[active], flat_e[active], owner[active]
        xc, pts = fd_points(xa, fd)
        vals, _ = field(ea, pts)
        record(vals, pts, oa)
        g, H = fd_derivatives(vals, fd, dim)
        g, H = _free_system(xa, shift_gradient(g, H, xa - xc), H)
        pd, step = _newton_data(g, H)
        decrease = np.where(pd, np.maximum(-0.5 * np.sum(g * step, axis=-1), 0.0), 0.0)
        done = np.zeros(active.size, dtype=bool)
        if it >= cfg.newton_iters:
            done = pd & (decrease <= cfg.newton_tol)
        if it == max_iters:
            done[:] = True
        if np.any(done):
            if cfg.extrapolate:
                trust = done & (decrease <= EXTRAPOLATE_MAX)
                bound = hcur[active[trust]] - decrease[trust]
                record(bound[:, None], xa[trust][:, None, :], oa[trust])
            keep = ~done
            active, xa, ea, oa = active[keep], xa[keep], ea[keep], oa[keep]
            g, pd, step = g[keep], pd[keep], step[keep]
            if not active.size:
                break

        x_new = np.clip(xa + step, 0.0, 1.0)
        h_new = field(ea, x_new[:, None, :])[0][:, 0]
        record(h_new[:, None], x_new[:, None, :], oa)
        accept = pd & (h_new < hcur[active])
        x[active[accept]] = x_new[accept]
        hcur[active[accept]] = h_new[accept]

        gnorm = np.linalg.norm(g, axis=-1)
        sel = np.flatnonzero(~accept & (gnorm > 0))
        if not sel.size:
            continue
        # Gradient descent with Armijo backtracking where Newton failed.
        gd = active[sel]
        direction = -g[sel] / gnorm[sel, None]
        gn = gnorm[sel]
        t = np.full(gd.size, t0)
        for _ in range(MAX_BACKTRACKS):
            xt = np.clip(x[gd] + t[:, None] * direction, 0.0, 1.0)
            ht = field(flat_e[gd], xt[:, None, :])[0][:, 0]
            record(ht[:, None], xt[:, None, :], owner[gd])
            ok = ht <= hcur[gd] - ARMIJO_C * t * gn
            x[gd[ok]] = xt[ok]
            hcur[gd[ok]] = ht[ok]
            keep = ~ok
            gd, direction, gn, t = gd[keep], direction[keep], gn[keep], t[keep] * BACKTRACK
            if not gd.size:
                break

    return best_h, best_x, h_seed_min, g_seed_min


@dataclass
class BatchResult:
    """Per-element limiting data for one constraint."""

    alpha: np.ndarray
    argmin_x: np.ndarray
    g_min_before: np.ndarray
    g_min_after: np.ndarray
    status: np.ndarray

    def result(self, k: int) -> LimitResult:
        return LimitResult(float(self.alpha[k]), self.argmin_x[k].copy(),
                           float(self.g_min_before[k]), float(self.g_min_after[k]),
                           LimitStatus(int(self.status[k])))


def alpha_batch(nodal, mean, p: int, dim: int, spec: ConstraintSpec,
                cfg: LimiterConfig, gp: GasParams, hints=None) -> BatchResult:
    """Limiting factors of a batch of elements for one constraint.

    ``nodal`` has shape ``(K, nnodes, nvar)`` and ``mean`` ``(K, nvar)``;
    optional ``hints`` ``(K, k, dim)`` are extra optimizer starts.
    """
    K = nodal.shape[0]
    ref = reference(p, dim)
    g_mean = _g_mean(spec, mean, gp)
    infeasible = g_mean < cfg.eps
    alpha = np.where(infeasible, 1.0, 0.0)
    status = np.where(infeasible, LimitStatus.MEAN_INFEASIBLE.value,
                      LimitStatus.NO_LIMITING_NEEDED.value)
    argmin = np.full((K, dim), 0.5)
    gmin_before = np.full(K, np.nan)
    gmin_after = np.full(K, np.nan)

    todo = ~infeasible
    if not np.any(todo):
        return BatchResult(alpha, argmin, gmin_before, gmin_after, status)
    if cfg.certify:
        safe = certify_feasible(nodal[todo], p, dim, spec, gp)
        certified = np.zeros(K, dtype=bool)
        certified[np.flatnonzero(todo)[safe]] = True
        todo &= ~certified
    else:
        certified = np.zeros(K, dtype=bool)

    modal = ref.vinv @ nodal
    gm_safe = np.where(infeasible, 1.0, g_mean)
    field = _Field(modal, mean, gm_safe, spec, cfg, gp, p, dim)
    seeds = seed_points(p, dim, cfg.seed_samples)

    if np.any(certified):
        idx = np.flatnonzero(certified)
        u = ref.lagrange(seeds) @ nodal[idx]
        gs = constraint_g(spec, u, gp)
        gmin_before[idx] = gs.min(axis=1)
        argmin[idx] = seeds[np.argmin(gs, axis=1)]

    if np.any(todo):
        idx = np.flatnonzero(todo)
        hmin, xmin, h_seed, g_seed = minimize_h(
            field, idx, seeds, None if hints is None else hints[idx])
        if cfg.safety_margin > 0:
            hmin = hmin - cfg.safety_margin * np.maximum(np.abs(h_seed), cfg.eps)
        a = np.clip(np.maximum(0.0, -hmin), 0.0, 1.0)
        alpha[idx] = a
        argmin[idx] = xmin
        gmin_before[idx] = g_seed
        status[idx] = np.where(a > 0, LimitStatus.LIMITED.value,
                               LimitStatus.NO_LIMITING_NEEDED.value)

    if cfg.seed_samples > 0:
        idx = np.flatnonzero(~infeasible)
        if idx.size:
            gmin_after[idx] = verify_min_g(nodal[idx], mean[idx], alpha[idx], p, dim,
                                           spec, gp, uniform_points(cfg.seed_samples, dim))
    return BatchResult(alpha, argmin, gmin_before, gmin_after, status)


def verify_min_g(nodal, mean, alpha, p, dim, spec, gp, points):
    """Minimum of ``g`` over ``points`` of the squeezed elements."""
    L = reference(p, dim).lagrange(points)
    u = L @ nodal
    u = u + alpha[:, None, None] * (mean[:, None, :] - u)
    return constraint_g(spec, u, gp).min(axis=1)


def limit_batch(nodal, p: int, dim: int, specs: Sequence[ConstraintSpec],
                cfg: LimiterConfig, gp: GasParams):
    """Sequentially enforce ``specs`` on a batch of nodal elements.

    Returns the limited nodal array and one :class:`BatchResult` per
    constraint. Each constraint sees the output of the previous one; the
    element means are unchanged.
    """
    nodal = np.asarray(nodal, dtype=float)
    mean = reference(p, dim).mean_weights @ nodal
    results = []
    hints = np.empty((nodal.shape[0], 0, dim))
    for spec in specs:
        res = alpha_batch(nodal, mean, p, dim, spec, cfg, gp, hints)
        if np.any(res.alpha > 0):
            nodal = nodal + res.alpha[:, None, None] * (mean[:, None, :] - nodal)
        results.append(res)
        # A binding point of one constraint (where, e.g., the pressure now
        # touches its floor) is a likely minimizer for the next one.
        hints = np.concatenate([hints, res.argmin_x[:, None, :]], axis=1)
    return nodal, results


def find_min_h(e: ElementSolution, mf: ModalForm, mean, spec: ConstraintSpec,
               cfg: LimiterConfig, gp: GasParams):
    """Approximate ``(min_x h, argmin)`` over the element.

    ``mf`` must be the modal form of ``e``; the minimum includes the
    extrapolated bound when ``cfg.extrapolate`` is set.
    """
    mean = np.asarray(mean, dtype=float)
    g_mean = _g_mean(spec, mean[None], gp)
    if g_mean[0] < cfg.eps:
        raise ContractError("spatial minimization requires g(mean) >= eps")
    field = _Field(np.asarray(mf.coeffs)[None], mean[None], g_mean, spec, cfg, gp,
                   e.degree, e.dim)
    hmin, xmin, _, _ = minimize_h(field, np.array([0]),
                                  seed_points(e.degree, e.dim, cfg.seed_samples))
    return float(hmin[0]), xmin[0]


def compute_alpha(e: ElementSolution, spec: ConstraintSpec, cfg: LimiterConfig,
                  gp: GasParams) -> LimitResult:
    res = alpha_batch(np.asarray(e.coeffs)[None], element_mean(e)[None],
                      e.degree, e.dim, spec, cfg, gp)
    return res.result(0)


def limit_element(e: ElementSolution, specs: Sequence[ConstraintSpec],
                  cfg: LimiterConfig, gp: GasParams):
    """Limit one element; returns ``(limited element, [LimitResult, ...])``."""
    nodal, results = limit_batch(np.asarray(e.coeffs)[None], e.degree, e.dim,
                                 specs, cfg, gp)
    return e.with_coeffs(nodal[0]), [r.result(0) for r in results]
