"""Seeded oracle and invariant suites, runnable outside pytest.

Each suite takes a ``numpy.random.Generator`` and returns a
:class:`SuiteResult`. :func:`run_suites` drives them all from one seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from dglimit.element import ElementSolution, element_mean, eval_at, nodal_to_modal, reference
from dglimit.euler import (
    GasParams,
    all_specs,
    cons_to_prim,
    pressure,
    prim_to_cons,
    specific_entropy,
)
from dglimit.limiter import (
    LimiterConfig,
    entropy_alpha_star,
    h_minus_linear,
    limit_element,
    pressure_quadratic,
    quadratic_root,
    squeeze,
)

# root(u, mean, gp, p_min) -> alpha
RootFn = Callable[[np.ndarray, np.ndarray, GasParams, float], np.ndarray]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    detail: str
    seconds: float = 0.0


def default_root(u, mean, gp: GasParams, p_min: float, eps: float = 1e-12):
    return quadratic_root(*pressure_quadratic(u, mean, gp.gamma, p_min), eps)


def bisect_root(g, n: int, iters: int = 60) -> np.ndarray:
    """Smallest feasible alpha in ``[0, 1]`` of a vectorized ``g`` by bisection.

    Assumes ``g(0) < 0 <= g(1)`` with a single sign change.
    """
    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = g(mid) >= 0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def random_pressure_pairs(rng, n: int, gp: GasParams, dim: int = 1):
    """Infeasible states with feasible means (pressure constraint)."""
    def draw(p_lo, p_hi):
        w = np.empty((n, dim + 2))
        w[:, 0] = rng.uniform(0.1, 3.0, n)
        w[:, 1:-1] = rng.uniform(-3.0, 3.0, (n, dim))
        w[:, -1] = rng.uniform(p_lo, p_hi, n)
        return prim_to_cons(w, gp)

    return draw(-2.0, 0.0), draw(0.01, 3.0)


def quadratic_oracle(rng, n: int = 10 ** 5, root: Optional[RootFn] = None,
                     tol: float = 1e-9, gp: Optional[GasParams] = None) -> SuiteResult:
    """Closed-form pressure root against 60-step bisection and its residual."""
    gp = gp or GasParams()
    root = root or default_root
    u, mean = random_pressure_pairs(rng, n, gp)
    a = np.asarray(root(u, mean, gp, gp.p_min))
    b = bisect_root(lambda t: pressure(squeeze(u, mean, t), gp) - gp.p_min, n)
    diff = np.abs(a - b)
    resid = np.abs(pressure(squeeze(u, mean, a), gp) - gp.p_min)
    ok = np.isfinite(a) & (diff <= tol) & (resid <= tol)
    return SuiteResult("quadratic-oracle", bool(ok.all()), n,
                       f"max|a-bisect|={np.nanmax(diff):.3g} max resid={np.nanmax(resid):.3g}")


def random_entropy_cases(rng, n: int, gp: GasParams):
    """Pairs ``(u, mean, alpha_hi)``: states below the entropy floor with
    positive pressure, means above it, and the linearized bracket
    ``alpha_hi = -h_L``. Only pairs where ``alpha_hi`` is a feasible upper
    bracket are kept, so fewer than ``n`` may be returned."""
    rho = rng.uniform(0.1, 3.0, (2, n))
    v = rng.uniform(-2.0, 2.0, (2, n))
    s = gp.sigma_min
    sig_u = rng.uniform(0.01 * s, 0.99 * s, n)
    sig_m = rng.uniform(1.05 * s, 10.0 * s, n)
    u = prim_to_cons(np.column_stack([rho[0], v[0], sig_u * rho[0] ** gp.gamma]), gp)
    mean = prim_to_cons(np.column_stack([rho[1], v[1], sig_m * rho[1] ** gp.gamma]), gp)
    gu = specific_entropy(u, gp) - s
    gm = specific_entropy(mean, gp) - s
    hi = -h_minus_linear(gu, gm)
    keep = entropy_root_function(u, mean, gp)(hi) >= 0
    return u[keep], mean[keep], hi[keep]


def entropy_root_function(u, mean, gp: GasParams):
    """``alpha -> P - sigma_min rho^gamma`` along the squeeze path."""
    def g(t):
        st = squeeze(u, mean, t)
        return pressure(st, gp) - gp.sigma_min * st[..., 0] ** gp.gamma
    return g


def illinois_contract(rng, n: int = 10 ** 3, iters: int = 5, tol: float = 1e-3) -> SuiteResult:
    """Illinois result is feasible, inside ``[0, -h_L]`` and near the bisection root."""
    gp = GasParams(sigma_min=0.2)
    u, mean, hi = random_entropy_cases(rng, n, gp)
    g = entropy_root_function(u, mean, gp)
    a = entropy_alpha_star(u, mean, gp, hi, iters)
    b = bisect_root(g, len(a))
    g3 = specific_entropy(squeeze(u, mean, a), gp) - gp.sigma_min
    ok = (g3 >= 0) & (a >= 0) & (a <= hi) & (np.abs(a - b) <= tol)
    return SuiteResult("illinois-contract", bool(ok.all()), len(a),
                       f"fails={int((~ok).sum())} max|a-bisect|={np.max(np.abs(a - b)):.3g}")


def random_element(rng, p: int, dim: int, gp: GasParams) -> ElementSolution:
    nn = (p + 1) ** dim
    while True:
        w = np.empty((nn, dim + 2))
        w[:, 0] = rng.uniform(0.2, 2.0, nn)
        w[:, 1:-1] = rng.uniform(-2.0, 2.0, (nn, dim))
        w[:, -1] = rng.uniform(-0.3, 1.0, nn)
        e = ElementSolution(p, dim, prim_to_cons(w, gp))
        if pressure(element_mean(e), gp) > 1e-3:
            return e


def mean_invariance(rng, n: int = 100, tol: float = 1e-13) -> SuiteResult:
    gp = GasParams()
    specs = all_specs(gp)[:2]
    cfg = LimiterConfig()
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(1, 3))
        e = random_element(rng, int(rng.integers(1, 6)), dim, gp)
        out, _ = limit_element(e, specs, cfg, gp)
        m0 = element_mean(e)
        worst = max(worst, float(np.max(np.abs(element_mean(out) - m0)) / np.max(np.abs(m0))))
    return SuiteResult("mean-invariance", worst <= tol, n, f"max rel drift={worst:.3g}")


def state_roundtrip(rng, n: int = 10 ** 4, tol: float = 1e-12) -> SuiteResult:
    gp = GasParams()
    w = np.column_stack([rng.uniform(0.1, 5, n), rng.uniform(-1, 1, (n, 2)),
                         rng.uniform(0.1, 5, n)])
    err = np.max(np.abs(cons_to_prim(prim_to_cons(w, gp), gp) - w) / (1 + np.abs(w)))
    return SuiteResult("state-roundtrip", bool(err <= tol), n, f"max rel err={err:.3g}")


def modal_roundtrip(rng, tol: float = 1e-11) -> SuiteResult:
    worst = 0.0
    count = 0
    for dim in (1, 2):
        for p in range(1, 10):
            vals = rng.normal(size=((p + 1) ** dim, dim + 2))
            e = ElementSolution(p, dim, vals)
            mf = nodal_to_modal(e)
            back = eval_at(mf, reference(p, dim).nodes)
            worst = max(worst, float(np.max(np.abs(back - vals)) / np.max(np.abs(vals))))
            count += 1
    return SuiteResult("modal-roundtrip", worst <= tol, count, f"max rel err={worst:.3g}")


def free_stream(rng, tol: float = 1e-12) -> SuiteResult:
    from dglimit.solver import Mesh, SolverConfig, project, rhs

    gp = GasParams()
    worst = 0.0
    for dim in (1, 2):
        w = np.concatenate([[rng.uniform(0.5, 2)], rng.uniform(-1, 1, dim), [rng.uniform(0.5, 2)]])
        u = prim_to_cons(w, gp)
        mesh = Mesh(dim, (5,) * dim, (0.0,) * dim, (1.0,) * dim)
        fs = project(lambda x: np.broadcast_to(u, x.shape[:-1] + u.shape), mesh, 3)
        worst = max(worst, float(np.max(np.abs(rhs(fs, SolverConfig(degree=3, gas=gp))))))
    return SuiteResult("free-stream", worst <= tol, 2, f"max |rhs|={worst:.3g}")


def run_suites(seed: int, root: Optional[RootFn] = None) -> list[SuiteResult]:
    """Run every suite with generators spawned from ``seed``."""
    names = [
        lambda r: quadratic_oracle(r, root=root),
        illinois_contract,
        mean_invariance,
        state_roundtrip,
        modal_roundtrip,
        free_stream,
    ]
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(names))]
    out = []
    for fn, r in zip(names, rngs):
        t0 = time.perf_counter()
        res = fn(r)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
