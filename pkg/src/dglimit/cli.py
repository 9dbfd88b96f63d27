"""Command-line driver: ``limit-demo``, ``vortex`` and ``props``.

Exit codes: 0 success, 1 property failure, 2 I/O or usage error, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dglimit import __version__
from dglimit.cases import (
    VortexParams,
    demo_gas,
    linf_pressure_error,
    static_discontinuity_element,
    vortex_exact,
    vortex_ic,
)
from dglimit.element import eval_at, nodal_to_modal
from dglimit.euler import GasParams, all_specs, pressure, specific_entropy
from dglimit.limiter import LimiterConfig, Mode, limit_element

EXIT_OK, EXIT_PROPS, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3
OUTPUT_ENV = "DGLIMIT_OUTPUT_DIR"
MODES = {"linear": Mode.LINEARIZED, "nonlinear": Mode.NONLINEAR}


@dataclass
class RunConfig:
    command: str
    degree: int = 9
    elements: tuple = (20,)
    t_final: float = 20.0
    mode: str = "both"
    cfl: float = 0.1
    samples: int = 10000
    sigma_min: float = 0.1
    out: Optional[str] = None
    seed: int = 42

    def __post_init__(self):
        if self.command not in ("limit-demo", "vortex", "props"):
            raise ValueError(f"unknown command {self.command!r}")
        if self.mode not in ("linear", "nonlinear", "both"):
            raise ValueError(f"mode must be linear, nonlinear or both, got {self.mode!r}")
        self.elements = tuple(int(n) for n in np.atleast_1d(self.elements))
        positive = [self.degree, self.cfl, self.samples, self.sigma_min, *self.elements]
        if not all(v > 0 for v in positive) or self.t_final < 0 or self.seed < 0:
            raise ValueError("numeric settings must be positive")

    @property
    def modes(self) -> list[str]:
        return ["linear", "nonlinear"] if self.mode == "both" else [self.mode]


def fmt(v) -> str:
    """17 significant digits for floats; other values via ``str``."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse_cell(s: str):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


@dataclass
class CsvTable:
    """Header, rows and ``#``-prefixed metadata lines."""

    header: list
    rows: list = field(default_factory=list)
    metadata: list = field(default_factory=list)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.header):
                raise ValueError("table is not rectangular")

    def to_text(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata:
            buf.write(f"# {key}: {value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "CsvTable":
        lines = text.splitlines()
        meta = []
        while lines and lines[0].startswith("#"):
            key, _, value = lines.pop(0)[1:].strip().partition(": ")
            meta.append((key, value))
        reader = csv.reader(lines)
        header = next(reader)
        rows = [[_parse_cell(c) for c in r] for r in reader]
        return cls(header, rows, meta)

    def column(self, name: str) -> np.ndarray:
        j = self.header.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def meta(self, key: str) -> str:
        return dict(self.metadata)[key]


# --- limit demo -------------------------------------------------------------------

def demo_limited(sigma_min: float = 0.1, degree: int = 9):
    """Limit the static-discontinuity element in both modes.

    Returns ``(element, limited, alphas, gas)``. ``limited[mode]`` holds the
    density-then-pressure result (``"pressure"``) and the density-then-entropy
    result (``"entropy"``) plus the binding points of both (``"binding"``);
    ``alphas[mode]`` maps names to limiting factors,
    including the fully sequential density, pressure, entropy chain.
    """
    gp = GasParams(gamma=1.4, rho_min=demo_gas().rho_min, p_min=demo_gas().p_min,
                   sigma_min=sigma_min)
    e = static_discontinuity_element(gp, degree)
    rho_s, p_s, s_s = all_specs(gp)
    limited, alphas = {}, {}
    for name, mode in MODES.items():
        cfg = LimiterConfig(mode=mode)
        e1, (r1,) = limit_element(e, [rho_s], cfg, gp)
        ep, (rp,) = limit_element(e1, [p_s], cfg, gp)
        es, (rs,) = limit_element(e1, [s_s], cfg, gp)
        _, seq = limit_element(e, [rho_s, p_s, s_s], cfg, gp)
        limited[name] = {"pressure": ep, "entropy": es,
                         "binding": [float(r.argmin_x[0]) for r in (rp, rs) if r.alpha > 0]}
        alphas[name] = {"density": r1.alpha, "pressure": rp.alpha, "entropy": rs.alpha,
                        "sequential": [r.alpha for r in seq]}
    return e, limited, alphas, gp


def run_limit_demo(cfg: RunConfig) -> CsvTable:
    e, limited, alphas, gp = demo_limited(cfg.sigma_min, cfg.degree)
    # Binding points are added to the uniform samples so the sampled minima
    # of the limited fields reach the bounds.
    binding = sorted({b for name in MODES for b in limited[name]["binding"]})
    x = np.union1d(np.linspace(0.0, 1.0, cfg.samples), binding)
    pts = x[:, None]
    at = lambda el: eval_at(nodal_to_modal(el), pts)
    u0 = at(e)
    cols = {"x": x, "rho_unlim": u0[:, 0], "P_unlim": pressure(u0, gp),
            "sigma_unlim": specific_entropy(u0, gp)}
    for tag, name in (("lin", "linear"), ("nl", "nonlinear")):
        cols[f"P_{tag}"] = pressure(at(limited[name]["pressure"]), gp)
    for tag, name in (("lin", "linear"), ("nl", "nonlinear")):
        cols[f"sigma_{tag}"] = specific_entropy(at(limited[name]["entropy"]), gp)
    meta = [("version", __version__), ("command", "limit-demo"),
            ("config", f"degree={cfg.degree} samples={cfg.samples} sigma_min={cfg.sigma_min!r}")]
    meta.append(("binding_x", " ".join(fmt(b) for b in binding)))
    for name in MODES:
        a = alphas[name]
        for key in ("density", "pressure", "entropy"):
            meta.append((f"alpha_{name}_{key}", fmt(a[key])))
        meta.append((f"alpha_{name}_sequential", " ".join(fmt(v) for v in a["sequential"])))
    header = list(cols)
    rows = [list(r) for r in zip(*(cols[h].tolist() for h in header))]
    return CsvTable(header, rows, meta)


# --- vortex -------------------------------------------------------------------------

def vortex_error(mode: str, degree: int, n: int, t_final: float, cfl: float = 0.1,
                 gp: Optional[GasParams] = None, vp: Optional[VortexParams] = None) -> float:
    """L-infinity pressure error of one vortex run (positivity constraints only)."""
    from dglimit.solver import Mesh, SolverConfig, project, run

    gp = gp or GasParams()
    vp = vp or VortexParams()
    mesh = Mesh(2, (n, n), vp.lo, vp.hi)
    fs = project(lambda x: vortex_ic(x, vp, gp), mesh, degree)
    scfg = SolverConfig(degree=degree, t_final=t_final, cfl=cfl,
                        limiter=LimiterConfig(mode=MODES[mode]), gas=gp)
    fs = run(fs, scfg)
    return linf_pressure_error(fs, lambda x: vortex_exact(x, t_final, vp, gp), gp).value


def reduction_percent(err_nl: float, err_lin: float) -> float:
    """Relative change of the nonlinear error against the linear one."""
    if err_lin == 0.0:
        return 0.0 if err_nl == 0.0 else float("inf")
    return 100.0 * (err_nl - err_lin) / err_lin


def run_vortex(cfg: RunConfig) -> CsvTable:
    rows = []
    for n in cfg.elements:
        errs = {m: vortex_error(m, cfg.degree, n, cfg.t_final, cfg.cfl) for m in cfg.modes}
        for m in cfg.modes:
            red = (reduction_percent(errs["nonlinear"], errs["linear"])
                   if m == "nonlinear" and "linear" in errs else float("nan"))
            rows.append([m, cfg.degree, n, float(cfg.t_final), errs[m], red])
    header = ["mode", "degree", "N", "t_final", "linf_pressure_error", "error_reduction_percent"]
    meta = [("version", __version__), ("command", "vortex"),
            ("config", f"degree={cfg.degree} elements={' '.join(map(str, cfg.elements))} "
                       f"t_final={float(cfg.t_final)!r} mode={cfg.mode} cfl={cfg.cfl!r}")]
    return CsvTable(header, rows, meta)


# --- props ----------------------------------------------------------------------------

def run_props(cfg: RunConfig, root=None):
    """Run the property suites; returns ``(all_passed, table)``."""
    from dglimit.props import run_suites

    results = run_suites(cfg.seed, root=root)
    rows = [[r.name, "PASS" if r.passed else "FAIL", r.checks, r.detail] for r in results]
    meta = [("version", __version__), ("command", "props"), ("config", f"seed={cfg.seed}")]
    return all(r.passed for r in results), CsvTable(["suite", "status", "checks", "detail"], rows, meta)


# --- argument handling ----------------------------------------------------------------

DEFAULTS = {
    "limit-demo": dict(degree=9, samples=10000, sigma_min=0.1),
    "vortex": dict(degree=4, elements=(20,), t_final=20.0, mode="both", cfl=0.1),
    "props": dict(seed=42),
}
_TYPES = dict(degree=int, samples=int, sigma_min=float, t_final=float, cfl=float,
              seed=int, mode=str, out=str,
              elements=lambda s: tuple(int(v) for v in str(s).split()))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dglimit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI file; a section named after the command "
                                        "supplies defaults that flags override")
        p.add_argument("--out", help=f"output CSV (relative paths resolve under ${OUTPUT_ENV})")

    p = sub.add_parser("limit-demo", help="limit the static discontinuity element")
    p.add_argument("--degree", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--sigma-min", dest="sigma_min", type=float)
    common(p)

    p = sub.add_parser("vortex", help="near-vacuum vortex error table")
    p.add_argument("--degree", type=int)
    p.add_argument("--elements", type=int, nargs="+", help="elements per direction")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--mode", choices=["linear", "nonlinear", "both"])
    p.add_argument("--cfl", type=float)
    common(p)

    p = sub.add_parser("props", help="run the property and oracle suites")
    p.add_argument("--seed", type=int)
    common(p)
    return ap


def load_config(path: str, command: str) -> dict:
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    if not cp.has_section(command):
        return {}
    out = {}
    for key, value in cp.items(command):
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"unknown config key {key!r} in [{command}]")
        out[key] = _TYPES[key](value)
    return out


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS[ns.command])
    if ns.config:
        values.update(load_config(ns.config, ns.command))
    for key, value in vars(ns).items():
        if key not in ("command", "config") and value is not None:
            values[key] = value
    return RunConfig(command=ns.command, **values)


def output_path(out: Optional[str], command: str) -> Optional[str]:
    base = os.environ.get(OUTPUT_ENV)
    if out is None:
        return None if base is None else os.path.join(base, f"{command}.csv")
    return out if base is None or os.path.isabs(out) else os.path.join(base, out)


def emit(table: CsvTable, path: Optional[str]) -> None:
    text = table.to_text()
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    from dglimit.solver import SolverError

    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    status = EXIT_OK
    try:
        if cfg.command == "limit-demo":
            table = run_limit_demo(cfg)
        elif cfg.command == "vortex":
            table = run_vortex(cfg)
        else:
            ok, table = run_props(cfg)
            status = EXIT_OK if ok else EXIT_PROPS
            for row in table.rows:
                print(f"{row[1]} {row[0]}: {row[3]}", file=sys.stderr)
            print(f"{sum(r[1] == 'PASS' for r in table.rows)}/{len(table.rows)} suites passed",
                  file=sys.stderr)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        emit(table, output_path(cfg.out, cfg.command))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
