"""Cache of long vortex runs for the acceptance report.

Entries are keyed by the run parameters and a hash of the numerical source
files, so any change to the discretization or limiter forces a recompute.
Set ``DGLIMIT_RECOMPUTE=1`` to ignore the cache.
"""

import hashlib
import json
import os
import pathlib
import sys
import time

from dglimit.cli import vortex_error

SRC = pathlib.Path(__file__).resolve().parents[1] / "src" / "dglimit"
NUMERICS = ("element.py", "euler.py", "limiter.py", "solver.py", "cases.py")
CACHE = pathlib.Path(os.environ.get("DGLIMIT_CACHE_DIR",
                                    pathlib.Path(__file__).resolve().parents[1] / ".acceptance_cache"))


def source_hash() -> str:
    h = hashlib.sha256()
    for name in NUMERICS:
        h.update((SRC / name).read_bytes())
    return h.hexdigest()[:16]


def cached_error(mode: str, degree: int, n: int, t_final: float) -> dict:
    key = f"{mode}-p{degree}-n{n}-t{t_final:g}-{source_hash()}"
    path = CACHE / f"{key}.json"
    if path.exists() and os.environ.get("DGLIMIT_RECOMPUTE") != "1":
        return json.loads(path.read_text())
    t0 = time.perf_counter()
    err = vortex_error(mode, degree, n, t_final)
    out = {"mode": mode, "degree": degree, "N": n, "t_final": t_final,
           "error": err, "seconds": time.perf_counter() - t0, "key": key}
    CACHE.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=1))
    return out


if __name__ == "__main__":
    # python tests/vortex_cache.py DEGREE N T MODE...
    degree, n, t = int(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3])
    for mode in sys.argv[4:]:
        print(cached_error(mode, degree, n, t), flush=True)
