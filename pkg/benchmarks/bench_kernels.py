"""Compare the compiled and pure-numpy quadrature backends.

Runs three workloads that exercise the batched panel kernel from different
heights of the stack, times them under the current backend, then re-invokes
itself with OSCIMAX_NO_NUMBA=1 to collect the fallback numbers and prints a
side-by-side table.  Values are cross-checked between backends while
timing; a mismatch aborts the benchmark.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from oscimax._backend import backend_name
from oscimax.maximal import SearchConfig, maximal_value
from oscimax.oscquad import integral_increments, osc_integral
from oscimax.phase import CurvedPowerSum, LaurentPoly, Quadratic
from oscimax.testfns import char_fn, smooth_bump

_CHILD_ENV = "OSCIMAX_BENCH_CHILD"


def wl_osc_integral():
    """Single long oscillatory integral, adaptive panels."""
    f = char_fn(40.0)
    phase = Quadratic.unit()
    q = osc_integral(f, phase, 0.3, -40.0, 40.0, tol=1e-9)
    return complex(q.value)


def wl_increments():
    """Bulk increment sweep, the inner loop of the radius search."""
    f = char_fn(30.0)
    phase = CurvedPowerSum.single(2.5, 1.0)
    bounds = np.linspace(-30.0, 30.0, 2001)
    vals, _ = integral_increments(f, phase, 0.7, bounds)
    return complex(vals.sum())


def wl_maximal():
    """End-to-end radius searches at a handful of points."""
    f = smooth_bump(0.0, 1.0, 1.0)
    phase = LaurentPoly.monomial(3)
    cfg = SearchConfig(err_rel_goal=0.1, refine_passes=4)
    out = 0.0
    for x in (0.0, 0.5, 1.5, 4.0, 9.0):
        out += maximal_value(f, phase, x, cfg).value
    return out


WORKLOADS = [
    ("osc_integral 80-unit window", wl_osc_integral),
    ("increments x2000", wl_increments),
    ("maximal_value x5", wl_maximal),
]


def run_suite(repeat: int):
    results = {}
    for name, fn in WORKLOADS:
        fn()  # warm-up: jit compile / cache priming
        best = float("inf")
        value = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            value = fn()
            best = min(best, time.perf_counter() - t0)
        results[name] = {"seconds": best, "value": [np.real(value), np.imag(value)]}
    return results


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args()

    mine = run_suite(ns.repeat)
    if os.environ.get(_CHILD_ENV):
        print(json.dumps(mine))
        return 0

    env = dict(os.environ, OSCIMAX_NO_NUMBA="1", **{_CHILD_ENV: "1"})
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--repeat", str(ns.repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    other = json.loads(proc.stdout)

    here = backend_name()
    there = "numpy" if here == "numba" else here
    width = max(len(n) for n, _ in WORKLOADS)
    print(f"{'workload':<{width}}  {here:>12}  {there:>12}  {'speedup':>8}")
    for name, _ in WORKLOADS:
        a, b = mine[name], other[name]
        if not np.allclose(a["value"], b["value"], rtol=1e-8, atol=1e-10):
            print(f"backend mismatch on {name!r}: {a['value']} vs {b['value']}",
                  file=sys.stderr)
            return 1
        ratio = b["seconds"] / a["seconds"]
        print(f"{name:<{width}}  {a['seconds'] * 1e3:>10.2f}ms  "
              f"{b['seconds'] * 1e3:>10.2f}ms  {ratio:>7.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
