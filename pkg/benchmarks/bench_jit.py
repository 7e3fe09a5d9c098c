#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-NumPy fallback.

The kernel implementation is chosen at import time from the environment
(``CONENAV_NO_NUMBA``), so each variant runs in its own subprocess.  The
workload is the committed 2D nine-start grid.

Usage: python benchmarks/bench_jit.py [--repeat N]
"""

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

WORKLOAD = r"""
import time
import conenav as cn
from conenav.cli import load_run_spec

spec = load_run_spec(r"{scenario}")
# warm-up triggers the JIT compile (or cache load) outside the timed region
cn.simulate(spec.scenario, spec.starts[0], None, spec.sim, tie_break=spec.tie_break)
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    for s in spec.starts:
        tr = cn.simulate(spec.scenario, s, None, spec.sim, tie_break=spec.tie_break)
        assert tr.status == "converged", tr.status
    best = min(best, time.perf_counter() - t0)
print("%s %.6f" % ("jit" if cn.NUMBA_ENABLED else "numpy", best))
"""


def run_variant(disable_numba: bool, repeat: int) -> tuple[str, float, float]:
    env = dict(os.environ)
    env["CONENAV_NO_NUMBA"] = "1" if disable_numba else "0"
    code = WORKLOAD.format(scenario=REPO / "scenarios" / "planar_disc.json", repeat=repeat)
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True)
    wall = time.perf_counter() - t0
    name, best = out.stdout.split()[-2:]
    return name, float(best), wall


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions per variant (best is reported)")
    args = parser.parse_args()
    print("workload: 9-start 2D grid, rk4, h=1e-3")
    results = {}
    for disable in (False, True):
        name, best, wall = run_variant(disable, args.repeat)
        results[name] = best
        print(f"  {name:6s} best of {args.repeat}: {best:8.3f} s   "
              f"(subprocess wall {wall:.1f} s incl. startup)")
    if "jit" in results and "numpy" in results:
        print(f"  speedup: {results['numpy'] / results['jit']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
