"""Compare the compiled and pure-Python causal-scan backends.

Usage:
    python3 benchmarks/backend_compare.py [--d 32] [--trials 3] \
        [--sizes 1024,2048,4096,8192,16384]

Prints per-size best wall times for both backends plus the speedup, and
checks that the two backends agree numerically.  The non-causal paths share
numpy BLAS and are not compared here.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lrpe import kernels
from lrpe.attention import phi
from lrpe.numerics import Rng, random_mat


def best_time(fn, trials: int) -> float:
    fn()  # warmup
    best = None
    for _ in range(trials):
        start = time.perf_counter_ns()
        fn()
        elapsed = time.perf_counter_ns() - start
        best = elapsed if best is None else min(best, elapsed)
    return best / 1e9


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, default=32)
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--sizes", default="1024,2048,4096,8192,16384")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not kernels.HAVE_COMPILED:
        print("compiled backend unavailable; timing the python backend only")

    print(f"{'n':>8} {'python_s':>12} {'compiled_s':>12} {'speedup':>9} {'max_diff':>12}")
    for n in sizes:
        rng = Rng(n)
        qf = phi(random_mat(rng, n, args.d))
        kf = phi(random_mat(rng, n, args.d))
        v = random_mat(rng, n, args.d)

        t_py = best_time(lambda: kernels.causal_scan(qf, kf, v, backend="python"), args.trials)
        if kernels.HAVE_COMPILED:
            t_cy = best_time(
                lambda: kernels.causal_scan(qf, kf, v, backend="compiled"), args.trials
            )
            numer_py, delta_py = kernels.causal_scan(qf, kf, v, backend="python")
            numer_cy, delta_cy = kernels.causal_scan(qf, kf, v, backend="compiled")
            diff = max(
                float(np.abs(numer_py - numer_cy).max()),
                float(np.abs(delta_py - delta_cy).max()),
            )
            print(f"{n:>8} {t_py:>12.6f} {t_cy:>12.6f} {t_py / t_cy:>8.1f}x {diff:>12.3e}")
        else:
            print(f"{n:>8} {t_py:>12.6f} {'-':>12} {'-':>9} {'-':>12}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
