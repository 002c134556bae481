"""Timing comparison of the tridiagonal kernel backends.

Builds batches shaped like the solver's hot path (one system per
Fourier mode, N radial nodes), solves them with both implementations,
checks agreement, and reports the median wall time and speedup.

Usage: python3 benchmarks/bench_kernels.py [--repeats 7] [--sizes 33x512,33x2048,129x2048]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from exodisk.backend import HAVE_EXTENSION, backend_name, solve_tridiagonal


def make_batch(rng, M, N):
    """Diagonally dominant complex systems, like the implicit solves."""
    lo = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
    up = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
    di = 4.0 + np.abs(lo) + np.abs(up) + 1j * rng.normal(size=(M, N))
    rhs = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
    return lo, di, up, rhs


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--sizes", default="33x512,33x2048,129x2048")
    args = parser.parse_args()

    print(f"active backend: {backend_name()}")
    if not HAVE_EXTENSION:
        print("extension not built; timing the numpy path only")

    rng = np.random.default_rng(0)
    header = f"{'batch':>12} {'numpy':>12} {'cython':>12} {'speedup':>9} {'agree':>12}"
    print(header)
    print("-" * len(header))
    for size in args.sizes.split(","):
        M, N = (int(part) for part in size.lower().split("x"))
        lo, di, up, rhs = make_batch(rng, M, N)
        t_np = median_time(lambda: solve_tridiagonal(lo, di, up, rhs, force="numpy"), args.repeats)
        if HAVE_EXTENSION:
            t_cy = median_time(
                lambda: solve_tridiagonal(lo, di, up, rhs, force="cython"), args.repeats
            )
            x_np = solve_tridiagonal(lo, di, up, rhs, force="numpy")
            x_cy = solve_tridiagonal(lo, di, up, rhs, force="cython")
            agree = float(np.max(np.abs(x_np - x_cy)))
            print(f"{size:>12} {t_np*1e3:>10.3f}ms {t_cy*1e3:>10.3f}ms {t_np/t_cy:>8.2f}x {agree:>12.3e}")
        else:
            print(f"{size:>12} {t_np*1e3:>10.3f}ms {'-':>12} {'-':>9} {'-':>12}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
