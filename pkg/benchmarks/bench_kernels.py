#!/usr/bin/env python3
"""Benchmark the hot kernels: numba @njit path vs pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [--trials 1000000] [--alpha 8] [--reps 5]

Both paths live in crm._kernels; the numba variants are compiled on first
call (excluded from timing via a warmup pass). Results are medians over
`reps` repetitions. Checksum columns confirm the two paths agree bit for bit.
"""

import argparse
import time

import numpy as np

from crm import _kernels as K


def best_of(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--alpha", type=int, default=8)
    ap.add_argument("--beta", type=int, default=3)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    if K.backend() != "numba":
        print("numba backend unavailable (CRM_NUMBA=0 or import failure); "
              "benchmarking the numpy path against itself is pointless.")
        return 1

    k, a, b = args.trials, args.alpha, args.beta
    count = k * a
    rng = np.random.default_rng(0)
    w = rng.standard_normal((k, a))
    u = K.uniforms_np(42, 0, count)
    cdf = np.cumsum(np.full(500, 1 / 500.0))
    cols = K.rank_columns_np(w, b)
    seed64 = np.uint64(42)

    cases = [
        ("uniforms", lambda: K.uniforms_nb(seed64, 0, count),
         lambda: K.uniforms_np(42, 0, count)),
        ("uniform_indices", lambda: K.uniform_indices_nb(u, 500),
         lambda: K.uniform_indices_np(u, 500)),
        ("cdf_indices", lambda: K.cdf_indices_nb(u, cdf),
         lambda: K.cdf_indices_np(u, cdf)),
        ("row_argmin", lambda: K.row_argmin_nb(w),
         lambda: K.row_argmin_np(w)),
        ("rank_columns", lambda: K.rank_columns_nb(w, b),
         lambda: K.rank_columns_np(w, b)),
        ("row_smallest_sums", lambda: K.row_smallest_sums_nb(w, cols),
         lambda: K.row_smallest_sums_np(w, cols)),
    ]

    print(f"kernel benchmark: trials={k}, alpha={a}, beta={b}, reps={args.reps}")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}  identical")
    print("-" * 63)
    for name, nb_fn, np_fn in cases:
        nb_fn()  # warmup / compile
        t_nb = best_of(nb_fn, args.reps) * 1e3
        t_np = best_of(np_fn, args.reps) * 1e3
        same = np.array_equal(np.asarray(nb_fn()), np.asarray(np_fn()))
        print(f"{name:<20}{t_nb:>12.1f}{t_np:>12.1f}{t_np / t_nb:>8.2f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
