#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy reference.

Run from the repository root after an in-place extension build:

    python3 setup.py build_ext --inplace
    PYTHONPATH=src python3 benchmarks/bench_kernels.py
"""
from __future__ import annotations

import time

import numpy as np

from sigpole._accel import backend_name, reference
from sigpole.pairings import PairPartition
from sigpole.quadrature import l_direct_mc

try:
    from sigpole._accel import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pair_kernel() -> None:
    print("pair power product (N samples, k pairs, exponent -0.5)")
    print(f"{'N':>10} {'k':>3} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n_samples, k in ((100_000, 1), (100_000, 4), (1_000_000, 2), (1_000_000, 9)):
        s = np.sort(rng.random((n_samples, 2 * k)), axis=1)
        a = np.arange(0, 2 * k, 2)
        b = np.arange(1, 2 * k + 1, 2)
        t_np = timeit(reference.pair_power_product, s, a, b, -0.5)
        if _ckernels is None:
            print(f"{n_samples:>10} {k:>3} {t_np*1e3:>9.1f}ms {'absent':>10}")
            continue
        t_cy = timeit(_ckernels.pair_power_product, s, a, b, -0.5)
        print(
            f"{n_samples:>10} {k:>3} {t_np*1e3:>9.1f}ms {t_cy*1e3:>9.1f}ms "
            f"{t_np/t_cy:>7.2f}x"
        )


def bench_power_kernel() -> None:
    print("\npower product (N rows, m columns, mixed exponents)")
    print(f"{'N':>10} {'m':>3} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    rng = np.random.default_rng(1)
    for n_rows, m in ((100_000, 7), (500_000, 15), (1_000_000, 15)):
        bases = rng.random((n_rows, m)) + 0.01
        expos = rng.uniform(-1, 2, m)
        t_np = timeit(reference.power_product, bases, expos)
        if _ckernels is None:
            print(f"{n_rows:>10} {m:>3} {t_np*1e3:>9.1f}ms {'absent':>10}")
            continue
        t_cy = timeit(_ckernels.power_product, bases, expos)
        print(
            f"{n_rows:>10} {m:>3} {t_np*1e3:>9.1f}ms {t_cy*1e3:>9.1f}ms "
            f"{t_np/t_cy:>7.2f}x"
        )


def bench_end_to_end() -> None:
    print(f"\nend-to-end Monte Carlo (backend: {backend_name()})")
    p = PairPartition([(1, 6), (2, 4), (3, 7), (5, 9), (8, 10)])
    t0 = time.perf_counter()
    r = l_direct_mc(p, 0.8, samples=1_000_000, seed=1)
    dt = time.perf_counter() - t0
    print(f"  k=5 direct MC, 1e6 samples: {dt:.2f}s  value={r.value:.6e}")
    print("  (set SIGPOLE_NO_ACCEL=1 to force the numpy backend)")


if __name__ == "__main__":
    print(f"active backend: {backend_name()}\n")
    bench_pair_kernel()
    bench_power_kernel()
    bench_end_to_end()
