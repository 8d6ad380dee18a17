"""Benchmark the numba kernels against their numpy fallbacks.

Run: python benchmarks/bench_kernels.py
(Set POTMO_NUMBA=0 to check what the package would do without numba.)
"""
from __future__ import annotations

import time

import numpy as np

from potmo import kernels


def _time(fn, *args, n_warmup=2, n_runs=7):
    for _ in range(n_warmup):
        fn(*args)
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return np.mean(times) * 1000, np.std(times) * 1000


def _print(name, numba_ms, numpy_ms):
    nb, nb_sd = numba_ms
    npy, np_sd = numpy_ms
    speedup = npy / nb if nb > 0 else float("inf")
    print(f"{name:<32} numba {nb:9.3f} +- {nb_sd:6.3f} ms | numpy {npy:9.3f} +- {np_sd:6.3f} ms | {speedup:6.2f}x")


def bench_pareto_mask(rng):
    print("-- pareto_mask (front filtering) --")
    for n, d in ((256, 5), (1024, 5), (4096, 5)):
        m = np.ascontiguousarray(rng.uniform(0, 10, size=(n, d)))
        _print(
            f"pareto_mask n={n} d={d}",
            _time(kernels._pareto_mask_nb, m),
            _time(kernels._pareto_mask_np, m),
        )


def bench_min_lex(rng):
    print("-- min_lex_row (queue priority) --")
    for n in (1024, 65536):
        m = np.ascontiguousarray(rng.integers(0, 4, size=(n, 5)).astype(float))
        _print(
            f"min_lex_row n={n}",
            _time(kernels._min_lex_row_nb, m),
            _time(kernels._min_lex_row_np, m),
        )


def bench_traction(rng):
    print("-- traction_energy_batch (cost bins) --")
    for n in (10_000, 1_000_000):
        L = np.ascontiguousarray(rng.uniform(10, 3000, n))
        s = np.ascontiguousarray(rng.uniform(-0.3, 0.3, n))
        v = np.ascontiguousarray(rng.uniform(1, 14, n))
        args = (L, s, v, 2500.0, 0.01, 3.0, 0.85, 0.6)
        _print(
            f"traction_batch n={n}",
            _time(kernels._traction_batch_nb, *args),
            _time(kernels._traction_batch_np, *args),
        )


def main():
    if not kernels.HAS_NUMBA:
        print("numba is not importable; only the numpy path exists here.")
        return
    print(f"active path at import: {'numba' if kernels.USE_NUMBA else 'numpy'} (POTMO_NUMBA)")
    rng = np.random.default_rng(0)
    bench_pareto_mask(rng)
    bench_min_lex(rng)
    bench_traction(rng)


if __name__ == "__main__":
    main()
