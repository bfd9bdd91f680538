"""Time the jitted kernels against their numpy twins.

Run from the repo root:

    python benchmarks/bench_kernels.py

Shapes mirror the default simulation (K=10 devices, N=5 antennas, 64
subcarriers) plus one larger setting to show where compilation pays off.
"""
from __future__ import annotations

import time

import numpy as np

from otafl import kernels


def timeit(fn, *args, repeat: int = 20) -> float:
    fn(*args)  # warm up (and trigger compilation for the jitted variant)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench(label: str, pairs: list[tuple[str, object, object, tuple]]) -> None:
    print(f"\n{label}")
    print(f"  {'kernel':<26} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, np_fn, nb_fn, args in pairs:
        t_np = timeit(np_fn, *args)
        if nb_fn is None:
            print(f"  {name:<26} {t_np * 1e3:>9.3f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_nb = timeit(nb_fn, *args)
        print(f"  {name:<26} {t_np * 1e3:>9.3f}ms {t_nb * 1e3:>9.3f}ms "
              f"{t_np / t_nb:>7.2f}x")


def cnormal(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def make_args(k: int, n: int, l: int, f: int, trials: int, rng: np.random.Generator):
    tap_dft = cnormal(rng, (k, n, l, f))
    phases = cnormal(rng, (k, n, l, f))
    taps = cnormal(rng, (k, n, l, f))
    bodies = cnormal(rng, (k, n, l, f))
    pair_h = cnormal(rng, (trials, n, k))
    pair_s = rng.standard_normal((trials, k - 1))
    cross_a = cnormal(rng, (trials, n, k))
    cross_b = cnormal(rng, (trials, n, k))
    cross_s = rng.standard_normal((trials, k))
    return tap_dft, phases, taps, bodies, pair_h, pair_s, cross_a, cross_b, cross_s


def main() -> None:
    rng = np.random.default_rng(0)
    if not kernels.HAS_NUMBA:
        print("numba unavailable, timing the numpy path only")

    for label, (k, n, l, f, trials) in {
        "default shapes (K=10, N=5, F=64, 20k trials)": (10, 5, 1, 64, 20_000),
        "wide shapes (K=40, N=16, L=4, F=256, 50k trials)": (40, 16, 4, 256, 50_000),
    }.items():
        tap_dft, phases, taps, bodies, pair_h, pair_s, cross_a, cross_b, cross_s = \
            make_args(k, n, l, f, trials, rng)
        pairs = [
            ("effective_channel_fill",
             kernels.effective_channel_fill_np,
             kernels.effective_channel_fill_nb if kernels.HAS_NUMBA else None,
             (tap_dft, phases)),
            ("tap_reduce",
             kernels.tap_reduce_np,
             kernels.tap_reduce_nb if kernels.HAS_NUMBA else None,
             (taps, bodies)),
            ("pair_product_sq_sum",
             kernels.pair_product_sq_sum_np,
             kernels.pair_product_sq_sum_nb if kernels.HAS_NUMBA else None,
             (pair_h, pair_s)),
            ("cross_subcarrier_sq_sum",
             kernels.cross_subcarrier_sq_sum_np,
             kernels.cross_subcarrier_sq_sum_nb if kernels.HAS_NUMBA else None,
             (cross_a, cross_b, cross_s)),
        ]
        bench(label, pairs)


if __name__ == "__main__":
    main()
