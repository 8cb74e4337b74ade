#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy/scipy fallback.

Run from the repo root (after an optional `python setup.py build_ext
--inplace` to get the native backend):

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from cnls._kernels import backends_available, reference

try:
    from cnls._kernels import _native as native
except ImportError:
    native = None


def _time(fn, *args, repeat=7):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench():
    rng = np.random.default_rng(42)
    n = 4096
    h = 0.05
    r = np.arange(1, n + 1) * h
    f = np.exp(-0.3 * r) * (1.0 + 0.1 * rng.standard_normal(n))
    dl = np.full(n - 1, -1.0 / h ** 2 + 1.0 / (r[1:] * h))
    du = np.full(n - 1, -1.0 / h ** 2 - 1.0 / (r[:-1] * h))
    d = np.full(n, 2.0 / h ** 2 + 0.7)
    rhs = rng.standard_normal(n)
    inside = r <= 40.0
    u = np.abs(np.exp(-0.5 * r) * rng.uniform(0.5, 1.5, n))
    v = np.abs(np.exp(-0.6 * r) * rng.uniform(0.5, 1.5, n))

    cases = [
        ("tridiag_solve (n=4096)",
         lambda impl: impl.tridiag_solve(dl, d, du, rhs)),
        ("radial_laplacian (n=4096)",
         lambda impl: impl.radial_laplacian(f, h)),
        ("truncated_quartic (n=4096)",
         lambda impl: impl.truncated_quartic(r, inside, u, v, 1.0, 1.0, 2.0, 0.2)),
        # near-separatrix height: both backends integrate the same ~12k steps
        ("rk4_shoot (near-separatrix)",
         lambda impl: impl.rk4_shoot(4.336159458112, 1.0, 1.0, 4.5e-4, 78000,
                                     False)),
    ]

    print(f"available backends: {', '.join(backends_available())}")
    header = f"{'kernel':34s} {'reference':>12s} {'native':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, runner in cases:
        t_ref = _time(lambda: runner(reference))
        if native is not None:
            t_nat = _time(lambda: runner(native))
            print(f"{name:34s} {t_ref * 1e3:10.3f}ms {t_nat * 1e3:10.3f}ms "
                  f"{t_ref / t_nat:8.1f}x")
        else:
            print(f"{name:34s} {t_ref * 1e3:10.3f}ms {'-':>12s} {'-':>9s}")

    # end-to-end: the scalar shooting oracle
    from cnls import shooting

    shooting._solve_separatrix.cache_clear()
    import cnls._kernels as kernels

    if native is not None:
        kernels.rk4_shoot = native.rk4_shoot
        t0 = time.perf_counter()
        shooting.scalar_ground_energy(1.0, 1.0)
        t_nat = time.perf_counter() - t0
    else:
        t_nat = None
    shooting._solve_separatrix.cache_clear()
    kernels.rk4_shoot = reference.rk4_shoot
    t0 = time.perf_counter()
    shooting.scalar_ground_energy(1.0, 1.0)
    t_ref = time.perf_counter() - t0
    if native is not None:
        kernels.rk4_shoot = native.rk4_shoot
        print(f"{'scalar oracle end-to-end':34s} {t_ref * 1e3:10.1f}ms "
              f"{t_nat * 1e3:10.1f}ms {t_ref / t_nat:8.1f}x")
    else:
        print(f"{'scalar oracle end-to-end':34s} {t_ref * 1e3:10.1f}ms "
              f"{'-':>12s} {'-':>9s}")


if __name__ == "__main__":
    bench()
