#!/usr/bin/env python3
"""Benchmark the route-planner hot kernels: numba JIT vs pure Python.

The package selects the JIT path automatically when numba imports (set
SWARMDNN_NO_NUMBA=1 to force the fallback everywhere); this script times
both paths directly on the same inputs and checks they agree bitwise.
"""

import itertools
import time

import numpy as np

from swarmdnn import _kernels


def make_instance(rng, n):
    xs = rng.uniform(0, 12000, n)
    ys = rng.uniform(0, 12000, n)
    zs = np.zeros(n)
    proc = rng.uniform(0, 480, n)
    return xs, ys, zs, proc


def bench_greedy(fn, xs, ys, zs, proc, k, rand, repeats):
    n = xs.shape[0]
    order = np.empty(n, dtype=np.int64)
    d = np.empty(n + 1)
    s = np.empty(n + 1)
    f = np.empty(n + 1)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(xs, ys, zs, proc, 6000.0, 6000.0, 3000.0, 20.0, 0.5, 0.5,
           k, 0, rand, order, d, s, f)
    return time.perf_counter() - t0, (order.copy(), f.copy())


def bench_orders(fn, xs, ys, zs, proc, orders, repeats):
    m = orders.shape[0]
    fit = np.empty(m)
    dist = np.empty(m)
    viol = np.empty(m, dtype=np.int64)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(xs, ys, zs, proc, 6000.0, 6000.0, 3000.0, 20.0, 0.5, 0.5,
           orders, fit, dist, viol)
    return time.perf_counter() - t0, fit.copy()


def main():
    print(f"numba available: {_kernels.NUMBA_ENABLED} "
          f"(SWARMDNN_NO_NUMBA disables)")
    rng = np.random.default_rng(0)

    print("\n-- greedy route construction (W=200, k=5, 200 repeats) --")
    xs, ys, zs, proc = make_instance(rng, 200)
    rand = rng.random(200 * 5 + 1)
    if _kernels.NUMBA_ENABLED:
        bench_greedy(_kernels.greedy_route, xs, ys, zs, proc, 5, rand, 1)  # compile
        t_jit, out_jit = bench_greedy(_kernels.greedy_route, xs, ys, zs, proc,
                                      5, rand, 200)
        print(f"  jit    : {t_jit:.3f} s")
    t_py, out_py = bench_greedy(_kernels.greedy_route_py, xs, ys, zs, proc,
                                5, rand, 200)
    print(f"  python : {t_py:.3f} s")
    if _kernels.NUMBA_ENABLED:
        assert np.array_equal(out_jit[0], out_py[0])
        assert np.array_equal(out_jit[1], out_py[1])
        print(f"  speedup: {t_py / t_jit:.1f}x (outputs bitwise identical)")

    print("\n-- permutation evaluation (8! = 40320 orders, 5 repeats) --")
    xs, ys, zs, proc = make_instance(rng, 8)
    orders = np.array(list(itertools.permutations(range(8))), dtype=np.int64)
    if _kernels.NUMBA_ENABLED:
        bench_orders(_kernels.eval_orders, xs, ys, zs, proc, orders[:10], 1)
        t_jit, fit_jit = bench_orders(_kernels.eval_orders, xs, ys, zs, proc,
                                      orders, 5)
        print(f"  jit    : {t_jit:.3f} s")
    t_py, fit_py = bench_orders(_kernels.eval_orders_py, xs, ys, zs, proc,
                                orders, 5)
    print(f"  python : {t_py:.3f} s")
    if _kernels.NUMBA_ENABLED:
        assert np.array_equal(fit_jit, fit_py)
        print(f"  speedup: {t_py / t_jit:.1f}x (outputs bitwise identical)")


if __name__ == "__main__":
    main()
