"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_backends.py [--repeat 5]

Times the two hot kernels (EM weight updates and sequential permutation
sampling) on synthetic instances of increasing size and prints the speedup
of the compiled extension over the reference implementation.
"""

import argparse
import time

import numpy as np

from npeb._kernels import fallback
from npeb.mixture import logpdf_matrix

try:
    from npeb._kernels import _core
except ImportError:
    _core = None


def em_case(n, m, seed=0):
    rng = np.random.default_rng(seed)
    theta = rng.choice([-2.0, 2.0], size=n)
    y = theta + rng.standard_normal(n)
    grid = np.linspace(y.min(), y.max(), m)
    logpdf = logpdf_matrix(y, grid, 1.0)
    shift = logpdf.max(axis=1)
    like = np.ascontiguousarray(np.exp(logpdf - shift[:, None]))
    w0 = np.full(m, 1.0 / m)
    return like, shift, w0


def perm_case(n, nb, seed=0):
    rng = np.random.default_rng(seed)
    theta = rng.normal(0, 2, n)
    y = theta + rng.standard_normal(n)
    logpdf = np.ascontiguousarray(logpdf_matrix(y, theta, 1.0))
    rowmax = np.ascontiguousarray(logpdf.max(axis=1))
    prob = np.ascontiguousarray(np.exp(logpdf - rowmax[:, None]))
    u = rng.random((nb, n))
    perms = np.empty((nb, n), dtype=np.int64)
    logw = np.empty(nb)
    return logpdf, rowmax, prob, u, perms, logw


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _core is None:
        print("compiled extension not available; nothing to compare")
        return

    print(f"{'kernel':<28}{'size':<22}{'numpy':>10}{'cython':>10}{'speedup':>9}")
    for n, m, iters in ((100, 300, 500), (500, 1000, 200), (2000, 3000, 50)):
        like, shift, w0 = em_case(n, m)
        t_np = best_of(lambda: fallback.em_loop(like, shift, w0, iters, 0.0),
                       args.repeat)
        t_cy = best_of(lambda: _core.em_loop(like, shift, w0, iters, 0.0),
                       args.repeat)
        print(f"{'em_loop':<28}{f'n={n} m={m} it={iters}':<22}"
              f"{t_np:>9.3f}s{t_cy:>9.3f}s{t_np / t_cy:>8.1f}x")

    for n, nb in ((30, 20_000), (100, 20_000), (300, 5_000)):
        case_np = perm_case(n, nb)
        case_cy = perm_case(n, nb)
        t_np = best_of(lambda: fallback.perm_sample(*case_np), args.repeat)
        t_cy = best_of(lambda: _core.perm_sample(*case_cy), args.repeat)
        print(f"{'perm_sample':<28}{f'n={n} B={nb}':<22}"
              f"{t_np:>9.3f}s{t_cy:>9.3f}s{t_np / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
