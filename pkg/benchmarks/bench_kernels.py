"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from ensemblelab import kernels
from ensemblelab._accel import HAVE_NUMBA


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    x, p = rng.standard_normal((20000, 1)), rng.standard_normal((20000, 1))
    coeffs = np.array([0.0, 0.0, 0.5])
    samples = rng.standard_normal(100_000)
    n = 4096
    a = np.full(n, -0.3j)
    b = 1 + 0.6j + np.zeros(n)
    d = rng.standard_normal(n) + 0j
    grid = np.linspace(-1, 1, 8193)
    h = grid[1] - grid[0]
    padded = np.concatenate([[grid[0] - h], grid, [grid[-1] + h]]) ** 2 / 2
    return {
        "leapfrog 2e4 x 100": (lambda k: k(x, p, 1.0, coeffs, 1e-2, 100), "leapfrog"),
        "kde 1e5 on 512": (lambda k: k(samples, -7.0, 14 / 511, 512, 0.1, 0.0), "kde"),
        "tridiag 4096": (lambda k: k(a, b, a, d), "tridiag"),
        "hj flux 8193": (lambda k: k(padded, grid, h, kernels.CLASSICAL, 1.0, 1.0, coeffs), "hj_flux"),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (call, stem) in cases().items():
        t_np = best_of(lambda: call(getattr(kernels, f"{stem}_numpy")), args.repeat)
        if HAVE_NUMBA:
            nb = getattr(kernels, f"{stem}_numba")
            call(nb)
            t_nb = best_of(lambda: call(nb), args.repeat)
            print(f"{name:<22}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<22}{t_np:>12.4g}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
