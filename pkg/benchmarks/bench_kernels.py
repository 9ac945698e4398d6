"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--sizes 100,300,1000] [--repeat 5]

Also times a full 200-iteration denoising run per backend.
"""
import argparse
import time

import numpy as np

from lapdefense import kernels
from lapdefense._accel import HAS_NUMBA


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def solver_loop(table, w, X, I, J, n, iters=200):
    # same projected iteration as run_denoise, driven by one backend's kernels
    delta = table["pair_distances"](X, I, J, 2.4)
    c = table["adjoint_vector"](table["laplacian_matrix"](w, n)) - 0.5 * delta
    eta = 1.0 / (2 * n)
    for _ in range(iters):
        w = np.maximum(w - eta * (table["lstar_l"](w, I, J, n) - c), 0.0)
    return w


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,300,1000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dim", type=int, default=16)
    args = ap.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    nb, npy = kernels.NUMBA_KERNELS, kernels.NUMPY_KERNELS
    print(f"{'n':>6} {'kernel':<18} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        rng = np.random.default_rng(n)
        I, J = kernels.full_pairs(n)
        w = rng.random(I.size)
        Y = rng.standard_normal((n, n))
        X = rng.standard_normal((n, args.dim))
        calls = {
            "laplacian_matrix": lambda t: t["laplacian_matrix"](w, n),
            "adjoint_vector": lambda t: t["adjoint_vector"](Y),
            "lstar_l": lambda t: t["lstar_l"](w, I, J, n),
            "pair_distances": lambda t: t["pair_distances"](X, I, J, 2.4),
        }
        if n <= 300:
            calls["solver_200_iters"] = lambda t: solver_loop(t, w, X, I, J, n)
        for name, call in calls.items():
            call(nb)  # compile outside the timed region
            a = best_of(lambda: call(nb), args.repeat)
            b = best_of(lambda: call(npy), args.repeat)
            print(f"{n:>6} {name:<18} {1e3 * a:>10.3f} {1e3 * b:>10.3f} {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
