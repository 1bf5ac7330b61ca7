"""Timing comparison of the numba and pure-numpy kernel backends.

Runs each of the four d=1 hot loops on a representative workload and prints
per-backend wall time plus the speedup and the worst disagreement between the
two implementations.

Usage:
    python3 benchmarks/backend_bench.py [--repeats 5] [--n 2000] [--queries 20000]
"""

import argparse
import time

import numpy as np

from interprisk import backend
from interprisk import _kernels_numpy


def time_call(fn, args, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def build_workloads(n, n_queries, seed=0):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(-2.0, 2.0, n))
    ys = np.sin(2.0 * xs) + 0.5 * rng.standard_normal(n)
    qs = rng.uniform(-2.0, 2.0, n_queries)
    base_preds = np.cos(qs)
    res = ys - np.cos(xs)
    grid = np.linspace(-2.0, 2.0, 10_000)
    vals = np.maximum(np.abs(res) - 0.2, 0.0) ** 2
    idx = np.arange(n, dtype=np.int64)
    return {
        "lp_predict_1d": (xs, ys, qs, 0.4, 7, 0, 0.2, 1e-10),
        "knn_predict_1d": (xs, ys, qs, 5),
        "wrap_corrections_1d": (xs, res, np.cos(xs), idx, qs, base_preds, 0.05, 0.2, 1e-12),
        "window_max_mean_1d": (xs, vals, grid, 0.1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="timed repeats; best is kept")
    ap.add_argument("--n", type=int, default=2000, help="training points")
    ap.add_argument("--queries", type=int, default=20000, help="query points")
    args = ap.parse_args(argv)

    if not backend.HAS_NUMBA:
        raise SystemExit("numba backend unavailable; nothing to compare")
    from interprisk import _kernels_numba

    workloads = build_workloads(args.n, args.queries)

    # first calls trigger jit compilation; keep them out of the timings
    for name, wargs in workloads.items():
        getattr(_kernels_numba, name)(*wargs)

    print(f"n={args.n} training points, {args.queries} queries, best of {args.repeats}")
    header = f"{'kernel':<22} {'numpy':>10} {'numba':>10} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))
    for name, wargs in workloads.items():
        t_np, out_np = time_call(getattr(_kernels_numpy, name), wargs, args.repeats)
        t_nb, out_nb = time_call(getattr(_kernels_numba, name), wargs, args.repeats)
        if np.isscalar(out_np):
            diff = abs(out_np - out_nb)
        else:
            diff = float(np.max(np.abs(np.asarray(out_np) - np.asarray(out_nb))))
        print(
            f"{name:<22} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
            f"{t_np / t_nb:>7.1f}x {diff:>11.2e}"
        )


if __name__ == "__main__":
    main()
