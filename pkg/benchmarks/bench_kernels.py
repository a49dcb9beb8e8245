#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-NumPy fallback.

Times the two hot operations (nearest-centroid assignment and RBF Gram
construction) at pipeline-realistic shapes, then a full codebook fit.
Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from statebag import _core_py
from statebag import codebook as cb

try:
    from statebag import _core
except ImportError:
    _core = None


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_row(name, make_call):
    py_time = best_of(make_call(_core_py))
    if _core is None:
        print(f"{name:<38} python={py_time * 1e3:8.2f} ms   cython=<not built>")
        return
    cy_time = best_of(make_call(_core))
    print(f"{name:<38} python={py_time * 1e3:8.2f} ms   "
          f"cython={cy_time * 1e3:8.2f} ms   speedup={py_time / cy_time:5.1f}x")


def main():
    rng = np.random.default_rng(0)
    segments = np.ascontiguousarray(rng.normal(size=(7200, 49)))   # 600 videos x 12 segments
    centroids = np.ascontiguousarray(rng.normal(size=(12, 49)))
    histograms = np.ascontiguousarray(rng.normal(size=(360, 12)))  # train-split histograms

    print(f"compiled core available: {_core is not None}\n")
    bench_row("assign_nearest (7200x49 vs 12)",
              lambda impl: lambda: impl.assign_nearest(segments, centroids))
    bench_row("pairwise_sqdist (7200x49 vs 12)",
              lambda impl: lambda: impl.pairwise_sqdist(segments, centroids))
    bench_row("rbf_gram (360x360, 12 dims)",
              lambda impl: lambda: impl.rbf_gram(histograms, histograms, 0.01))

    # whole codebook fit through the dispatcher (whichever backend is active)
    from statebag import kernels

    fit_time = best_of(lambda: cb.fit_codebook(segments, 12, seed=0), repeats=3)
    print(f"\nfit_codebook (K=12) via active backend [{kernels.BACKEND}]: "
          f"{fit_time * 1e3:.1f} ms")
    print("force a backend with STATEBAG_KERNELS=python|cython")


if __name__ == "__main__":
    main()
