"""Benchmark the histogram-accumulation kernel: compiled vs pure-Python backend.

The two backends are bit-identical by construction; this script reports only
speed. Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from urbantier._kernels import BACKEND
from urbantier._kernels._hist_py import build_histograms as hist_py

try:
    from urbantier._kernels._hist import build_histograms as hist_cy
except ImportError:
    hist_cy = None


def make_case(n_rows, n_features, n_bins, seed=0):
    rng = np.random.default_rng(seed)
    binned = rng.integers(0, n_bins, size=(n_rows, n_features),
                          dtype=np.uint16)
    grad = rng.normal(size=n_rows)
    hess = np.abs(rng.normal(size=n_rows)) + 0.1
    rows = np.arange(n_rows, dtype=np.int64)
    return np.ascontiguousarray(binned), grad, hess, rows, n_bins


def bench(fn, args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    print(f"active backend at import: {BACKEND}")
    if hist_cy is None:
        print("compiled extension unavailable; benchmarking python backend only")
    cases = [(2_000, 50, 256), (20_000, 50, 256), (20_000, 200, 256),
             (100_000, 200, 256)]
    header = f"{'rows':>8} {'features':>8} {'bins':>5} {'python':>10}"
    if hist_cy is not None:
        header += f" {'cython':>10} {'speedup':>8}"
    print(header)
    for n_rows, n_features, n_bins in cases:
        args = make_case(n_rows, n_features, n_bins)
        t_py = bench(hist_py, args)
        line = f"{n_rows:>8} {n_features:>8} {n_bins:>5} {t_py * 1e3:>8.2f}ms"
        if hist_cy is not None:
            t_cy = bench(hist_cy, args)
            line += f" {t_cy * 1e3:>8.2f}ms {t_py / t_cy:>7.1f}x"
            g_py, h_py, n_py = hist_py(*args)
            g_cy, h_cy, n_cy = hist_cy(*args)
            assert np.array_equal(g_py, g_cy)
            assert np.array_equal(h_py, h_cy)
            assert np.array_equal(n_py, n_cy)
        print(line)
    if hist_cy is not None:
        print("outputs verified bit-identical across backends")


if __name__ == "__main__":
    main()
