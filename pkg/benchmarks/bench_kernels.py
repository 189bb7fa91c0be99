#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot primitives (separable symmetric-reflect filtering and
stacked weighted summation) plus a full SSIM-style pass (five filtered
fields) on a 512x512x3 float64 image. The numba path is warmed once so
JIT compilation is excluded from the timings.

Usage: python benchmarks/bench_kernels.py [--size 512] [--repeats 20]
"""

import argparse
import time

import numpy as np

from lumifuse.kernels import _numpy as numpy_impl
from lumifuse.kernels import gaussian_kernel1d

try:
    from lumifuse.kernels import _numba as numba_impl
except ImportError:
    numba_impl = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _ssim_fields(impl, a, b, kernel):
    impl.sep_filter_reflect(a, kernel)
    impl.sep_filter_reflect(b, kernel)
    impl.sep_filter_reflect(a * a, kernel)
    impl.sep_filter_reflect(b * b, kernel)
    impl.sep_filter_reflect(a * b, kernel)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    a = rng.random((args.size, args.size, 3))
    b = rng.random((args.size, args.size, 3))
    stack = rng.random((3, args.size * args.size * 3))
    weights = np.array([0.16, 0.40, 0.44])
    kernel = gaussian_kernel1d(1.5, 5)

    backends = [("numpy", numpy_impl)]
    if numba_impl is not None:
        # Warm the JIT so compile time stays out of the measurements.
        _ssim_fields(numba_impl, a, b, kernel)
        numba_impl.weighted_sum(stack, weights)
        backends.append(("numba", numba_impl))
    else:
        print("numba not importable; benchmarking the numpy path only")

    cases = [
        ("sep_filter 11-tap", lambda impl: impl.sep_filter_reflect(a, kernel)),
        ("weighted_sum n=3", lambda impl: impl.weighted_sum(stack, weights)),
        ("ssim fields (5 filters)", lambda impl: _ssim_fields(impl, a, b, kernel)),
    ]

    print(f"image {args.size}x{args.size}x3 float64, best of {args.repeats} runs")
    header = f"{'kernel':<26}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, runner in cases:
        times = [_time(lambda impl=impl: runner(impl), args.repeats)
                 for _, impl in backends]
        row = f"{label:<26}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
