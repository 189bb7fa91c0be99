"""Numba JIT kernel implementations (default backend).

Loops are serial on purpose: parallel reductions reorder floating-point
sums and would break the bit-level determinism the pipeline promises.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _reflect(i, n):
    # Symmetric reflection with the edge sample repeated; valid for
    # overhang < n (callers enforce radius < n).
    if i < 0:
        return -i - 1
    if i >= n:
        return 2 * n - i - 1
    return i


@njit(cache=True)
def sep_filter_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    height, width, channels = img.shape
    taps = kernel.size
    radius = taps // 2

    tmp = np.empty_like(img)
    for y in range(height):
        for x in range(width):
            for c in range(channels):
                acc = 0.0
                for t in range(taps):
                    yy = _reflect(y + t - radius, height)
                    acc += kernel[t] * img[yy, x, c]
                tmp[y, x, c] = acc

    out = np.empty_like(img)
    for y in range(height):
        for x in range(width):
            for c in range(channels):
                acc = 0.0
                for t in range(taps):
                    xx = _reflect(x + t - radius, width)
                    acc += kernel[t] * tmp[y, xx, c]
                out[y, x, c] = acc
    return out


@njit(cache=True)
def weighted_sum(stack: np.ndarray, weights: np.ndarray) -> np.ndarray:
    n, size = stack.shape
    out = np.zeros(size, dtype=np.float64)
    for i in range(n):
        w = weights[i]
        for j in range(size):
            out[j] += w * stack[i, j]
    return out
