"""Pure-NumPy kernel implementations (fallback backend).

Accumulation order matches the numba twins tap-for-tap: the filter loops
over kernel taps adding one shifted, scaled slab at a time, and the
weighted sum adds one scaled layer at a time.
"""

from __future__ import annotations

import numpy as np


def sep_filter_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    height, width = img.shape[:2]
    radius = kernel.size // 2

    padded = np.pad(img, ((radius, radius), (0, 0), (0, 0)), mode="symmetric")
    tmp = np.zeros_like(img)
    for t in range(kernel.size):
        tmp += kernel[t] * padded[t:t + height]

    padded = np.pad(tmp, ((0, 0), (radius, radius), (0, 0)), mode="symmetric")
    out = np.zeros_like(img)
    for t in range(kernel.size):
        out += kernel[t] * padded[:, t:t + width]
    return out


def weighted_sum(stack: np.ndarray, weights: np.ndarray) -> np.ndarray:
    out = np.zeros(stack.shape[1], dtype=np.float64)
    for i in range(stack.shape[0]):
        out += weights[i] * stack[i]
    return out
