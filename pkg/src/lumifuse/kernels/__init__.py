"""Numeric kernels with a selectable backend.

Two interchangeable implementations exist: a Numba JIT backend (the default
whenever numba imports) and a pure-NumPy backend. Set the environment
variable ``LUMIFUSE_BACKEND`` to ``numpy`` or ``numba`` before import to
force a choice; unset (or ``auto``) picks numba when available and falls
back to numpy otherwise.

Both backends implement the same arithmetic in the same accumulation order,
so their outputs agree to the last bit in practice; the test suite pins
them to within 1e-12. Run ``python benchmarks/bench_kernels.py`` for a
side-by-side timing comparison.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy

_ENV_VAR = "LUMIFUSE_BACKEND"


def _select():
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'numba', 'numpy', or 'auto', got {requested!r}"
        )
    if requested == "numpy":
        return _numpy, "numpy"
    try:
        from . import _numba
    except ImportError:
        if requested == "numba":
            raise
        return _numpy, "numpy"
    return _numba, "numba"


_impl, _backend_name = _select()


def active_backend() -> str:
    """Name of the backend selected at import time: 'numba' or 'numpy'."""
    return _backend_name


def gaussian_kernel1d(sigma: float, radius: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps exp(-x^2 / (2 sigma^2)) for x in [-radius, radius]."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def sep_filter_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable correlation of an (H, W, C) array along H, then W.

    Borders use symmetric reflection (the edge sample is repeated:
    ``d c b a | a b c d``, np.pad's 'symmetric' mode). The kernel must be
    1-D with odd length, and its radius must be smaller than both image
    dimensions so a single reflection covers the overhang.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    if img.ndim != 3:
        raise ValueError(f"expected an (H, W, C) array, got shape {img.shape}")
    if kernel.ndim != 1 or kernel.size % 2 == 0:
        raise ValueError(f"kernel must be 1-D with odd length, got shape {kernel.shape}")
    radius = kernel.size // 2
    if radius >= img.shape[0] or radius >= img.shape[1]:
        raise ValueError(
            f"kernel radius {radius} too large for image {img.shape[0]}x{img.shape[1]}"
        )
    return _impl.sep_filter_reflect(img, kernel)


def weighted_sum(stack: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted sum over the leading axis of an (n, ...) stack.

    Accumulates in index order (i = 0, 1, ...), so the result is
    deterministic for a fixed backend.
    """
    stack = np.ascontiguousarray(stack, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.ndim != 1 or stack.shape[0] != weights.size:
        raise ValueError(
            f"stack of {stack.shape[0]} layers does not match {weights.size} weights"
        )
    flat = stack.reshape(stack.shape[0], -1)
    return _impl.weighted_sum(flat, weights).reshape(stack.shape[1:])
