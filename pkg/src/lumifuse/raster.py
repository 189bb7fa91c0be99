"""Raster data model: 3-channel floating-point images in nominal [0, 1].

Samples are float64 and are allowed to leave [0, 1] during arithmetic
(fusion weights may be negative); clamping happens only at the export and
metric boundaries. Rasters are immutable after construction, so sharing
them across threads or reusing them in several pipelines is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Raster:
    """Immutable (height, width, 3) float64 image, channels in R, G, B order."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"raster data must have shape (H, W, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"raster must be at least 1x1, got {arr.shape[:2]}")
        arr = np.array(arr, dtype=np.float64, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def full(cls, height: int, width: int, value) -> "Raster":
        """Constant raster; `value` is a scalar or an (r, g, b) triple."""
        arr = np.empty((height, width, 3), dtype=np.float64)
        arr[:] = np.asarray(value, dtype=np.float64)
        return cls(arr)

    def clamped(self) -> "Raster":
        """Copy with every sample clipped to [0, 1]."""
        return Raster(np.clip(self.data, 0.0, 1.0))


def same_shape(a: Raster, b: Raster) -> bool:
    return a.data.shape == b.data.shape


def require_same_shape(a: Raster, b: Raster, context: str = "operation") -> None:
    if not same_shape(a, b):
        raise ValueError(
            f"{context} requires identical dimensions, got "
            f"{a.height}x{a.width} and {b.height}x{b.width}"
        )


def mean_luminance(img: Raster) -> float:
    """Arithmetic mean over all samples of all channels, before any clamp.

    Linear in the pixel data, so the mean of a weighted sum of rasters is
    the weighted sum of their means. With fusion weights summing to 1 this
    is what keeps the fused image's overall brightness pinned to the
    inputs' weighted brightness.
    """
    return float(img.data.mean())
