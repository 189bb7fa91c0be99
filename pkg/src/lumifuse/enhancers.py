"""Deterministic stand-in enhancement operators and synthetic degradation.

Five classical operators play the role of learned low-light enhancement
methods so the fusion pipeline runs at desk scale without any pretrained
network: identity, global gamma, global linear stretch, per-channel
histogram equalization, and a log-domain center-surround (retinex-style)
filter. They were chosen to be mutually dissimilar - a global tone curve,
a rank-based remap, and a spatial-frequency operator - so their outputs
span usefully different directions when fused.

All randomness flows through numpy's PCG64 generator
(np.random.default_rng) seeded explicitly; the same seed always reproduces
the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .kernels import gaussian_kernel1d, sep_filter_reflect
from .raster import Raster

ENHANCER_KINDS = ("identity", "gamma", "linear_stretch", "hist_equalize", "log_retinex")

_REQUIRED_PARAMS = {
    "identity": (),
    "gamma": ("gamma",),
    "linear_stretch": (),
    "hist_equalize": (),
    "log_retinex": ("blur_sigma",),
}

_MAX_SEED = 2 ** 64


def _validate_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


@dataclass(frozen=True)
class EnhancerSpec:
    """One stand-in enhancement operator plus its parameters."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ENHANCER_KINDS:
            raise ValueError(
                f"unknown enhancer kind {self.kind!r}, expected one of {ENHANCER_KINDS}"
            )
        params = dict(self.params)
        required = _REQUIRED_PARAMS[self.kind]
        for name in required:
            if name not in params:
                raise ValueError(f"enhancer {self.kind!r} requires parameter {name!r}")
        for name in params:
            if name not in required:
                raise ValueError(f"enhancer {self.kind!r} got unexpected parameter {name!r}")
        if self.kind == "gamma" and not params["gamma"] > 0:
            raise ValueError(f"gamma exponent must be positive, got {params['gamma']}")
        if self.kind == "log_retinex" and not params["blur_sigma"] > 0:
            raise ValueError(f"blur_sigma must be positive, got {params['blur_sigma']}")
        object.__setattr__(self, "params", {k: float(v) for k, v in params.items()})

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "EnhancerSpec":
        return cls(kind=payload.get("kind"), params=payload.get("params", {}))


@dataclass(frozen=True)
class DegradeSpec:
    """Synthetic low-light degradation: clamp(scale * v^gamma_d + gaussian noise)."""

    gamma_d: float
    scale: float
    noise_sigma: float
    seed: int

    def __post_init__(self):
        if not self.gamma_d >= 1.0:
            raise ValueError(f"gamma_d must be >= 1, got {self.gamma_d}")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must be in (0, 1], got {self.scale}")
        if not self.noise_sigma >= 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        object.__setattr__(self, "seed", _validate_seed(self.seed))

    def to_json_dict(self) -> dict:
        return {
            "gamma_d": self.gamma_d,
            "scale": self.scale,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "DegradeSpec":
        try:
            return cls(
                gamma_d=payload["gamma_d"],
                scale=payload["scale"],
                noise_sigma=payload["noise_sigma"],
                seed=payload.get("seed", 0),
            )
        except KeyError as exc:
            raise ValueError(f"degrade spec missing field {exc}") from exc


def gaussian_blur(img: Raster, sigma: float) -> Raster:
    """Per-channel Gaussian blur with symmetric border reflection.

    The kernel radius is ceil(3 * sigma), capped at dimension - 1 so a
    single border reflection always covers the overhang.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = max(1, min(int(math.ceil(3.0 * sigma)), img.height - 1, img.width - 1))
    kernel = gaussian_kernel1d(sigma, radius)
    return Raster(sep_filter_reflect(img.data, kernel))


def _stretch_array(data: np.ndarray, what: str) -> np.ndarray:
    lo = float(data.min())
    hi = float(data.max())
    if hi <= lo:
        raise ValueError(f"{what} has zero dynamic range (constant samples)")
    return (data - lo) / (hi - lo)


def _hist_equalize(data: np.ndarray) -> np.ndarray:
    out = np.empty_like(data)
    for c in range(3):
        channel = data[:, :, c]
        # A constant channel stays unchanged: its single-bin CDF remap is
        # well defined but would jump everything to 1.0.
        if channel.max() == channel.min():
            out[:, :, c] = channel
            continue
        bins = np.minimum((channel * 256.0).astype(np.int64), 255)
        hist = np.bincount(bins.ravel(), minlength=256)
        cdf = np.cumsum(hist) / channel.size
        out[:, :, c] = cdf[bins]
    return out


def apply_enhancer(spec: EnhancerSpec, img: Raster) -> Raster:
    """Apply one stand-in enhancer; every kind maps [0, 1] into [0, 1]."""
    data = img.data
    if spec.kind == "identity":
        return img
    if spec.kind == "gamma":
        return Raster(data ** spec.params["gamma"])
    if spec.kind == "linear_stretch":
        return Raster(_stretch_array(data, "linear_stretch input"))
    if spec.kind == "hist_equalize":
        return Raster(_hist_equalize(data))
    if spec.kind == "log_retinex":
        blurred = gaussian_blur(img, spec.params["blur_sigma"])
        detail = np.log1p(data) - np.log1p(blurred.data)
        return Raster(_stretch_array(detail, "log_retinex response"))
    raise AssertionError(f"unhandled kind {spec.kind!r}")


def random_gamma_augment(
    img: Raster, seed: int, lo: float = 0.6, hi: float = 1.2
) -> tuple[Raster, float]:
    """Raise every sample to a gamma drawn uniformly from [lo, hi].

    The draw comes from np.random.default_rng(seed) (PCG64), so identical
    seeds give identical outputs. Returns the augmented raster and the
    gamma that was drawn; 0 and 1 are fixed points of the power law.
    """
    if not 0 < lo <= hi:
        raise ValueError(f"invalid gamma range [{lo}, {hi}] (need 0 < lo <= hi)")
    rng = np.random.default_rng(_validate_seed(seed))
    gamma = float(rng.uniform(lo, hi))
    return Raster(img.data ** gamma), gamma


def degrade(img: Raster, spec: DegradeSpec) -> Raster:
    """Synthesize a low-light counterpart: clamp(scale * v^gamma_d + noise).

    Noise is per-sample Gaussian(0, noise_sigma^2) from
    np.random.default_rng(spec.seed); the output is clamped to [0, 1].
    """
    out = spec.scale * np.power(img.data, spec.gamma_d)
    if spec.noise_sigma > 0.0:
        rng = np.random.default_rng(spec.seed)
        out = out + rng.normal(0.0, spec.noise_sigma, size=out.shape)
    return Raster(np.clip(out, 0.0, 1.0))
