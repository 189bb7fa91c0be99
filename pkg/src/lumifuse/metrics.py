"""Distortion metrics: MSE, PSNR, and Gaussian-windowed SSIM.

PSNR uses peak value 1.0, so it is 10 * log10(1 / mse); identical inputs
yield float('inf'). SSIM follows the standard single-scale recipe: an
11x11 Gaussian window with sigma 1.5, C1 = (0.01 * L)^2 and
C2 = (0.03 * L)^2 with L = 1, computed per channel and averaged over
R, G, B. Window overhang at the borders uses symmetric reflection.

Callers are expected to pass rasters already clamped to [0, 1];
`evaluate_dataset` clamps on your behalf so scores reflect what a saved
file would score. Dataset means average per-image values; infinite PSNR
entries are excluded from the mean and counted separately, since any
averaging rule that includes infinity is arbitrary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .kernels import gaussian_kernel1d, sep_filter_reflect
from .raster import Raster, require_same_shape

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def mse(a: Raster, b: Raster) -> float:
    """Mean squared sample difference over all pixels and channels."""
    require_same_shape(a, b, "mse")
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a: Raster, b: Raster) -> float:
    """Peak signal-to-noise ratio in dB; float('inf') when the pair is identical."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return float(10.0 * math.log10(1.0 / err))


def ssim(a: Raster, b: Raster) -> float:
    """Mean structural similarity, per channel, averaged over R, G, B."""
    require_same_shape(a, b, "ssim")
    if min(a.height, a.width) < SSIM_WINDOW:
        raise ValueError(
            f"image {a.height}x{a.width} is smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    smap = _ssim_map(a.data, b.data)
    per_channel = smap.mean(axis=(0, 1))
    return float(per_channel.mean())


def _ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel SSIM map with Gaussian-weighted window stats."""
    kernel = gaussian_kernel1d(SSIM_SIGMA, SSIM_WINDOW // 2)
    mu_a = sep_filter_reflect(a, kernel)
    mu_b = sep_filter_reflect(b, kernel)
    var_a = sep_filter_reflect(a * a, kernel) - mu_a * mu_a
    var_b = sep_filter_reflect(b * b, kernel) - mu_b * mu_b
    cov = sep_filter_reflect(a * b, kernel) - mu_a * mu_b
    luminance_contrast = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    normalizer = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return luminance_contrast / normalizer


def mean_excluding_inf(values) -> tuple[float, int]:
    """(mean of finite entries, count of infinite entries).

    Returns (inf, len(values)) when every entry is infinite.
    """
    finite = [v for v in values if math.isfinite(v)]
    infinite_count = len(values) - len(finite)
    if not finite:
        return math.inf, infinite_count
    return float(np.mean(finite)), infinite_count


@dataclass(frozen=True)
class ImageMetrics:
    image_id: str
    psnr_db: float
    ssim: float
    mse: float


@dataclass(frozen=True)
class MetricReport:
    """Per-image and dataset-mean metrics, ids in lexicographic order."""

    per_image: tuple[ImageMetrics, ...]
    mean_psnr_db: float
    mean_ssim: float
    count: int
    infinite_count: int

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "infinite_count": self.infinite_count,
            "mean_psnr_db": None if math.isinf(self.mean_psnr_db) else self.mean_psnr_db,
            "mean_ssim": self.mean_ssim,
            "per_image": [
                {
                    "id": entry.image_id,
                    "psnr_db": None if math.isinf(entry.psnr_db) else entry.psnr_db,
                    "infinite": math.isinf(entry.psnr_db),
                    "ssim": entry.ssim,
                    "mse": entry.mse,
                }
                for entry in self.per_image
            ],
        }

    def to_text_table(self) -> str:
        rows = [("id", "psnr_db", "ssim", "mse")]
        for entry in self.per_image:
            rows.append(
                (
                    entry.image_id,
                    "inf" if math.isinf(entry.psnr_db) else f"{entry.psnr_db:.4f}",
                    f"{entry.ssim:.4f}",
                    f"{entry.mse:.6f}",
                )
            )
        mean_psnr = "inf" if math.isinf(self.mean_psnr_db) else f"{self.mean_psnr_db:.4f}"
        rows.append(("mean", mean_psnr, f"{self.mean_ssim:.4f}", ""))
        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
                 for row in rows]
        if self.infinite_count:
            lines.append(f"({self.infinite_count} image(s) with infinite PSNR "
                         f"excluded from the mean)")
        return "\n".join(lines)


def evaluate_dataset(
    outputs: Mapping[str, Raster], gts: Mapping[str, Raster]
) -> MetricReport:
    """Per-image PSNR/SSIM/MSE on clamped rasters, plus dataset means."""
    output_ids = set(outputs)
    gt_ids = set(gts)
    if output_ids != gt_ids:
        missing = sorted(gt_ids - output_ids)
        extra = sorted(output_ids - gt_ids)
        raise ValueError(
            f"output and ground-truth id sets differ (missing={missing}, extra={extra})"
        )
    if not gt_ids:
        raise ValueError("no image ids to evaluate (zero ids in common)")

    entries = []
    for image_id in sorted(gt_ids):
        out = outputs[image_id].clamped()
        ref = gts[image_id].clamped()
        try:
            entries.append(
                ImageMetrics(
                    image_id=image_id,
                    psnr_db=psnr(out, ref),
                    ssim=ssim(out, ref),
                    mse=mse(out, ref),
                )
            )
        except ValueError as exc:
            raise ValueError(f"image '{image_id}': {exc}") from exc

    mean_psnr, infinite_count = mean_excluding_inf([e.psnr_db for e in entries])
    mean_ssim = float(np.mean([e.ssim for e in entries]))
    return MetricReport(
        per_image=tuple(entries),
        mean_psnr_db=mean_psnr,
        mean_ssim=mean_ssim,
        count=len(entries),
        infinite_count=infinite_count,
    )
