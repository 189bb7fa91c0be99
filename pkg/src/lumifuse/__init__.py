"""lumifuse: linear fusion of low-light enhancement outputs.

Fuses the output images of several enhancement methods by constrained
weighted averaging (weights summing to a fixed target), discovers optimal
weights by closed-form constrained least squares or exhaustive simplex
grid search, evaluates with PSNR/SSIM, and aggregates challenge
leaderboards by weighted ranks. Classical stand-in enhancers and a
synthetic degrader make the whole pipeline runnable at desk scale.
"""

from .enhancers import (
    DegradeSpec,
    EnhancerSpec,
    apply_enhancer,
    degrade,
    gaussian_blur,
    random_gamma_augment,
)
from .fusion import (
    FusionProblem,
    GramDiagnostics,
    SingularSystemError,
    SurfaceTable,
    WeightVector,
    build_problem,
    evaluate_weights,
    fuse,
    grid_search_weights,
    simplex_grid,
    simplex_grid_array,
    solve_weights_closed_form,
    sweep_surface,
)
from .image_io import ImageFormatError, load_raster, save_raster
from .manifest import ImagePairRecord, Manifest, load_manifest, save_manifest
from .metrics import MetricReport, evaluate_dataset, mse, psnr, ssim
from .ranking import MetricSpec, RankTable, build_rank_table, compute_ranks, total_score
from .raster import Raster, mean_luminance

__version__ = "0.1.0"

__all__ = [
    "DegradeSpec",
    "EnhancerSpec",
    "FusionProblem",
    "GramDiagnostics",
    "ImageFormatError",
    "ImagePairRecord",
    "Manifest",
    "MetricReport",
    "MetricSpec",
    "RankTable",
    "Raster",
    "SingularSystemError",
    "SurfaceTable",
    "WeightVector",
    "apply_enhancer",
    "build_problem",
    "build_rank_table",
    "compute_ranks",
    "degrade",
    "evaluate_dataset",
    "evaluate_weights",
    "fuse",
    "gaussian_blur",
    "grid_search_weights",
    "load_manifest",
    "load_raster",
    "mean_luminance",
    "mse",
    "psnr",
    "random_gamma_augment",
    "save_manifest",
    "save_raster",
    "simplex_grid",
    "simplex_grid_array",
    "solve_weights_closed_form",
    "ssim",
    "sweep_surface",
    "total_score",
]
