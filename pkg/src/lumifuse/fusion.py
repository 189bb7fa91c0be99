"""Constrained linear fusion of method outputs and optimal-weight discovery.

The fused image is a per-sample weighted sum of n method outputs whose
weights are constrained to sum to a fixed target (default 1, which keeps
the fused image's mean luminance equal to the weighted mean of the
inputs'). Two optimizers find the weights:

* `solve_weights_closed_form` minimizes the pre-clamp squared error of the
  fused output against ground truth over a tuning set, subject to the
  sum constraint, by solving the KKT system of the equality-constrained
  least-squares problem. Weights may come out negative; because every
  single method is itself a feasible point (a vertex of the constraint
  plane), the optimum's residual can never exceed the best individual
  method's.

* `sweep_surface` exhaustively scores a nonnegative simplex grid by
  dataset-mean PSNR and SSIM after clamping, reproducing the brute-force
  weight surface; `grid_search_weights` is the cheap variant that scores
  the same grid on the pre-clamp squared-error objective only.

`build_problem` flattens all method outputs over the tuning set into one
matrix, with the Gram matrix of pairwise inner products exposing how close
the methods are to linear dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import metrics as _metrics
from .kernels import weighted_sum
from .raster import Raster

WEIGHT_SUM_TOL = 1e-6
_KKT_CONDITION_LIMIT = 1e12


class SingularSystemError(ValueError):
    """The constrained least-squares system is numerically singular."""


@dataclass(frozen=True)
class WeightVector:
    """Fusion coefficients constrained to sum to `target_sum` within 1e-6."""

    weights: tuple
    target_sum: float = 1.0

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) < 1:
            raise ValueError("a weight vector needs at least one weight")
        if not all(math.isfinite(w) for w in weights):
            raise ValueError(f"weights must be finite, got {weights}")
        total = sum(weights)
        if abs(total - self.target_sum) > WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights sum to {total!r}, which violates the required sum "
                f"{self.target_sum!r} by more than {WEIGHT_SUM_TOL}"
            )
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "target_sum", float(self.target_sum))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def nonnegative(self) -> bool:
        return all(w >= 0.0 for w in self.weights)

    def to_json_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "target_sum": self.target_sum,
            "nonnegative": self.nonnegative,
        }

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "WeightVector":
        try:
            return cls(tuple(payload["weights"]), payload.get("target_sum", 1.0))
        except KeyError as exc:
            raise ValueError(f"weight vector JSON missing field {exc}") from exc


@dataclass(frozen=True, eq=False)
class FusionProblem:
    """Flattened method outputs, target vector, and their Gram system.

    Column i of `A` concatenates every sample of method i's outputs over
    the tuning set (images in sorted-id order, row-major RGB interleaved
    within an image); `y` does the same for the ground truth.
    G = A^T A and b = A^T y.
    """

    method_ids: tuple
    A: np.ndarray
    y: np.ndarray
    G: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.method_ids)

    @property
    def sample_count(self) -> int:
        return self.y.size

    def residual_mse(self, weights: Sequence[float]) -> float:
        """Pre-clamp mean squared error of the fused output at `weights`."""
        w = np.asarray(weights, dtype=np.float64)
        residual = self.A @ w - self.y
        return float(residual @ residual) / self.sample_count

    def per_method_mse(self) -> np.ndarray:
        diff = self.A - self.y[:, None]
        return (diff * diff).mean(axis=0)


@dataclass(frozen=True)
class GramDiagnostics:
    """How the tuning set sees the methods: alignment, conditioning, fit.

    `residual_mse` is `residual_norm` squared over the sample count; it is
    directly comparable to `per_method_mse`, whose minimum it can never
    exceed (every single method is a feasible point of the constrained
    problem).
    """

    correlations: tuple
    gram_condition: float
    residual_norm: float
    residual_mse: float
    per_method_mse: tuple

    def to_json_dict(self) -> dict:
        return {
            "correlations": list(self.correlations),
            "gram_condition": self.gram_condition,
            "residual_norm": self.residual_norm,
            "residual_mse": self.residual_mse,
            "per_method_mse": list(self.per_method_mse),
        }


def fuse(outputs: Sequence[Raster], weights: WeightVector) -> Raster:
    """Per-sample weighted sum of the outputs; not clamped.

    Clamping is the caller's job at the export or metric boundary, so the
    algebraic identities (linearity, luminance stability) hold exactly.
    """
    if len(outputs) != len(weights):
        raise ValueError(
            f"{len(outputs)} outputs do not match {len(weights)} weights"
        )
    shape = outputs[0].data.shape
    for other in outputs[1:]:
        if other.data.shape != shape:
            raise ValueError(
                f"fuse requires identical dimensions, got {shape} and {other.data.shape}"
            )
    stack = np.stack([img.data for img in outputs])
    return Raster(weighted_sum(stack, np.asarray(weights.weights)))


def build_problem(
    outputs_by_method: Mapping[str, Mapping[str, Raster]],
    gts: Mapping[str, Raster],
) -> FusionProblem:
    """Assemble the flattened least-squares system from per-method outputs.

    Method order follows the mapping's iteration order; image ids are
    sorted so the sample layout is reproducible.
    """
    if not outputs_by_method:
        raise ValueError("need at least one method to build a fusion problem")
    gt_ids = sorted(gts)
    if not gt_ids:
        raise ValueError("no ground-truth images")
    for method, outputs in outputs_by_method.items():
        if set(outputs) != set(gt_ids):
            missing = sorted(set(gt_ids) - set(outputs))
            extra = sorted(set(outputs) - set(gt_ids))
            raise ValueError(
                f"method '{method}' does not cover the ground-truth ids "
                f"(missing={missing}, extra={extra})"
            )
        for image_id in gt_ids:
            if outputs[image_id].data.shape != gts[image_id].data.shape:
                raise ValueError(
                    f"method '{method}', image '{image_id}': dimensions "
                    f"{outputs[image_id].data.shape} do not match ground truth "
                    f"{gts[image_id].data.shape}"
                )

    y = np.concatenate([gts[i].data.ravel() for i in gt_ids])
    columns = [
        np.concatenate([outputs_by_method[m][i].data.ravel() for i in gt_ids])
        for m in outputs_by_method
    ]
    A = np.column_stack(columns)
    return FusionProblem(
        method_ids=tuple(outputs_by_method),
        A=A,
        y=y,
        G=A.T @ A,
        b=A.T @ y,
    )


def solve_weights_closed_form(
    problem: FusionProblem, target_sum: float = 1.0, ridge: float = 0.0
) -> tuple[WeightVector, GramDiagnostics]:
    """Equality-constrained least squares via the KKT system.

    Solves  minimize ||A k - y||^2 + ridge * ||k||^2  subject to sum(k) =
    target_sum, i.e. [2(G + ridge I), 1; 1^T, 0] [k; lambda] = [2b; a].
    The system is assembled on sample-averaged G and b (same minimizer,
    better scaling). Weights may be negative; nonnegativity is the grid
    search's business.

    Raises SingularSystemError when the KKT matrix is numerically singular,
    e.g. for duplicated methods with ridge = 0.
    """
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    n = problem.n
    samples = problem.sample_count
    gram = problem.G / samples
    rhs_b = problem.b / samples

    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * (gram + (ridge / samples) * np.eye(n))
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.concatenate([2.0 * rhs_b, [float(target_sum)]])

    condition = float(np.linalg.cond(kkt))
    if not math.isfinite(condition) or condition > _KKT_CONDITION_LIMIT:
        raise SingularSystemError(
            f"KKT system is numerically singular (condition number {condition:.3e}); "
            f"method outputs are linearly dependent or duplicated - "
            f"remove the duplicate or solve with a positive ridge"
        )
    solution = np.linalg.solve(kkt, rhs)
    weights = solution[:n]
    # Land exactly on the constraint plane; the correction is at rounding level.
    weights = weights + (target_sum - weights.sum()) / n

    diagnostics = _diagnostics(problem, weights)
    return WeightVector(tuple(weights), target_sum), diagnostics


def evaluate_weights(problem: FusionProblem, weights: WeightVector) -> GramDiagnostics:
    """Gram diagnostics for an externally chosen weight vector."""
    if len(weights) != problem.n:
        raise ValueError(
            f"{len(weights)} weights do not match the problem's {problem.n} methods"
        )
    return _diagnostics(problem, np.asarray(weights.weights))


def _diagnostics(problem: FusionProblem, weights: np.ndarray) -> GramDiagnostics:
    norm_y = float(np.linalg.norm(problem.y))
    correlations = []
    for i in range(problem.n):
        norm_a = math.sqrt(float(problem.G[i, i]))
        denom = norm_a * norm_y
        correlations.append(float(problem.b[i]) / denom if denom > 0 else 0.0)
    residual = problem.A @ weights - problem.y
    residual_norm = float(np.linalg.norm(residual))
    return GramDiagnostics(
        correlations=tuple(correlations),
        gram_condition=float(np.linalg.cond(problem.G)),
        residual_norm=residual_norm,
        residual_mse=residual_norm ** 2 / problem.sample_count,
        per_method_mse=tuple(float(v) for v in problem.per_method_mse()),
    )


def _grid_resolution(step: float) -> int:
    step = float(step)
    if not math.isfinite(step) or step <= 0:
        raise ValueError(f"step must be a positive number, got {step!r}")
    resolution = round(1.0 / step)
    if resolution < 1 or abs(resolution * step - 1.0) > 1e-9:
        raise ValueError(f"step {step!r} does not evenly divide 1")
    return resolution


@lru_cache(maxsize=8)
def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer compositions of `total` into `parts`, in
    ascending lexicographic order. Cached: the grid is instance-independent."""
    count = math.comb(total + parts - 1, parts - 1)
    out = np.empty((count, parts), dtype=np.int64)

    def fill(offset: int, remaining: int, column: int) -> int:
        if column == parts - 1:
            out[offset, column] = remaining
            return offset + 1
        for value in range(remaining + 1):
            end = fill(offset, remaining - value, column + 1)
            out[offset:end, column] = value
            offset = end
        return offset

    fill(0, total, 0)
    out.setflags(write=False)
    return out


def simplex_grid_array(n: int, step: float) -> np.ndarray:
    """(count, n) array of grid weights on the unit simplex, lexicographic.

    Entries are exact multiples c/m (m = 1/step), so each row sums to 1
    within a few ulps and is nonnegative exactly.
    """
    if n < 1:
        raise ValueError(f"need at least one method, got n={n}")
    resolution = _grid_resolution(step)
    return _compositions(resolution, n) / float(resolution)


def simplex_grid(n: int, step: float) -> list:
    """Every weight vector on the step-spaced unit simplex, in
    deterministic lexicographic order; count = C(m + n - 1, n - 1)."""
    return [WeightVector(tuple(row), 1.0) for row in simplex_grid_array(n, step)]


def grid_search_weights(
    problem: FusionProblem, step: float, target_sum: float = 1.0
) -> tuple[WeightVector, float]:
    """Exhaustive argmin of the pre-clamp squared-error objective on the
    (scaled) simplex grid. Returns the best weights and their residual MSE.

    This scores the same objective as the closed-form solver, restricted to
    nonnegative grid points, so it doubles as an independent oracle for it.
    """
    grid = simplex_grid_array(problem.n, step) * float(target_sum)
    samples = problem.sample_count
    gram = problem.G / samples
    rhs_b = problem.b / samples
    # ||A k - y||^2 / S = k^T G k - 2 k^T b + const; the constant is dropped.
    objective = np.einsum("mi,ij,mj->m", grid, gram, grid) - 2.0 * (grid @ rhs_b)
    best = int(np.argmin(objective))
    weights = WeightVector(tuple(grid[best]), target_sum)
    return weights, problem.residual_mse(grid[best])


@dataclass(frozen=True, eq=False)
class SurfaceTable:
    """Dataset-mean PSNR and SSIM at every grid point of the weight simplex."""

    method_ids: tuple
    step: float
    target_sum: float
    weights: np.ndarray
    mean_psnr: np.ndarray
    mean_ssim: np.ndarray

    @property
    def best_psnr_index(self) -> int:
        # np.argmax takes the first maximizer, so ties resolve to the
        # lexicographically smallest grid point.
        return int(np.argmax(self.mean_psnr))

    @property
    def best_ssim_index(self) -> int:
        return int(np.argmax(self.mean_ssim))

    def best_psnr_weights(self) -> WeightVector:
        return WeightVector(tuple(self.weights[self.best_psnr_index]), self.target_sum)

    def best_ssim_weights(self) -> WeightVector:
        return WeightVector(tuple(self.weights[self.best_ssim_index]), self.target_sum)

    def to_csv(self, path) -> None:
        """Write `k_1,...,k_n,mean_psnr,mean_ssim` rows at 6 decimals."""
        header = ",".join(
            [f"k_{i + 1}" for i in range(len(self.method_ids))]
            + ["mean_psnr", "mean_ssim"]
        )
        lines = [header]
        for row, p, s in zip(self.weights, self.mean_psnr, self.mean_ssim):
            cells = [f"{v:.6f}" for v in row] + [f"{p:.6f}", f"{s:.6f}"]
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def sweep_surface(
    problem: FusionProblem,
    gts: Mapping[str, Raster],
    outputs_by_method: Mapping[str, Mapping[str, Raster]],
    step: float,
    target_sum: float = 1.0,
) -> SurfaceTable:
    """Score every grid point: fuse per image, clamp, average PSNR and SSIM.

    Means follow the dataset convention (arithmetic mean of per-image
    values, infinite PSNR excluded). Rows are in grid order; the argmax
    properties expose the per-metric peaks.
    """
    grid = simplex_grid_array(problem.n, step) * float(target_sum)
    image_ids = sorted(gts)
    for image_id in image_ids:
        if min(gts[image_id].height, gts[image_id].width) < _metrics.SSIM_WINDOW:
            raise ValueError(
                f"image '{image_id}' is smaller than the SSIM window; "
                f"the sweep needs at least "
                f"{_metrics.SSIM_WINDOW}x{_metrics.SSIM_WINDOW} images"
            )
    missing_methods = [m for m in problem.method_ids if m not in outputs_by_method]
    if missing_methods:
        raise ValueError(f"outputs missing for methods {missing_methods}")
    gt_arrays = [np.clip(gts[i].data, 0.0, 1.0) for i in image_ids]
    stacks = [
        np.stack([outputs_by_method[m][i].data for m in problem.method_ids])
        for i in image_ids
    ]

    mean_psnr = np.empty(len(grid))
    mean_ssim = np.empty(len(grid))
    for row, point in enumerate(grid):
        psnr_values = []
        ssim_values = []
        for gt, stack in zip(gt_arrays, stacks):
            fused = np.clip(weighted_sum(stack, point), 0.0, 1.0)
            err = float(np.mean((fused - gt) ** 2))
            psnr_values.append(math.inf if err == 0.0 else 10.0 * math.log10(1.0 / err))
            smap = _metrics._ssim_map(fused, gt)
            ssim_values.append(float(smap.mean(axis=(0, 1)).mean()))
        mean_psnr[row], _ = _metrics.mean_excluding_inf(psnr_values)
        mean_ssim[row] = float(np.mean(ssim_values))

    return SurfaceTable(
        method_ids=problem.method_ids,
        step=float(step),
        target_sum=float(target_sum),
        weights=grid,
        mean_psnr=mean_psnr,
        mean_ssim=mean_ssim,
    )
