"""Acceptance suite: one test per release criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings. Every tolerance is pinned here, not configurable.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import STANDIN_ENHANCERS, make_instance, smooth_raster
from lumifuse import (
    Raster,
    WeightVector,
    fuse,
    grid_search_weights,
    mean_luminance,
    psnr,
    random_gamma_augment,
    save_raster,
    simplex_grid,
    solve_weights_closed_form,
    ssim,
)
from lumifuse.cli import main as cli_main
from lumifuse.metrics import SSIM_C1
from lumifuse.ranking import build_rank_table, load_entrants_json
from test_metrics import naive_ssim

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def _report(number: int, ok: bool, detail: str) -> None:
    print(f"[acceptance {number}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {number}: {detail}"


def test_criterion_1_leaderboard_totals_exact():
    """Weighted-rank totals of the top-5 leaderboard reproduce exactly."""
    entrants, specs = load_entrants_json(DATA_DIR / "ntire2025_top5.json")
    expected = {
        "NWPU-HVI": 7.0,
        "Imagine": 10.2,
        "pengpeng-yu": 11.1,
        "DAVIS-K": 11.7,
        "SoloMan": 12.5,
    }
    start = time.perf_counter()
    table = build_rank_table(entrants, specs)
    elapsed = time.perf_counter() - start
    totals = {row.name: row.total for row in table.rows}
    exact = all(abs(totals[name] - want) <= 1e-10 for name, want in expected.items())
    _report(
        1,
        exact and elapsed < 1e-3,
        f"five totals reproduce to 1e-10 (runtime {elapsed * 1e3:.3f} ms < 1 ms)",
    )


def test_criterion_2_projection_dominance():
    """Closed-form fusion never loses to the best single method, and wins
    strictly on at least 95 of 100 seeded instances."""
    start = time.perf_counter()
    strict_wins = 0
    for seed in range(100):
        _, _, problem = make_instance(seed, n_images=8, size=64)
        weights, diagnostics = solve_weights_closed_form(problem)
        fused_mse = problem.residual_mse(weights.weights)
        best_single = min(diagnostics.per_method_mse)
        assert fused_mse <= best_single + 1e-12, (
            f"seed {seed}: fused pre-clamp MSE {fused_mse} exceeds best "
            f"single method {best_single}"
        )
        if fused_mse < best_single - 1e-12:
            strict_wins += 1
    elapsed = time.perf_counter() - start
    _report(
        2,
        strict_wins >= 95 and elapsed < 30.0,
        f"dominance on 100/100 instances, strict on {strict_wins} (>= 95), "
        f"runtime {elapsed:.1f} s < 30 s",
    )


def test_criterion_3_optimizer_cross_check():
    """Closed-form weights match the 0.001-step grid argmin within 0.002
    per coordinate on 20 seeded in-range instances."""
    start = time.perf_counter()
    checked = 0
    worst = 0.0
    seed = 0
    while checked < 20:
        assert seed < 60, "could not find 20 in-range instances in 60 seeds"
        _, _, problem = make_instance(seed, n_images=8, size=64)
        weights, _ = solve_weights_closed_form(problem)
        seed += 1
        if not all(0.0 <= w <= 1.0 for w in weights.weights):
            continue
        grid_weights, _ = grid_search_weights(problem, step=0.001)
        delta = float(
            np.abs(np.array(weights.weights) - np.array(grid_weights.weights)).max()
        )
        worst = max(worst, delta)
        assert delta <= 0.002, f"seed {seed - 1}: coordinate gap {delta} > 0.002"
        checked += 1
    elapsed = time.perf_counter() - start
    _report(
        3,
        worst <= 0.002 and elapsed < 300.0,
        f"20 instances, worst coordinate gap {worst:.5f} <= 0.002, "
        f"runtime {elapsed:.1f} s < 5 min",
    )


def test_criterion_4_metric_correctness():
    """SSIM and PSNR match their closed forms and a naive window oracle."""
    rng = np.random.default_rng(2024)
    img = Raster(rng.random((32, 32, 3)))
    self_ok = ssim(img, img) == 1.0

    const = ssim(Raster.full(16, 16, 0.25), Raster.full(16, 16, 0.75))
    closed_form = (2 * 0.25 * 0.75 + SSIM_C1) / (0.25 ** 2 + 0.75 ** 2 + SSIM_C1)
    const_ok = abs(const - 0.60007) <= 1e-5 and abs(const - closed_form) <= 1e-9

    db = psnr(Raster.full(16, 16, 0.0), Raster.full(16, 16, 0.5))
    psnr_ok = abs(db - 6.0206) <= 1e-4

    other = Raster(np.clip(img.data + rng.normal(0, 0.08, img.data.shape), 0, 1))
    oracle_gap = abs(ssim(img, other) - naive_ssim(img, other))
    oracle_ok = oracle_gap <= 1e-6

    _report(
        4,
        self_ok and const_ok and psnr_ok and oracle_ok,
        f"self-SSIM exactly 1.0; constant pair {const:.6f} vs 0.60007 (1e-5); "
        f"PSNR {db:.4f} dB vs 6.0206 (1e-4); oracle gap {oracle_gap:.2e} <= 1e-6",
    )


def test_criterion_5_weight_sum_enforcement(tmp_path):
    """The sum constraint is enforced at every entry point, and the grid is
    exactly the expected lattice."""
    with pytest.raises(ValueError):
        WeightVector((0.5, 0.4))  # |sum - 1| = 0.1 > 1e-6
    with pytest.raises(ValueError):
        WeightVector((0.3, 0.3, 0.3), target_sum=1.0)
    WeightVector((0.5, 0.5 + 9e-7))  # within tolerance: accepted

    # CLI fuse refuses a bad weights file before writing anything.
    weights_path = tmp_path / "bad.json"
    weights_path.write_text(json.dumps({"weights": [0.45, 0.45]}))
    manifest_path = tmp_path / "manifest.json"
    (tmp_path / "gt").mkdir()
    rng = np.random.default_rng(0)
    for i in range(2):
        save_raster(Raster(rng.random((16, 16, 3))), tmp_path / "gt" / f"{i}.png", 8)
    manifest_path.write_text(json.dumps({
        "version": 1,
        "pairs": [{"id": f"{i}", "gt": f"gt/{i}.png"} for i in range(2)],
        "methods": {"gt": "gt"},
    }))
    fused_dir = tmp_path / "fused"
    cli_code = cli_main(["fuse", "--manifest", str(manifest_path),
                         "--weights", str(weights_path), "--out", str(fused_dir)])
    cli_rejected = cli_code == 1 and not fused_dir.exists()

    grid = simplex_grid(3, 0.02)
    count_ok = len(grid) == 1326
    constraint_ok = all(
        abs(sum(wv.weights) - 1.0) <= 1e-12 and min(wv.weights) >= 0.0
        for wv in grid
    )
    _report(
        5,
        cli_rejected and count_ok and constraint_ok,
        f"violating vectors rejected (library and CLI, nothing written); "
        f"grid n=3 step 0.02 has {len(grid)} == 1326 points, each summing "
        f"to 1 within 1e-12",
    )


def test_criterion_6_luminance_stability():
    """Pre-clamp fused mean luminance is the weighted mean of the inputs'."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        outputs = [Raster(rng.random((24, 24, 3))) for _ in range(3)]
        raw = rng.random(3)
        weights = WeightVector(tuple(raw / raw.sum()))
        fused_mean = mean_luminance(fuse(outputs, weights))
        expected = sum(w * mean_luminance(o) for w, o in zip(weights.weights, outputs))
        worst = max(worst, abs(fused_mean - expected))
    identity_ok = worst <= 1e-9

    # Equal means and weights summing to 1: the mean passes through.
    arr = np.zeros((2, 2, 3))
    arr[0] = 1.0
    equal_mean_outputs = [Raster(arr), Raster(arr[::-1].copy()), Raster.full(2, 2, 0.5)]
    fused = fuse(equal_mean_outputs, WeightVector((0.6, 0.3, 0.1)))
    common_ok = abs(mean_luminance(fused) - 0.5) <= 1e-12

    _report(
        6,
        identity_ok and common_ok,
        f"worst linearity gap {worst:.2e} <= 1e-9 over 20 random instances; "
        f"equal-mean case preserves the common mean",
    )


def test_criterion_7_determinism(tmp_path):
    """Seeded degrade and random-gamma enhance are byte-reproducible, and
    every drawn gamma lies in [0.6, 1.2]."""
    root = tmp_path / "data"
    (root / "gt").mkdir(parents=True)
    rng = np.random.default_rng(31)
    ids = [f"{i:02d}" for i in range(3)]
    for image_id in ids:
        save_raster(smooth_raster(rng, 16, 16), root / "gt" / f"{image_id}.png", 8)
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps({
        "version": 1, "pairs": [{"id": i, "gt": f"gt/{i}.png"} for i in ids]}))
    degrade_spec = tmp_path / "degrade.json"
    degrade_spec.write_text(json.dumps(
        {"gamma_d": 2.0, "scale": 0.4, "noise_sigma": 0.02, "seed": 13}))
    enhancer_specs = tmp_path / "enh.json"
    enhancer_specs.write_text(json.dumps([
        {"name": "g045", "kind": "gamma", "params": {"gamma": 0.45},
         "random_gamma": True},
        {"name": "histeq", "kind": "hist_equalize", "random_gamma": True},
    ]))

    trees = []
    for run in ("a", "b"):
        low = root / f"low_{run}"
        enh = root / f"enh_{run}"
        assert cli_main(["degrade", "--manifest", str(manifest_path),
                         "--spec", str(degrade_spec), "--out", str(low)]) == 0
        assert cli_main(["enhance", "--manifest", str(low / "manifest.json"),
                         "--specs", str(enhancer_specs), "--out-root", str(enh),
                         "--seed", "21"]) == 0
        trees.append({
            p.relative_to(root / f"{kind}_{run}").as_posix(): p.read_bytes()
            for kind in ("low", "enh")
            for p in sorted((root / f"{kind}_{run}").rglob("*.png"))
        })
    identical = trees[0] == trees[1] and len(trees[0]) == len(ids) * 3

    gammas = []
    for enh in (root / "enh_a", root / "enh_b"):
        for sidecar in sorted(enh.rglob("_augment.json")):
            gammas.extend(json.loads(sidecar.read_text())["gamma_by_id"].values())
    img = Raster.full(2, 2, 0.5)
    gammas.extend(random_gamma_augment(img, seed=s)[1] for s in range(300))
    in_range = all(0.6 <= g <= 1.2 for g in gammas)

    _report(
        7,
        identical and in_range,
        f"two seeded runs produced byte-identical images; all {len(gammas)} "
        f"drawn gammas lie in [0.6, 1.2]",
    )


def test_criterion_8_desk_scale_disclaimer():
    """The published benchmark numbers are not reproduced here and are not
    asserted anywhere; the published fusion coefficients ship only as an
    arithmetic fixture for `fuse`."""
    fixture = json.loads((DATA_DIR / "reference_fusion_weights.json").read_text())
    weights = WeightVector(tuple(fixture["weights"]), fixture["target_sum"])
    assert weights.weights == (0.16, 0.40, 0.44)

    # The only check these coefficients must satisfy: the fusion arithmetic.
    outputs = [Raster.full(4, 4, v) for v in (0.1, 0.2, 0.3)]
    fused = fuse(outputs, weights)
    arithmetic_ok = bool(np.allclose(fused.data, 0.228, atol=1e-12))

    # No benchmark scores are targets: the fixture carries no PSNR/SSIM
    # claims for these weights, only the coefficients themselves.
    no_score_claims = not any(
        key in fixture for key in ("psnr", "ssim", "expected_psnr", "expected_ssim")
    )
    _report(
        8,
        arithmetic_ok and no_score_claims,
        "published weights (0.16, 0.40, 0.44) fuse constants 0.1/0.2/0.3 to "
        "0.228 within 1e-12; no pretrained-network benchmark score is asserted "
        "anywhere in this suite",
    )
