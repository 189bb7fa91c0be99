"""Command-line front end for the fusion pipeline.

Subcommands: degrade, enhance, optimize, fuse, evaluate, sweep, rank.
Every command is deterministic under fixed inputs and seed: all randomness
flows from a single base seed through numpy SeedSequence/PCG64, with
per-image (and per-method) streams derived as SeedSequence([seed, method
index, image index]) over sorted image ids. Progress goes to standard
error; machine-readable results go to files or standard output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .enhancers import DegradeSpec, EnhancerSpec, apply_enhancer, degrade, random_gamma_augment
from .fusion import (
    SingularSystemError,
    WeightVector,
    build_problem,
    evaluate_weights,
    fuse,
    solve_weights_closed_form,
    sweep_surface,
)
from .image_io import default_output_name, load_raster, save_raster
from .manifest import (
    Manifest,
    ImagePairRecord,
    load_all_methods,
    load_gts,
    load_lows,
    load_manifest,
    load_method_outputs,
    save_manifest,
)
from .metrics import evaluate_dataset
from .ranking import build_rank_table, load_entrants_json

OPTIMIZERS = ("closed_form", "grid")

SAME_SET_NOTE = (
    "weights were fitted on the listed tuning ids; evaluating on the same ids "
    "measures tuning fit, not generalization"
)


@dataclass(frozen=True)
class RunConfig:
    """Batch-run knobs; JSON-loadable via --config, overridable by flags."""

    seed: int = 0
    weight_sum: float = 1.0
    grid_step: float = 0.02
    ridge: float = 0.0
    optimizer: str = "closed_form"
    bit_depth: int = 8

    def __post_init__(self):
        if self.weight_sum <= 0:
            raise ValueError(f"weight_sum must be positive, got {self.weight_sum}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        if self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")
        resolution = round(1.0 / self.grid_step)
        if resolution < 1 or abs(resolution * self.grid_step - 1.0) > 1e-9:
            raise ValueError(f"grid_step {self.grid_step!r} does not evenly divide 1")

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"{path}: unknown config fields {sorted(unknown)}")
        return cls(**payload)


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _derive_seed(*parts: int) -> int:
    """Collapse (seed, method index, image index, ...) into one PCG64 seed."""
    sequence = np.random.SeedSequence([int(p) for p in parts])
    return int(sequence.generate_state(1, np.uint64)[0])


def _emit_json(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        _progress(f"wrote {out_path}")
    else:
        sys.stdout.write(text)


def _emit_table(table: str, json_went_to_stdout: bool) -> None:
    # Keep stdout single-purpose: when the JSON result streams to stdout,
    # the human-readable table moves to stderr.
    print(table, file=sys.stderr if json_went_to_stdout else sys.stdout)


def _config_from_args(args) -> RunConfig:
    config = (
        RunConfig.from_json_file(args.config)
        if getattr(args, "config", None)
        else RunConfig()
    )
    overrides = {}
    for name in ("seed", "weight_sum", "grid_step", "ridge", "optimizer", "bit_depth"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(config, **overrides) if overrides else config


def cmd_degrade(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    spec_payload = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    base_spec = DegradeSpec.from_json_dict(spec_payload)
    base_seed = config.seed if args.seed is not None else base_spec.seed

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    new_pairs = []
    for index, image_id in enumerate(manifest.ids):
        pair = manifest.pair_by_id(image_id)
        gt = load_raster(pair.gt_path)
        spec = replace(base_spec, seed=_derive_seed(base_seed, index))
        degraded = degrade(gt, spec)
        out_path = out_dir / default_output_name(image_id)
        save_raster(degraded, out_path, config.bit_depth)
        new_pairs.append(
            ImagePairRecord(image_id=image_id, low_path=out_path, gt_path=pair.gt_path)
        )
        _progress(f"degrade: {image_id} -> {out_path}")

    new_manifest = Manifest(pairs=tuple(new_pairs), methods={})
    save_manifest(new_manifest, out_dir / "manifest.json")
    _progress(f"wrote {out_dir / 'manifest.json'}")
    return 0


def _parse_enhancer_entries(path) -> list:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, list) or not payload:
        raise ValueError(f"{path}: expected a non-empty JSON list of enhancer entries")
    entries = []
    names = set()
    for entry in payload:
        name = entry.get("name")
        if not name:
            raise ValueError(f"{path}: every enhancer entry needs a 'name'")
        default_output_name(name)  # reuse the id rules: no separators etc.
        if name in names:
            raise ValueError(f"{path}: duplicate enhancer name {name!r}")
        names.add(name)
        spec = EnhancerSpec.from_json_dict(entry)
        gamma_cfg = entry.get("random_gamma")
        if gamma_cfg is True:
            gamma_cfg = {}
        if gamma_cfg is not None and not isinstance(gamma_cfg, dict):
            raise ValueError(
                f"{path}: 'random_gamma' must be true or an object with lo/hi"
            )
        entries.append((name, spec, gamma_cfg))
    return entries


def cmd_enhance(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    entries = _parse_enhancer_entries(args.specs)
    lows = load_lows(manifest)

    out_root = Path(args.out_root)
    total_failures = 0
    completed_methods = {}
    for method_index, (name, spec, gamma_cfg) in enumerate(entries):
        method_dir = out_root / name
        method_dir.mkdir(parents=True, exist_ok=True)
        drawn_gammas = {}
        method_failures = 0
        for pair_index, image_id in enumerate(manifest.ids):
            img = lows[image_id]
            if gamma_cfg is not None:
                seed = _derive_seed(config.seed, method_index, pair_index)
                img, gamma = random_gamma_augment(
                    img,
                    seed,
                    lo=gamma_cfg.get("lo", 0.6),
                    hi=gamma_cfg.get("hi", 1.2),
                )
                drawn_gammas[image_id] = gamma
            try:
                enhanced = apply_enhancer(spec, img)
            except ValueError as exc:
                _progress(f"enhance: ERROR {name}/{image_id}: {exc}")
                method_failures += 1
                continue
            save_raster(enhanced, method_dir / default_output_name(image_id), config.bit_depth)
        if gamma_cfg is not None:
            (method_dir / "_augment.json").write_text(
                json.dumps({"gamma_by_id": drawn_gammas, "seed": config.seed},
                           indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        done = len(manifest.ids) - method_failures
        _progress(f"enhance: {name}: {done}/{len(manifest.ids)} images")
        if method_failures:
            _progress(f"enhance: method '{name}' incomplete, left out of the manifest")
            total_failures += method_failures
        else:
            completed_methods[name] = method_dir

    methods = dict(manifest.methods)
    methods.update(completed_methods)
    new_manifest = Manifest(pairs=manifest.pairs, methods=methods)
    save_manifest(new_manifest, out_root / "manifest.json")
    _progress(f"wrote {out_root / 'manifest.json'}")
    if total_failures:
        _progress(f"enhance: {total_failures} per-image failure(s)")
        return 1
    return 0


def _build_problem_from_manifest(manifest: Manifest):
    if not manifest.methods:
        raise ValueError("manifest lists no methods; run `enhance` first")
    gts = load_gts(manifest)
    outputs = load_all_methods(manifest)
    return build_problem(outputs, gts), gts, outputs


def cmd_optimize(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    problem, gts, outputs = _build_problem_from_manifest(manifest)

    payload = {
        "method_ids": list(problem.method_ids),
        "optimizer": config.optimizer,
        "tuning_manifest": str(Path(args.manifest).resolve()),
        "tuning_ids": manifest.ids,
        "note": SAME_SET_NOTE,
    }
    if config.optimizer == "closed_form":
        try:
            weights, diagnostics = solve_weights_closed_form(
                problem, target_sum=config.weight_sum, ridge=config.ridge
            )
        except SingularSystemError as exc:
            print(f"optimize: {exc}", file=sys.stderr)
            print("optimize: hint: rerun with --ridge 1e-6 (or larger)", file=sys.stderr)
            return 1
        payload["ridge"] = config.ridge
    else:
        surface = sweep_surface(
            problem, gts, outputs, step=config.grid_step, target_sum=config.weight_sum
        )
        weights = surface.best_psnr_weights()
        diagnostics = evaluate_weights(problem, weights)
        best = surface.best_psnr_index
        payload["grid"] = {
            "step": config.grid_step,
            "mean_psnr": None if math.isinf(surface.mean_psnr[best]) else float(surface.mean_psnr[best]),
            "mean_ssim": float(surface.mean_ssim[best]),
            "ssim_argmax_weights": list(surface.best_ssim_weights().weights),
        }
        surface_path = args.surface or (
            str(args.out) + ".surface.csv" if args.out else None
        )
        if surface_path is None:
            raise ValueError("grid mode needs --surface (or --out to derive it from)")
        surface.to_csv(surface_path)
        _progress(f"wrote {surface_path}")

    payload.update(weights.to_json_dict())
    payload["diagnostics"] = diagnostics.to_json_dict()
    _emit_json(payload, args.out)
    return 0


def _load_weights_file(path, manifest: Manifest) -> tuple[WeightVector, list, dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = WeightVector.from_json_dict(payload)
    method_ids = payload.get("method_ids")
    manifest_methods = sorted(manifest.methods)
    if method_ids is None:
        method_ids = manifest_methods
    elif sorted(method_ids) != manifest_methods:
        raise ValueError(
            f"weights are for methods {sorted(method_ids)} but the manifest has "
            f"{manifest_methods}"
        )
    if len(method_ids) != len(weights):
        raise ValueError(
            f"{len(weights)} weights do not match {len(method_ids)} methods"
        )
    return weights, list(method_ids), payload


def cmd_fuse(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    # Weight-sum violations surface here, before any file is written.
    weights, method_ids, _ = _load_weights_file(args.weights, manifest)

    outputs = {name: load_method_outputs(manifest, name) for name in method_ids}

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_id in manifest.ids:
        fused = fuse([outputs[name][image_id] for name in method_ids], weights)
        save_raster(fused, out_dir / default_output_name(image_id), config.bit_depth)
        _progress(f"fuse: {image_id}")
    return 0


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    candidate_dir = Path(args.candidate)
    present = {
        image_id: candidate_dir / default_output_name(image_id)
        for image_id in manifest.ids
        if (candidate_dir / default_output_name(image_id)).is_file()
    }
    if not present:
        raise ValueError(
            f"{candidate_dir}: zero ids in common with the manifest "
            f"(expected files like {default_output_name(manifest.ids[0])})"
        )
    missing = sorted(set(manifest.ids) - set(present))
    if missing:
        raise ValueError(f"{candidate_dir}: missing outputs for ids {missing}")

    gts = load_gts(manifest)
    candidates = {image_id: load_raster(path) for image_id, path in present.items()}
    report = evaluate_dataset(candidates, gts)
    payload = report.to_json_dict()
    payload["candidate"] = str(candidate_dir.resolve())

    if args.weights:
        weights_payload = json.loads(Path(args.weights).read_text(encoding="utf-8"))
        tuning_ids = weights_payload.get("tuning_ids")
        payload["fit_on_same_set"] = tuning_ids == manifest.ids
        if payload["fit_on_same_set"]:
            payload["fit_note"] = SAME_SET_NOTE
        if "diagnostics" in weights_payload:
            payload["fit_diagnostics"] = weights_payload["diagnostics"]

    _emit_json(payload, args.out)
    _emit_table(report.to_text_table(), json_went_to_stdout=not args.out)
    return 0


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    problem, gts, outputs = _build_problem_from_manifest(manifest)
    surface = sweep_surface(
        problem, gts, outputs, step=config.grid_step, target_sum=config.weight_sum
    )
    surface.to_csv(args.out)
    _progress(f"wrote {args.out}")
    best_psnr = surface.best_psnr_index
    best_ssim = surface.best_ssim_index
    payload = {
        "method_ids": list(problem.method_ids),
        "step": config.grid_step,
        "rows": int(len(surface.weights)),
        "psnr_argmax": {
            "weights": list(surface.best_psnr_weights().weights),
            "mean_psnr": None if math.isinf(surface.mean_psnr[best_psnr]) else float(surface.mean_psnr[best_psnr]),
        },
        "ssim_argmax": {
            "weights": list(surface.best_ssim_weights().weights),
            "mean_ssim": float(surface.mean_ssim[best_ssim]),
        },
    }
    _emit_json(payload, args.argmax_out)
    return 0


def cmd_rank(args) -> int:
    entrants, metric_specs = load_entrants_json(args.entrants)
    table = build_rank_table(entrants, metric_specs)
    _emit_json(table.to_json_dict(), args.out)
    _emit_table(table.to_text_table(), json_went_to_stdout=not args.out)
    return 0


def _add_config_flags(parser, with_seed=True):
    parser.add_argument("--config", metavar="PATH",
                        help="JSON RunConfig (seed, weight_sum, grid_step, ridge, "
                             "optimizer, bit_depth); flags below override it")
    if with_seed:
        parser.add_argument("--seed", type=int, metavar="N",
                            help="base seed for all randomness (PCG64 streams "
                                 "derived per method and image)")
    parser.add_argument("--bit-depth", type=int, choices=(8, 16), dest="bit_depth",
                        help="bit depth for written images (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lumifuse",
        description="Linear fusion of low-light enhancement outputs: synthesize "
                    "data, enhance, fit fusion weights, fuse, evaluate, and rank.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="synthesize low-light inputs from ground truth")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--spec", required=True, metavar="PATH",
                   help="JSON DegradeSpec: gamma_d, scale, noise_sigma, seed")
    p.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_degrade)

    p = sub.add_parser("enhance", help="run stand-in enhancers over the low-light inputs")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--specs", required=True, metavar="PATH",
                   help="JSON list of named enhancer entries; an entry may set "
                        "random_gamma (true or {lo, hi}) to pre-apply the random "
                        "gamma augmentation to its input")
    p.add_argument("--out-root", required=True, metavar="DIR", dest="out_root")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_enhance)

    p = sub.add_parser("optimize", help="fit fusion weights on a tuning manifest")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--out", metavar="PATH", help="weights JSON (stdout when omitted)")
    p.add_argument("--optimizer", choices=OPTIMIZERS,
                   help="closed_form (default; weights may be negative) or grid "
                        "(nonnegative simplex search scored by mean PSNR)")
    p.add_argument("--ridge", type=float, metavar="EPS",
                   help="Tikhonov regularization for near-duplicate methods (default 0)")
    p.add_argument("--weight-sum", type=float, metavar="A", dest="weight_sum",
                   help="required sum of the fusion weights (default 1)")
    p.add_argument("--grid-step", type=float, metavar="S", dest="grid_step",
                   help="grid spacing for the grid optimizer (default 0.02)")
    p.add_argument("--surface", metavar="PATH",
                   help="surface CSV path for grid mode (default: <out>.surface.csv)")
    _add_config_flags(p, with_seed=False)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("fuse", help="write fused images for a weight vector")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--weights", required=True, metavar="PATH",
                   help="weights JSON (as produced by optimize)")
    p.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p, with_seed=False)
    p.set_defaults(handler=cmd_fuse)

    p = sub.add_parser("evaluate", help="PSNR/SSIM report for a candidate directory")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--candidate", required=True, metavar="DIR",
                   help="directory holding <id>.png for every manifest id")
    p.add_argument("--out", metavar="PATH", help="report JSON (stdout when omitted)")
    p.add_argument("--weights", metavar="PATH",
                   help="weights JSON from optimize; flags same-set fitting and "
                        "echoes its fit diagnostics into the report")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("sweep", help="exhaustive weight-surface sweep to CSV")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH", help="surface CSV path")
    p.add_argument("--grid-step", type=float, metavar="S", dest="grid_step")
    p.add_argument("--weight-sum", type=float, metavar="A", dest="weight_sum")
    p.add_argument("--argmax-out", metavar="PATH", dest="argmax_out",
                   help="where to write the per-metric argmax JSON (stdout when omitted)")
    _add_config_flags(p, with_seed=False)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("rank", help="weighted-rank aggregation of a leaderboard")
    p.add_argument("--entrants", required=True, metavar="PATH",
                   help="JSON with a metric-spec block and per-entrant values or ranks")
    p.add_argument("--out", metavar="PATH", help="rank-table JSON (stdout when omitted)")
    p.set_defaults(handler=cmd_rank)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
