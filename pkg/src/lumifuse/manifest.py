"""Dataset manifests: low/ground-truth image pairs plus method output dirs.

A manifest is a version-tagged JSON file. Paths inside it are resolved
relative to the manifest's own directory, so a dataset tree can be moved
wholesale. Method directories are validated eagerly on load: every pair id
must have a `<dir>/<id>.png` output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .image_io import default_output_name, load_raster
from .raster import Raster

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ImagePairRecord:
    """One dataset entry: id (filename stem), low-light path, ground-truth path."""

    image_id: str
    low_path: Path
    gt_path: Path

    def __post_init__(self):
        default_output_name(self.image_id)  # id validity check
        object.__setattr__(self, "low_path", Path(self.low_path))
        object.__setattr__(self, "gt_path", Path(self.gt_path))


@dataclass(frozen=True)
class Manifest:
    version: int = MANIFEST_VERSION
    pairs: tuple = ()
    methods: Mapping[str, Path] = field(default_factory=dict)

    def __post_init__(self):
        if self.version != MANIFEST_VERSION:
            raise ValueError(
                f"unsupported manifest version {self.version!r}, expected {MANIFEST_VERSION}"
            )
        ids = [pair.image_id for pair in self.pairs]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate pair ids in manifest: {dupes}")
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(
            self, "methods", {name: Path(p) for name, p in sorted(self.methods.items())}
        )

    @property
    def ids(self) -> list:
        return sorted(pair.image_id for pair in self.pairs)

    def pair_by_id(self, image_id: str) -> ImagePairRecord:
        for pair in self.pairs:
            if pair.image_id == image_id:
                return pair
        raise KeyError(image_id)

    def method_output_path(self, method: str, image_id: str) -> Path:
        return self.methods[method] / default_output_name(image_id)


def _validate_method_coverage(manifest: Manifest, source: Path) -> None:
    problems = []
    for method, directory in manifest.methods.items():
        if not directory.is_dir():
            problems.append(f"method '{method}': directory {directory} does not exist")
            continue
        missing = [
            pair.image_id
            for pair in manifest.pairs
            if not (directory / default_output_name(pair.image_id)).is_file()
        ]
        if missing:
            problems.append(f"method '{method}': missing outputs for ids {sorted(missing)}")
    if problems:
        raise ValueError(f"{source}: " + "; ".join(problems))


def load_manifest(path) -> Manifest:
    """Parse and validate a manifest; paths come back absolute."""
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    try:
        version = payload["version"]
        raw_pairs = payload["pairs"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed manifest ({exc})") from exc

    pairs = []
    for entry in raw_pairs:
        try:
            image_id = entry["id"]
            gt = entry["gt"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: malformed pair entry {entry!r} ({exc})") from exc
        # A ground-truth-only dataset (before synthetic degradation) may
        # omit "low"; it then points at the ground truth.
        low = entry.get("low", gt)
        pairs.append(
            ImagePairRecord(
                image_id=image_id,
                low_path=(base / low).resolve(),
                gt_path=(base / gt).resolve(),
            )
        )
    methods = {
        name: (base / p).resolve() for name, p in payload.get("methods", {}).items()
    }
    manifest = Manifest(version=version, pairs=tuple(pairs), methods=methods)
    _validate_method_coverage(manifest, path)
    return manifest


def save_manifest(manifest: Manifest, path) -> None:
    """Write a manifest with paths stored relative to its directory."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path) -> str:
        return os.path.relpath(Path(p).resolve(), base)

    payload = {
        "version": manifest.version,
        "pairs": [
            {"id": pair.image_id, "low": rel(pair.low_path), "gt": rel(pair.gt_path)}
            for pair in manifest.pairs
        ],
        "methods": {name: rel(p) for name, p in manifest.methods.items()},
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_gts(manifest: Manifest) -> dict:
    return {pair.image_id: load_raster(pair.gt_path) for pair in manifest.pairs}


def load_lows(manifest: Manifest) -> dict:
    """Low-light inputs, checked against their ground truth's dimensions."""
    lows = {}
    for pair in manifest.pairs:
        low = load_raster(pair.low_path)
        gt = load_raster(pair.gt_path)
        if low.data.shape != gt.data.shape:
            raise ValueError(
                f"pair '{pair.image_id}': low is {low.height}x{low.width} but "
                f"ground truth is {gt.height}x{gt.width}"
            )
        lows[pair.image_id] = low
    return lows


def load_method_outputs(manifest: Manifest, method: str) -> dict:
    if method not in manifest.methods:
        raise ValueError(f"manifest has no method {method!r}")
    return {
        pair.image_id: load_raster(manifest.method_output_path(method, pair.image_id))
        for pair in manifest.pairs
    }


def load_all_methods(manifest: Manifest) -> dict:
    """{method: {id: raster}} for every method, in sorted method order."""
    return {name: load_method_outputs(manifest, name) for name in manifest.methods}
