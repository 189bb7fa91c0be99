"""Weighted-rank aggregation for challenge leaderboards.

Per-metric competition ("min") ranks are combined into a weighted total,
lower is better. Competition ranking means tied values all receive the
smallest rank of their tie group, and the next distinct value's rank is
one plus the number of strictly better entrants - the only tie rule
consistent with published challenge tables.

Each metric accepts exactly one input mode across all entrants: raw
values (ranked here) or externally supplied ranks (passed through, for
leaderboards whose ranks reflect a larger hidden field of teams).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"
_DIRECTIONS = (HIGHER_BETTER, LOWER_BETTER)


@dataclass(frozen=True)
class MetricSpec:
    name: str
    direction: str
    weight: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("metric name must be non-empty")
        if self.direction not in _DIRECTIONS:
            raise ValueError(
                f"direction must be one of {_DIRECTIONS}, got {self.direction!r}"
            )
        if not math.isfinite(self.weight) or self.weight < 0:
            raise ValueError(f"weight must be finite and >= 0, got {self.weight}")


def compute_ranks(values: Mapping[str, float], direction: str) -> dict:
    """Competition ranks: rank(e) = 1 + count of strictly better entrants."""
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
    if not values:
        raise ValueError("cannot rank an empty set of entrants")
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"entrant {name!r} has non-finite value {value!r}")

    def beats(x: float, y: float) -> bool:
        return x > y if direction == HIGHER_BETTER else x < y

    return {
        name: 1 + sum(1 for other in values.values() if beats(other, value))
        for name, value in values.items()
    }


def total_score(ranks: Mapping[str, int], weights: Mapping[str, float]) -> float:
    """Weighted sum of ranks; every ranked metric must have a weight."""
    total = 0.0
    for metric, rank in ranks.items():
        if metric not in weights:
            raise ValueError(f"missing weight for metric {metric!r}")
        total += weights[metric] * rank
    return total


@dataclass(frozen=True)
class RankRow:
    name: str
    ranks: Mapping[str, int]
    total: float
    values: Mapping[str, float]


@dataclass(frozen=True)
class RankTable:
    """Entrants with per-metric ranks and weighted totals, best first."""

    metric_specs: tuple
    rows: tuple

    def to_json_dict(self) -> dict:
        return {
            "metrics": [
                {"name": m.name, "direction": m.direction, "weight": m.weight}
                for m in self.metric_specs
            ],
            "entrants": [
                {
                    "name": row.name,
                    "ranks": {m.name: row.ranks[m.name] for m in self.metric_specs},
                    **(
                        {"values": {k: row.values[k] for k in sorted(row.values)}}
                        if row.values
                        else {}
                    ),
                    "total": row.total,
                }
                for row in self.rows
            ],
        }

    def to_text_table(self) -> str:
        header = ["entrant"] + [f"rank({m.name})" for m in self.metric_specs] + ["total"]
        table = [header]
        for row in self.rows:
            table.append(
                [row.name]
                + [str(row.ranks[m.name]) for m in self.metric_specs]
                + [f"{row.total:.1f}"]
            )
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in table
        )


def build_rank_table(entrants: Sequence[Mapping], metric_specs: Sequence[MetricSpec]) -> RankTable:
    """Rank entrants over the given metrics and total them.

    Each entrant is a mapping with a `name` plus per-metric entries under
    `values` and/or `ranks`. For any one metric, all entrants must use the
    same mode; mixing values and ranks for the same metric is an error.
    """
    if not entrants:
        raise ValueError("no entrants to rank")
    if not metric_specs:
        raise ValueError("no metrics to rank by")
    names = [e.get("name") for e in entrants]
    if any(not n for n in names):
        raise ValueError("every entrant needs a non-empty name")
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate entrant names in {names}")

    weights = {m.name: m.weight for m in metric_specs}
    ranks_by_metric: dict = {}
    for metric in metric_specs:
        with_value = [e for e in entrants if metric.name in e.get("values", {})]
        with_rank = [e for e in entrants if metric.name in e.get("ranks", {})]
        if with_value and with_rank:
            raise ValueError(
                f"metric {metric.name!r} mixes raw values and supplied ranks; "
                f"pick one mode per metric"
            )
        if with_rank:
            if len(with_rank) != len(entrants):
                missing = sorted(set(names) - {e["name"] for e in with_rank})
                raise ValueError(f"metric {metric.name!r}: ranks missing for {missing}")
            column = {}
            for entrant in entrants:
                rank = entrant["ranks"][metric.name]
                if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
                    raise ValueError(
                        f"metric {metric.name!r}: rank for {entrant['name']!r} "
                        f"must be an integer >= 1, got {rank!r}"
                    )
                column[entrant["name"]] = rank
            ranks_by_metric[metric.name] = column
        elif with_value:
            if len(with_value) != len(entrants):
                missing = sorted(set(names) - {e["name"] for e in with_value})
                raise ValueError(f"metric {metric.name!r}: values missing for {missing}")
            column_values = {e["name"]: float(e["values"][metric.name]) for e in entrants}
            ranks_by_metric[metric.name] = compute_ranks(column_values, metric.direction)
        else:
            raise ValueError(f"metric {metric.name!r} has neither values nor ranks")

    rows = []
    for entrant in entrants:
        name = entrant["name"]
        ranks = {m.name: ranks_by_metric[m.name][name] for m in metric_specs}
        rows.append(
            RankRow(
                name=name,
                ranks=ranks,
                total=total_score(ranks, weights),
                values={k: float(v) for k, v in entrant.get("values", {}).items()},
            )
        )
    rows.sort(key=lambda row: (row.total, row.name))
    return RankTable(metric_specs=tuple(metric_specs), rows=tuple(rows))


def load_entrants_json(path) -> tuple[list, list]:
    """Read the rank-command input: a metric-spec block plus entrants."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        metric_specs = [
            MetricSpec(m["name"], m["direction"], float(m["weight"]))
            for m in payload["metrics"]
        ]
        entrants = list(payload["entrants"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed entrants file ({exc})") from exc
    return entrants, metric_specs
