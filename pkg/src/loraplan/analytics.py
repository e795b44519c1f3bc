"""Derived metrics over evaluation results.

Everything here is computed from benchmark accuracies and a no-fine-tuning
baseline table: per-cell deltas in percentage points, forgetting scores on
off-target benchmarks, efficiency ratios, per-condition mean accuracies,
Pareto domination over (trainable params, mean accuracy), and the
smallest-parameter recipe meeting a threshold of the full-model condition.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

__all__ = [
    "AnalyticsError",
    "BENCHMARKS",
    "TRAIN_DOMAINS",
    "DEFAULT_TARGET_MAP",
    "EvalRecord",
    "BaselineTable",
    "DeltaCell",
    "ForgettingScore",
    "ParetoPoint",
    "Recipe",
    "delta_table",
    "forgetting_score",
    "efficiency_ratio",
    "mean_accuracy",
    "pareto_frontier",
    "select_recipe",
    "heatmap_matrix",
    "load_records",
    "load_baselines",
]

BENCHMARKS = ("MMLU", "GSM8K", "ARC-C", "HellaSwag")
TRAIN_DOMAINS = ("gsm8k", "codealpaca", "ultrachat")

# codealpaca's target benchmark (HumanEval) is excluded from quantitative
# comparison, and ultrachat has no single target; for both, every benchmark
# counts as off-target.
DEFAULT_TARGET_MAP: dict[str, str | None] = {
    "gsm8k": "GSM8K",
    "codealpaca": None,
    "ultrachat": None,
}


class AnalyticsError(Exception):
    """Raised for incomplete grids, missing baselines or invalid records."""


@dataclass(frozen=True)
class EvalRecord:
    """One benchmark accuracy for a (model, training domain, condition) run."""

    model: str
    train_domain: str
    condition: str
    benchmark: str
    accuracy: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.train_domain not in TRAIN_DOMAINS:
            raise AnalyticsError(f"unknown train domain {self.train_domain!r}")
        if self.benchmark not in BENCHMARKS:
            raise AnalyticsError(f"unknown benchmark {self.benchmark!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise AnalyticsError(
                f"accuracy {self.accuracy} outside [0, 1] for "
                f"({self.model}, {self.train_domain}, {self.condition}, {self.benchmark})"
            )
        if self.n_samples <= 0:
            raise AnalyticsError("n_samples must be positive")

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.model, self.train_domain, self.condition, self.benchmark)


@dataclass(frozen=True)
class BaselineTable:
    """No-fine-tuning accuracy per (model, benchmark)."""

    accuracies: dict[tuple[str, str], float]

    def get(self, model: str, benchmark: str) -> float:
        try:
            return self.accuracies[(model, benchmark)]
        except KeyError:
            raise AnalyticsError(
                f"no baseline for model {model!r} on benchmark {benchmark!r}"
            ) from None


@dataclass(frozen=True)
class DeltaCell:
    """Accuracy change versus baseline, in signed percentage points."""

    model: str
    train_domain: str
    condition: str
    benchmark: str
    delta_pp: float

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.model, self.train_domain, self.condition, self.benchmark)


@dataclass(frozen=True)
class ForgettingScore:
    """Negative mean off-target delta; positive values mean degradation."""

    model: str
    train_domain: str
    condition: str
    score_pp: float


@dataclass(frozen=True)
class ParetoPoint:
    condition: str
    trainable_params_M: float
    mean_accuracy: float
    dominated: bool = False
    label: str = ""  # free-form tag, e.g. the training domain


@dataclass(frozen=True)
class Recipe:
    model: str
    train_domain: str
    condition: str
    trainable_params_M: float
    meets_threshold: bool


def _check_unique(records: list[EvalRecord]) -> None:
    seen: set[tuple[str, str, str, str]] = set()
    for rec in records:
        if rec.key in seen:
            raise AnalyticsError(f"duplicate evaluation record for key {rec.key}")
        seen.add(rec.key)


def delta_table(records: list[EvalRecord], baselines: BaselineTable) -> list[DeltaCell]:
    """One delta cell per record: 100 * (accuracy - baseline)."""
    _check_unique(records)
    return [
        DeltaCell(
            model=rec.model,
            train_domain=rec.train_domain,
            condition=rec.condition,
            benchmark=rec.benchmark,
            delta_pp=100.0 * (rec.accuracy - baselines.get(rec.model, rec.benchmark)),
        )
        for rec in records
    ]


def forgetting_score(
    deltas: list[DeltaCell],
    target_map: dict[str, str | None] = DEFAULT_TARGET_MAP,
) -> list[ForgettingScore]:
    """Forgetting per (model, domain, condition): minus the mean off-target delta."""
    groups: dict[tuple[str, str, str], list[DeltaCell]] = {}
    for cell in deltas:
        groups.setdefault((cell.model, cell.train_domain, cell.condition), []).append(cell)
    scores = []
    for (model, domain, condition), cells in sorted(groups.items()):
        if domain not in target_map:
            raise AnalyticsError(f"target map does not cover domain {domain!r}")
        target = target_map[domain]
        off = [c.delta_pp for c in cells if c.benchmark != target]
        if not off:
            raise AnalyticsError(
                f"no off-target benchmark for ({model}, {domain}, {condition})"
            )
        scores.append(
            ForgettingScore(
                model=model,
                train_domain=domain,
                condition=condition,
                score_pp=-sum(off) / len(off),
            )
        )
    return scores


def efficiency_ratio(delta_pp: float, params_M: float) -> float:
    """Accuracy gain in percentage points per million trainable parameters."""
    if params_M <= 0:
        raise AnalyticsError("params_M must be positive")
    return delta_pp / params_M


def mean_accuracy(records: list[EvalRecord]) -> float:
    """Unweighted mean over the four benchmarks of one (model, domain, condition)."""
    keys = {(r.model, r.train_domain, r.condition) for r in records}
    if len(keys) != 1:
        raise AnalyticsError("mean_accuracy expects records of exactly one run")
    by_bench = {r.benchmark: r.accuracy for r in records}
    missing = [b for b in BENCHMARKS if b not in by_bench]
    if missing:
        raise AnalyticsError(f"missing benchmarks {missing} for {next(iter(keys))}")
    return sum(by_bench[b] for b in BENCHMARKS) / len(BENCHMARKS)


def _dominates(p: ParetoPoint, q: ParetoPoint) -> bool:
    """p dominates q: fewer-or-equal params, higher-or-equal accuracy, one strict."""
    return (
        p.trainable_params_M <= q.trainable_params_M
        and p.mean_accuracy >= q.mean_accuracy
        and (
            p.trainable_params_M < q.trainable_params_M
            or p.mean_accuracy > q.mean_accuracy
        )
    )


def pareto_frontier(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Set each point's dominated flag; order is preserved."""
    if not points:
        raise AnalyticsError("pareto_frontier needs at least one point")
    out = []
    for i, q in enumerate(points):
        dominated = any(_dominates(p, q) for j, p in enumerate(points) if j != i)
        out.append(
            ParetoPoint(
                condition=q.condition,
                trainable_params_M=q.trainable_params_M,
                mean_accuracy=q.mean_accuracy,
                dominated=dominated,
                label=q.label,
            )
        )
    return out


def select_recipe(
    records: list[EvalRecord],
    budgets: dict[str, float],
    full_condition: str,
    threshold: float = 0.95,
) -> Recipe:
    """Smallest-parameter condition reaching threshold x full-model mean accuracy.

    Ties break lexicographically by condition name.  When nothing
    qualifies the full condition itself is returned with
    ``meets_threshold`` false.
    """
    if not 0.0 <= threshold <= 1.0:
        raise AnalyticsError("threshold must lie in (0, 1]")
    keys = {(r.model, r.train_domain) for r in records}
    if len(keys) != 1:
        raise AnalyticsError("select_recipe expects records of one (model, domain)")
    model, domain = next(iter(keys))

    by_condition: dict[str, list[EvalRecord]] = {}
    for rec in records:
        by_condition.setdefault(rec.condition, []).append(rec)
    if full_condition not in by_condition:
        raise AnalyticsError(
            f"full condition {full_condition!r} absent for ({model}, {domain})"
        )
    means = {cond: mean_accuracy(recs) for cond, recs in by_condition.items()}
    for cond in means:
        if cond not in budgets:
            raise AnalyticsError(f"no parameter budget for condition {cond!r}")

    bar = threshold * means[full_condition]
    qualifying = [c for c, m in means.items() if m >= bar]
    if not qualifying:
        return Recipe(model, domain, full_condition, budgets[full_condition], False)
    best = min(qualifying, key=lambda c: (budgets[c], c))
    return Recipe(model, domain, best, budgets[best], True)


@dataclass(frozen=True)
class HeatmapGrid:
    """Benchmark x condition delta grid for one (model, domain)."""

    model: str
    train_domain: str
    benchmarks: tuple[str, ...]
    conditions: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # values[row][col], row per benchmark

    def cell(self, benchmark: str, condition: str) -> float:
        return self.values[self.benchmarks.index(benchmark)][self.conditions.index(condition)]


def heatmap_matrix(
    deltas: list[DeltaCell],
    target_map: dict[str, str | None] = DEFAULT_TARGET_MAP,
) -> HeatmapGrid:
    """Grid of deltas for one (model, domain); rows in fixed benchmark order.

    Columns are sorted by target-benchmark delta descending when the domain
    has a target, else by mean delta descending; ties break by name.
    """
    keys = {(c.model, c.train_domain) for c in deltas}
    if len(keys) != 1:
        raise AnalyticsError("heatmap_matrix expects deltas of one (model, domain)")
    model, domain = next(iter(keys))
    cells = {(c.condition, c.benchmark): c.delta_pp for c in deltas}
    conditions = sorted({c.condition for c in deltas})
    missing = [
        (cond, bench)
        for cond in conditions
        for bench in BENCHMARKS
        if (cond, bench) not in cells
    ]
    if missing:
        raise AnalyticsError(f"incomplete grid for ({model}, {domain}): missing {missing}")

    target = target_map.get(domain)
    if target is not None:
        sort_key = lambda cond: (-cells[(cond, target)], cond)
    else:
        sort_key = lambda cond: (
            -sum(cells[(cond, b)] for b in BENCHMARKS) / len(BENCHMARKS),
            cond,
        )
    ordered = tuple(sorted(conditions, key=sort_key))
    values = tuple(
        tuple(cells[(cond, bench)] for cond in ordered) for bench in BENCHMARKS
    )
    return HeatmapGrid(
        model=model,
        train_domain=domain,
        benchmarks=BENCHMARKS,
        conditions=ordered,
        values=values,
    )


# -- ingestion ---------------------------------------------------------------

_RESULT_FIELDS = ("model", "train_domain", "condition", "benchmark", "accuracy", "n_samples")


def _records_from_rows(rows: list[dict]) -> list[EvalRecord]:
    records = []
    for i, row in enumerate(rows):
        missing = [f for f in _RESULT_FIELDS if f not in row or row[f] in (None, "")]
        if missing:
            raise AnalyticsError(f"result row {i} missing fields {missing}")
        records.append(
            EvalRecord(
                model=str(row["model"]),
                train_domain=str(row["train_domain"]),
                condition=str(row["condition"]),
                benchmark=str(row["benchmark"]),
                accuracy=float(row["accuracy"]),
                n_samples=int(row["n_samples"]),
            )
        )
    _check_unique(records)
    return records


def load_records(text: str) -> list[EvalRecord]:
    """Parse evaluation results from JSON (array of objects) or CSV text."""
    stripped = text.lstrip()
    if not stripped:
        raise AnalyticsError("results input is empty")
    if stripped.startswith("["):
        try:
            rows = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise AnalyticsError(f"malformed results JSON: {exc}") from exc
        if not isinstance(rows, list):
            raise AnalyticsError("results JSON must be an array of objects")
        return _records_from_rows(rows)
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise AnalyticsError("results input is empty")
    return _records_from_rows(rows)


def load_baselines(text: str) -> BaselineTable:
    """Parse the baseline table from JSON or CSV with (model, benchmark, accuracy)."""
    stripped = text.lstrip()
    if not stripped:
        raise AnalyticsError("baselines input is empty")
    if stripped.startswith("["):
        try:
            rows = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise AnalyticsError(f"malformed baselines JSON: {exc}") from exc
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    table: dict[tuple[str, str], float] = {}
    for i, row in enumerate(rows):
        try:
            key = (str(row["model"]), str(row["benchmark"]))
            acc = float(row["accuracy"])
        except (KeyError, TypeError, ValueError) as exc:
            raise AnalyticsError(f"baseline row {i} invalid: {exc}") from exc
        if key in table:
            raise AnalyticsError(f"duplicate baseline for {key}")
        if not 0.0 <= acc <= 1.0:
            raise AnalyticsError(f"baseline accuracy {acc} outside [0, 1] for {key}")
        table[key] = acc
    return BaselineTable(accuracies=table)
