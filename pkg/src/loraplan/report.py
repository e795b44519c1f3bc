"""Full analysis assembly and table rendering.

:func:`build_report` turns evaluation records, baselines and a budget
table into every derived table and plot-data series; the render functions
emit those tables as CSV, JSON or markdown with identical cell values.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .analytics import (
    BENCHMARKS,
    DEFAULT_TARGET_MAP,
    AnalyticsError,
    BaselineTable,
    DeltaCell,
    EvalRecord,
    HeatmapGrid,
    ParetoPoint,
    Recipe,
    delta_table,
    efficiency_ratio,
    forgetting_score,
    heatmap_matrix,
    mean_accuracy,
    pareto_frontier,
    select_recipe,
)
from .bootstrap import outcomes_from_accuracy, paired_bootstrap_ci

__all__ = [
    "AnalysisOptions",
    "Table",
    "RadarSeries",
    "ReportBundle",
    "build_report",
    "render_csv_tables",
    "render_json",
    "render_markdown",
]

FULL_CONDITIONS = ("all_layers", "all_eligible")
SINGLE_COMPONENT_CONDITIONS = (
    "softmax_only",
    "gdn_only",
    "attention_only",
    "ssm_only",
    "mlp_only",
)

# Per-column cell formats; anything unlisted renders via str().
_FORMATS = {
    "acc": "{:.3f}",
    "pp": "{:+.1f}",
    "params_M": "{:.2f}",
    "pp_per_M": "{:.2f}",
    "pct": "{:.2f}",
}


@dataclass(frozen=True)
class AnalysisOptions:
    target_map: dict[str, str | None] = field(default_factory=lambda: dict(DEFAULT_TARGET_MAP))
    threshold: float = 0.95
    seed: int = 0
    n_resamples: int = 10_000
    published_recipes: tuple[tuple[str, str, str, float], ...] = ()


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[str, ...]
    formats: tuple[str, ...]  # one format key per column ("" = plain str)
    rows: tuple[tuple, ...]

    def rendered_rows(self) -> list[list[str]]:
        out = []
        for row in self.rows:
            cells = []
            for value, fmt in zip(row, self.formats):
                if fmt and fmt in _FORMATS and value is not None:
                    cells.append(_FORMATS[fmt].format(value))
                elif isinstance(value, bool):
                    cells.append("true" if value else "false")
                elif value is None:
                    cells.append("")
                else:
                    cells.append(str(value))
            out.append(cells)
        return out


@dataclass(frozen=True)
class RadarSeries:
    model: str
    train_domain: str
    axes: tuple[str, ...]
    series: tuple[tuple[str, tuple[float, ...]], ...]  # (condition, per-axis accuracy)


@dataclass(frozen=True)
class ReportBundle:
    tables: dict[str, Table]
    heatmaps: tuple[HeatmapGrid, ...]
    radars: tuple[RadarSeries, ...]
    pareto: dict[str, tuple[ParetoPoint, ...]]
    recipes: tuple[Recipe, ...]
    warnings: tuple[str, ...]


def _complete_grids(
    records: list[EvalRecord],
) -> tuple[dict[tuple[str, str], list[EvalRecord]], list[str]]:
    """Split records into complete (model, domain) grids; report missing keys."""
    grids: dict[tuple[str, str], list[EvalRecord]] = {}
    for rec in records:
        grids.setdefault((rec.model, rec.train_domain), []).append(rec)
    complete: dict[tuple[str, str], list[EvalRecord]] = {}
    problems: list[str] = []
    for key, recs in sorted(grids.items()):
        by_cond: dict[str, set[str]] = {}
        for rec in recs:
            by_cond.setdefault(rec.condition, set()).add(rec.benchmark)
        missing = [
            (cond, bench)
            for cond, seen in sorted(by_cond.items())
            for bench in BENCHMARKS
            if bench not in seen
        ]
        if missing:
            problems.append(f"incomplete grid {key}: missing {missing}")
        else:
            complete[key] = recs
    return complete, problems


def build_report(
    records: list[EvalRecord],
    baselines: BaselineTable,
    budgets: dict[tuple[str, str], float],
    options: AnalysisOptions = AnalysisOptions(),
) -> ReportBundle:
    """Compute every derived table and plot series from the inputs."""
    if not records:
        raise AnalyticsError("no evaluation records to analyze")
    grids, problems = _complete_grids(records)
    if not grids:
        raise AnalyticsError("no complete (model, domain) grid: " + "; ".join(problems))
    warnings = list(problems)

    deltas: list[DeltaCell] = []
    for recs in grids.values():
        deltas.extend(delta_table(recs, baselines))
    forgetting = forgetting_score(deltas, options.target_map)

    mean_rows = []
    means: dict[tuple[str, str, str], float] = {}
    for (model, domain), recs in grids.items():
        by_cond: dict[str, list[EvalRecord]] = {}
        for rec in recs:
            by_cond.setdefault(rec.condition, []).append(rec)
        for cond, cond_recs in sorted(by_cond.items()):
            value = mean_accuracy(cond_recs)
            means[(model, domain, cond)] = value
            mean_rows.append((model, domain, cond, value))

    # Recipes, per grid that carries a full condition.
    recipes: list[Recipe] = []
    recipe_rows = []
    published = {(m, d): (c, p) for m, d, c, p in options.published_recipes}
    for (model, domain), recs in grids.items():
        conds = {r.condition for r in recs}
        full = next((c for c in FULL_CONDITIONS if c in conds), None)
        if full is None:
            warnings.append(f"no full-model condition in grid ({model}, {domain}); recipe skipped")
            continue
        cond_budgets = {c: budgets[(model, c)] for c in conds if (model, c) in budgets}
        missing = sorted(conds - set(cond_budgets))
        if missing:
            raise AnalyticsError(f"budgets missing for {model}: {missing}")
        recipe = select_recipe(recs, cond_budgets, full, options.threshold)
        recipes.append(recipe)
        note = ""
        matches = None
        if (model, domain) in published:
            pub_cond, pub_params = published[(model, domain)]
            matches = recipe.condition == pub_cond
            if not matches:
                note = (
                    f"rule selects {recipe.condition} ({recipe.trainable_params_M:.2f}M) "
                    f"but published table lists {pub_cond} ({pub_params:.2f}M)"
                )
        recipe_rows.append(
            (
                recipe.model,
                recipe.train_domain,
                recipe.condition,
                recipe.trainable_params_M,
                recipe.meets_threshold,
                matches,
                note,
            )
        )

    # Efficiency: target-task gain per million parameters, for domains with a target.
    efficiency_rows = []
    for (model, domain), recs in grids.items():
        target = options.target_map.get(domain)
        if target is None:
            continue
        cells = {
            c.condition: c.delta_pp
            for c in deltas
            if c.model == model and c.train_domain == domain and c.benchmark == target
        }
        for cond in sorted(cells):
            if (model, cond) not in budgets:
                continue
            params = budgets[(model, cond)]
            efficiency_rows.append(
                (model, domain, cond, params, cells[cond], efficiency_ratio(cells[cond], params))
            )

    # Pareto scatter: one point per (condition, domain) pair, per model.
    pareto: dict[str, tuple[ParetoPoint, ...]] = {}
    for model in sorted({m for m, _ in grids}):
        points = [
            ParetoPoint(
                condition=cond,
                trainable_params_M=budgets[(model, cond)],
                mean_accuracy=value,
                label=domain,
            )
            for (m, domain, cond), value in sorted(means.items())
            if m == model and (model, cond) in budgets
        ]
        if points:
            pareto[model] = tuple(pareto_frontier(points))

    heatmaps = []
    radars = []
    for (model, domain), recs in grids.items():
        grid_deltas = [c for c in deltas if c.model == model and c.train_domain == domain]
        heatmaps.append(heatmap_matrix(grid_deltas, options.target_map))
        conds = {r.condition for r in recs}
        full = next((c for c in FULL_CONDITIONS if c in conds), None)
        series_conds = [c for c in SINGLE_COMPONENT_CONDITIONS if c in conds]
        if full is not None:
            series_conds.append(full)
        accs = {(r.condition, r.benchmark): r.accuracy for r in recs}
        radars.append(
            RadarSeries(
                model=model,
                train_domain=domain,
                axes=BENCHMARKS,
                series=tuple(
                    (cond, tuple(accs[(cond, b)] for b in BENCHMARKS)) for cond in series_conds
                ),
            )
        )

    # Paired bootstrap on synthetic instance vectors: recommended vs full
    # condition, per benchmark.  Synthetic because per-instance outcomes are
    # not part of the results schema; vectors are maximally concordant.
    bootstrap_rows = []
    for recipe in recipes:
        model, domain = recipe.model, recipe.train_domain
        conds = {r.condition for r in grids[(model, domain)]}
        full = next(c for c in FULL_CONDITIONS if c in conds)
        if recipe.condition == full:
            continue
        recs = {(r.condition, r.benchmark): r for r in grids[(model, domain)]}
        for bench in BENCHMARKS:
            rec_a = recs[(recipe.condition, bench)]
            rec_b = recs[(full, bench)]
            n = min(rec_a.n_samples, rec_b.n_samples)
            a = outcomes_from_accuracy(rec_a.accuracy, n, bench, rec_a.condition)
            b = outcomes_from_accuracy(rec_b.accuracy, n, bench, rec_b.condition)
            result = paired_bootstrap_ci(
                a,
                b,
                n_resamples=options.n_resamples,
                seed=options.seed,
                comparison_id=f"{model}|{domain}|{bench}|{recipe.condition}|{full}",
            )
            bootstrap_rows.append(
                (
                    model,
                    domain,
                    bench,
                    recipe.condition,
                    full,
                    result.mean_diff_pp,
                    result.ci_low_pp,
                    result.ci_high_pp,
                    n,
                    result.n_resamples,
                    result.seed,
                    result.significant,
                    True,  # synthetic instance vectors
                )
            )

    tables = {
        "budgets": Table(
            name="budgets",
            columns=("model", "condition", "params_M"),
            formats=("", "", "params_M"),
            rows=tuple((m, c, p) for (m, c), p in sorted(budgets.items())),
        ),
        "deltas": Table(
            name="deltas",
            columns=("model", "train_domain", "condition", "benchmark", "delta_pp"),
            formats=("", "", "", "", "pp"),
            rows=tuple(
                (c.model, c.train_domain, c.condition, c.benchmark, c.delta_pp)
                for c in sorted(deltas, key=lambda c: c.key)
            ),
        ),
        "forgetting": Table(
            name="forgetting",
            columns=("model", "train_domain", "condition", "forgetting_pp"),
            formats=("", "", "", "pp"),
            rows=tuple(
                (s.model, s.train_domain, s.condition, s.score_pp) for s in forgetting
            ),
        ),
        "mean_accuracy": Table(
            name="mean_accuracy",
            columns=("model", "train_domain", "condition", "mean_accuracy"),
            formats=("", "", "", "acc"),
            rows=tuple(mean_rows),
        ),
        "efficiency": Table(
            name="efficiency",
            columns=("model", "train_domain", "condition", "params_M", "delta_pp", "pp_per_M"),
            formats=("", "", "", "params_M", "pp", "pp_per_M"),
            rows=tuple(efficiency_rows),
        ),
        "recipes": Table(
            name="recipes",
            columns=(
                "model",
                "train_domain",
                "condition",
                "params_M",
                "meets_threshold",
                "matches_published",
                "note",
            ),
            formats=("", "", "", "params_M", "", "", ""),
            rows=tuple(recipe_rows),
        ),
        "bootstrap": Table(
            name="bootstrap",
            columns=(
                "model",
                "train_domain",
                "benchmark",
                "condition_a",
                "condition_b",
                "mean_diff_pp",
                "ci_low_pp",
                "ci_high_pp",
                "n_instances",
                "n_resamples",
                "seed",
                "significant",
                "synthetic_instances",
            ),
            formats=("", "", "", "", "", "pp", "pp", "pp", "", "", "", "", ""),
            rows=tuple(bootstrap_rows),
        ),
    }
    return ReportBundle(
        tables=tables,
        heatmaps=tuple(heatmaps),
        radars=tuple(radars),
        pareto=pareto,
        recipes=tuple(recipes),
        warnings=tuple(warnings),
    )


# -- rendering ---------------------------------------------------------------


def render_csv_tables(bundle: ReportBundle) -> dict[str, str]:
    """One CSV document per table, keyed by table name."""
    out = {}
    for name, table in bundle.tables.items():
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(table.rendered_rows())
        out[name] = buf.getvalue()
    return out


def _plot_data_doc(bundle: ReportBundle) -> dict:
    return {
        "heatmaps": [
            {
                "model": h.model,
                "train_domain": h.train_domain,
                "benchmarks": list(h.benchmarks),
                "conditions": list(h.conditions),
                "delta_pp": [list(row) for row in h.values],
            }
            for h in bundle.heatmaps
        ],
        "radars": [
            {
                "model": r.model,
                "train_domain": r.train_domain,
                "axes": list(r.axes),
                "series": [{"condition": c, "accuracy": list(v)} for c, v in r.series],
            }
            for r in bundle.radars
        ],
        "pareto": {
            model: [
                {
                    "condition": p.condition,
                    "train_domain": p.label,
                    "params_M": p.trainable_params_M,
                    "mean_accuracy": p.mean_accuracy,
                    "dominated": p.dominated,
                }
                for p in points
            ]
            for model, points in bundle.pareto.items()
        },
    }


def render_json(bundle: ReportBundle) -> str:
    doc = {
        "tables": {
            name: {"columns": list(t.columns), "rows": t.rendered_rows()}
            for name, t in bundle.tables.items()
        },
        "plot_data": _plot_data_doc(bundle),
        "warnings": list(bundle.warnings),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def render_markdown(bundle: ReportBundle) -> str:
    lines = ["# Placement analysis report", ""]
    for name, table in bundle.tables.items():
        lines.append(f"## {name}")
        lines.append("")
        lines.append("| " + " | ".join(table.columns) + " |")
        lines.append("|" + "|".join([" --- "] * len(table.columns)) + "|")
        for row in table.rendered_rows():
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    if bundle.warnings:
        lines.append("## warnings")
        lines.append("")
        for w in bundle.warnings:
            lines.append(f"- {w}")
        lines.append("")
    return "\n".join(lines)
