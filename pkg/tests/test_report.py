import csv
import io
import json

import pytest

from loraplan.analytics import AnalyticsError, EvalRecord
from loraplan.report import (
    AnalysisOptions,
    build_report,
    render_csv_tables,
    render_json,
    render_markdown,
)
from loraplan.svgplots import heatmap_svg, pareto_svg, radar_svg

QWEN = "Qwen3.5-0.8B"
FALCON = "Falcon-H1-0.5B"

EXPECTED_TABLES = {
    "budgets",
    "deltas",
    "forgetting",
    "mean_accuracy",
    "efficiency",
    "recipes",
    "bootstrap",
}


@pytest.fixture(scope="module")
def bundle(records, baselines, budgets):
    options = AnalysisOptions(seed=3407, n_resamples=1000)
    return build_report(records, baselines, budgets, options)


def test_bundle_has_all_tables_and_panels(bundle):
    assert set(bundle.tables) == EXPECTED_TABLES
    assert len(bundle.heatmaps) == 6  # 2 models x 3 domains
    assert len(bundle.radars) == 6
    assert set(bundle.pareto) == {QWEN, FALCON}
    assert len(bundle.pareto[QWEN]) == 18  # 6 conditions x 3 domains


def test_radar_series_are_singles_plus_full(bundle):
    for radar in bundle.radars:
        assert radar.axes == ("MMLU", "GSM8K", "ARC-C", "HellaSwag")
        names = [name for name, _ in radar.series]
        assert len(names) == 4
        assert names[-1] in ("all_layers", "all_eligible")
        assert all(len(values) == 4 for _, values in radar.series)


def test_attention_only_points_lead_falcon_frontier(bundle):
    frontier = [p for p in bundle.pareto[FALCON] if not p.dominated]
    assert any(p.condition == "attention_only" for p in frontier)


def test_format_parity_across_renderings(bundle):
    csv_tables = render_csv_tables(bundle)
    json_doc = json.loads(render_json(bundle))
    markdown = render_markdown(bundle)

    for name, table in bundle.tables.items():
        parsed = list(csv.reader(io.StringIO(csv_tables[name])))
        csv_cells = parsed[1:]
        json_cells = json_doc["tables"][name]["rows"]
        assert csv_cells == json_cells, name

        md_section = markdown.split(f"## {name}\n")[1].split("\n## ")[0]
        md_rows = [
            [cell.strip() for cell in line.strip().strip("|").split("|")]
            for line in md_section.strip().splitlines()[2:]
        ]
        assert [[c for c in row] for row in md_rows] == csv_cells, name


def test_recipe_table_flags_published_divergence(records, baselines, budgets):
    published = (
        (QWEN, "codealpaca", "all_layers", 10.82),
        (QWEN, "gsm8k", "softmax_only", 1.08),
    )
    options = AnalysisOptions(published_recipes=published, n_resamples=500)
    bundle = build_report(records, baselines, budgets, options)
    rows = {(r[0], r[1]): r for r in bundle.tables["recipes"].rows}
    code_row = rows[(QWEN, "codealpaca")]
    assert code_row[5] is False  # matches_published
    assert "all_layers" in code_row[6]
    gsm_row = rows[(QWEN, "gsm8k")]
    assert gsm_row[5] is True
    assert gsm_row[6] == ""


def test_incomplete_grid_becomes_warning_not_error(records, baselines, budgets):
    # drop one benchmark record from one grid; the rest still analyzes
    trimmed = [
        r
        for r in records
        if not (
            r.model == QWEN
            and r.train_domain == "codealpaca"
            and r.condition == "mlp_only"
            and r.benchmark == "MMLU"
        )
    ]
    bundle = build_report(trimmed, baselines, budgets, AnalysisOptions(n_resamples=500))
    assert any("incomplete grid" in w for w in bundle.warnings)
    assert len(bundle.heatmaps) == 5


def test_no_complete_grid_is_an_error(baselines, budgets):
    lonely = [EvalRecord(QWEN, "gsm8k", "softmax_only", "GSM8K", 0.398, 128)]
    with pytest.raises(AnalyticsError, match="no complete"):
        build_report(lonely, baselines, budgets, AnalysisOptions())


def test_no_records_is_an_error(baselines, budgets):
    with pytest.raises(AnalyticsError, match="no evaluation records"):
        build_report([], baselines, budgets, AnalysisOptions())


def test_bootstrap_table_marks_synthetic_instances(bundle):
    rows = bundle.tables["bootstrap"].rows
    assert rows
    assert all(row[-1] is True for row in rows)
    # comparisons pair the recommended condition against the full condition
    assert {(r[3], r[4]) for r in rows if r[0] == FALCON} == {
        ("attention_only", "all_eligible")
    }


def test_svg_renderings_are_deterministic_and_labeled(bundle):
    grid = next(h for h in bundle.heatmaps if h.model == QWEN and h.train_domain == "gsm8k")
    svg1 = heatmap_svg(grid)
    svg2 = heatmap_svg(grid)
    assert svg1 == svg2
    assert "softmax_only" in svg1 and "GSM8K" in svg1

    radar = next(r for r in bundle.radars if r.model == FALCON and r.train_domain == "gsm8k")
    assert radar_svg(radar) == radar_svg(radar)
    assert "attention_only" in radar_svg(radar)

    svg = pareto_svg(FALCON, bundle.pareto[FALCON])
    assert svg == pareto_svg(FALCON, bundle.pareto[FALCON])
    assert "trainable parameters" in svg
