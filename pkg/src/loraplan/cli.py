"""Command-line surface: discover, plan, verify, analyze.

Exit codes are stable across commands: 0 success, 1 verification or
analysis failure, 2 input error.  Every flag can be supplied through an
environment variable named ``LORAPLAN_<FLAG>`` (dashes become
underscores); explicit flags win.  Outputs are byte-deterministic for
identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from pathlib import Path

from .analytics import (
    BENCHMARKS,
    DEFAULT_TARGET_MAP,
    TRAIN_DOMAINS,
    AnalyticsError,
    load_baselines,
    load_records,
)
from .checkpoint import SafetensorsError, parse_safetensors_header
from .descriptor import (
    DescriptorError,
    ModelDescriptor,
    descriptor_from_index,
    dump_descriptor,
    load_descriptor,
)
from .placement import (
    LoraConfig,
    PlacementError,
    budget,
    canonical_conditions,
    compile_targets,
    dump_target_list,
    load_target_list_file,
)
from .report import AnalysisOptions, ReportBundle, build_report, render_csv_tables, render_json, render_markdown
from .svgplots import heatmap_svg, pareto_svg, radar_svg
from .taxonomy import (
    DEFAULT_RULES,
    ComponentType,
    RuleSet,
    RuleSetError,
    TaxonomyError,
    classify_all,
    component_param_shares,
    detect_topology,
)
from .verify import VerifyError, load_attachment_report_file, verify_attachment

EXIT_OK = 0
EXIT_FAILURE = 1  # failed verification / failed analysis
EXIT_INPUT = 2  # unreadable, unparseable or schema-invalid inputs

_INPUT_ERRORS = (
    OSError,
    SafetensorsError,
    DescriptorError,
    RuleSetError,
    PlacementError,
    VerifyError,
    AnalyticsError,
    json.JSONDecodeError,
    ValueError,
)


class _CliFailure(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _env(flag: str) -> str | None:
    return os.environ.get("LORAPLAN_" + flag.replace("-", "_").upper())


def _add(parser: argparse.ArgumentParser, flag: str, **kwargs) -> None:
    env_value = _env(flag)
    if env_value is not None:
        kwargs["default"] = env_value
        kwargs.pop("required", None)
    parser.add_argument("--" + flag, **kwargs)


def _load_model_input(path: str) -> ModelDescriptor:
    """Accept either a safetensors file or a descriptor JSON document."""
    raw = Path(path).read_bytes()
    head = raw.lstrip()[:1]
    if head == b"{" or head == b"[":
        descriptor = load_descriptor(json.loads(raw.decode("utf-8")))
    else:
        index = parse_safetensors_header(raw)
        descriptor = descriptor_from_index(index)
        if descriptor.model_name == "unknown":
            stem = Path(path).stem
            descriptor = ModelDescriptor(
                model_name=stem,
                total_params=descriptor.total_params,
                num_layers=descriptor.num_layers,
                tree=descriptor.tree,
            )
    if not descriptor.leaves():
        raise DescriptorError(f"no modules in model input {path!r}")
    return descriptor


def _load_rules(path: str | None) -> RuleSet:
    return RuleSet.from_file(path) if path else DEFAULT_RULES


def _classified(descriptor: ModelDescriptor, rules: RuleSet) -> tuple[ModelDescriptor, list[str]]:
    if descriptor.classified and descriptor.component_labels:
        return descriptor, []
    return classify_all(descriptor, rules)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", name)


# -- discover ----------------------------------------------------------------


def cmd_discover(args: argparse.Namespace) -> int:
    try:
        descriptor = _load_model_input(args.model)
        rules = _load_rules(args.rules)
    except _INPUT_ERRORS as exc:
        print(f"loraplan discover: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        descriptor, warnings = _classified(descriptor, rules)
        topology = detect_topology(descriptor)
        shares = component_param_shares(descriptor)
    except (TaxonomyError, RuleSetError) as exc:
        print(f"loraplan discover: classification failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    descriptor = descriptor.with_labels(descriptor.component_labels, topology)
    doc = json.dumps(dump_descriptor(descriptor), indent=1, sort_keys=True) + "\n"

    counts: dict[str, int] = {}
    for comp in descriptor.component_labels.values():
        counts[comp.value] = counts.get(comp.value, 0) + 1
    summary_lines = [
        f"model: {descriptor.model_name}",
        f"total_params: {descriptor.total_params}",
        f"num_layers: {descriptor.num_layers}",
        "topology: "
        + topology.kind
        + (
            f" (mixer ratio {topology.mixer_ratio[0]}:{topology.mixer_ratio[1]})"
            if topology.mixer_ratio
            else ""
        ),
        "modules per component: "
        + ", ".join(f"{c.value}={counts.get(c.value, 0)}" for c in ComponentType),
        "parameter shares: "
        + ", ".join(f"{c.value}={shares[c]:.4f}" for c in ComponentType),
    ]
    for path in warnings:
        summary_lines.append(f"warning: unmatched path labeled Other: {path}")
    summary = "\n".join(summary_lines) + "\n"

    if args.out:
        _write_or_print(doc, args.out)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(doc)
        sys.stderr.write(summary)
    return EXIT_OK


# -- plan --------------------------------------------------------------------


def _budget_table_text(rows: list[tuple], fmt: str) -> str:
    columns = ("model", "condition", "params_M", "pct_model", "modules")
    rendered = [
        (model, cond, f"{params / 1e6:.2f}", f"{100 * frac:.2f}", str(n))
        for model, cond, params, frac, n in rows
    ]
    if fmt == "json":
        doc = {
            "columns": list(columns),
            "rows": [list(r) for r in rendered],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(columns) + " |", "|" + "|".join([" --- "] * len(columns)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rendered]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rendered)
    return buf.getvalue()


def cmd_plan(args: argparse.Namespace) -> int:
    try:
        descriptor = _load_model_input(args.model)
        rules = _load_rules(args.rules)
        lora = LoraConfig(r=int(args.rank), alpha=float(args.alpha), dropout=float(args.dropout))
    except _INPUT_ERRORS as exc:
        print(f"loraplan plan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        descriptor, _ = _classified(descriptor, rules)
        topology = descriptor.topology or detect_topology(descriptor)
        conditions = canonical_conditions(topology)
        if args.condition != "all":
            wanted = [c for c in conditions if c.name == args.condition]
            if not wanted:
                print(
                    f"loraplan plan: unknown condition {args.condition!r}; "
                    f"expected one of {[c.name for c in conditions]} or 'all'",
                    file=sys.stderr,
                )
                return EXIT_INPUT
            conditions = wanted
        compiled = [compile_targets(descriptor, cond, lora) for cond in conditions]
    except (TaxonomyError, PlacementError) as exc:
        print(f"loraplan plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    rows = []
    for targets in compiled:
        b = budget(targets, descriptor)
        rows.append(
            (descriptor.model_name, targets.condition_name, b.trainable_params, b.fraction_of_model, b.module_count)
        )
    table = _budget_table_text(rows, args.format)

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for targets in compiled:
            doc = json.dumps(dump_target_list(targets), indent=1, sort_keys=True) + "\n"
            name = f"targets_{_slug(targets.model_name)}_{targets.condition_name}.json"
            (out_dir / name).write_text(doc, encoding="utf-8")
        ext = {"csv": "csv", "json": "json", "markdown": "md"}[args.format]
        (out_dir / f"budgets.{ext}").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    elif len(compiled) == 1:
        doc = json.dumps(dump_target_list(compiled[0]), indent=1, sort_keys=True) + "\n"
        sys.stdout.write(doc)
        sys.stderr.write(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


# -- verify ------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        targets = load_target_list_file(args.targets)
        descriptor = _load_model_input(args.model)
        report = load_attachment_report_file(args.report)
        result = verify_attachment(targets, descriptor, report)
    except _INPUT_ERRORS as exc:
        print(f"loraplan verify: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    doc = json.dumps(result.to_doc(), indent=1, sort_keys=True) + "\n"
    _write_or_print(doc, args.out)
    if not result.passed:
        print(
            f"loraplan verify: FAILED ({len(result.missing)} missing, "
            f"{len(result.unexpected)} unexpected, "
            f"{len(result.shape_mismatches)} shape mismatches)",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    return EXIT_OK


# -- analyze -----------------------------------------------------------------


def _parse_target_map(spec: str | None) -> dict[str, str | None]:
    if spec is None:
        return dict(DEFAULT_TARGET_MAP)
    mapping: dict[str, str | None] = {domain: None for domain in TRAIN_DOMAINS}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise AnalyticsError(f"target-map entry {item!r} is not domain=benchmark")
        domain, bench = item.split("=", 1)
        if domain not in TRAIN_DOMAINS:
            raise AnalyticsError(f"unknown train domain {domain!r} in target map")
        if bench and bench not in BENCHMARKS:
            raise AnalyticsError(f"unknown benchmark {bench!r} in target map")
        mapping[domain] = bench or None
    return mapping


def _load_budgets_file(path: str) -> dict[tuple[str, str], float]:
    text = Path(path).read_text(encoding="utf-8")
    budgets: dict[tuple[str, str], float] = {}
    rows = (
        json.loads(text)
        if text.lstrip().startswith("[")
        else list(csv.DictReader(io.StringIO(text)))
    )
    for i, row in enumerate(rows):
        try:
            key = (str(row["model"]), str(row["condition"]))
            budgets[key] = float(row["params_M"])
        except (KeyError, TypeError, ValueError) as exc:
            raise AnalyticsError(f"budget row {i} invalid: {exc}") from exc
    if not budgets:
        raise AnalyticsError("budgets input is empty")
    return budgets


def _load_published(path: str | None) -> tuple[tuple[str, str, str, float], ...]:
    if not path:
        return ()
    text = Path(path).read_text(encoding="utf-8")
    rows = (
        json.loads(text)
        if text.lstrip().startswith("[")
        else list(csv.DictReader(io.StringIO(text)))
    )
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(
                (
                    str(row["model"]),
                    str(row["train_domain"]),
                    str(row["condition"]),
                    float(row["params_M"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise AnalyticsError(f"published recipe row {i} invalid: {exc}") from exc
    return tuple(out)


def _emit_analysis(bundle: ReportBundle, fmt: str, out: str | None) -> None:
    if fmt == "svg":
        if not out:
            raise _CliFailure(EXIT_INPUT, "svg output requires --out DIRECTORY")
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for grid in bundle.heatmaps:
            name = f"heatmap_{_slug(grid.model)}_{grid.train_domain}.svg"
            (out_dir / name).write_text(heatmap_svg(grid), encoding="utf-8")
        for radar in bundle.radars:
            name = f"radar_{_slug(radar.model)}_{radar.train_domain}.svg"
            (out_dir / name).write_text(radar_svg(radar), encoding="utf-8")
        for model, points in bundle.pareto.items():
            (out_dir / f"pareto_{_slug(model)}.svg").write_text(
                pareto_svg(model, points), encoding="utf-8"
            )
        return
    if fmt == "json":
        text = render_json(bundle)
        if out:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "report.json").write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    if fmt == "markdown":
        text = render_markdown(bundle)
        if out:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "report.md").write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    # csv: one file per table plus the precise plot data
    tables = render_csv_tables(bundle)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in tables.items():
            (out_dir / f"{name}.csv").write_text(text, encoding="utf-8")
        plot_doc = json.loads(render_json(bundle))["plot_data"]
        (out_dir / "plot_data.json").write_text(
            json.dumps(plot_doc, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
    else:
        for name, text in tables.items():
            sys.stdout.write(f"# {name}\n{text}\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        records = load_records(Path(args.results).read_text(encoding="utf-8"))
        baselines = load_baselines(Path(args.baselines).read_text(encoding="utf-8"))
        budgets = _load_budgets_file(args.budgets)
        published = _load_published(args.published)
        options = AnalysisOptions(
            target_map=_parse_target_map(args.target_map),
            threshold=float(args.threshold),
            seed=int(args.seed),
            n_resamples=int(args.resamples),
            published_recipes=published,
        )
        if args.format not in ("csv", "json", "markdown", "svg"):
            raise AnalyticsError(f"unknown format {args.format!r}")
    except _INPUT_ERRORS as exc:
        print(f"loraplan analyze: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        bundle = build_report(records, baselines, budgets, options)
    except AnalyticsError as exc:
        print(f"loraplan analyze: analysis failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        _emit_analysis(bundle, args.format, args.out)
    except _CliFailure as exc:
        print(f"loraplan analyze: {exc}", file=sys.stderr)
        return exc.code
    for warning in bundle.warnings:
        print(f"loraplan analyze: warning: {warning}", file=sys.stderr)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loraplan",
        description="Component-aware LoRA placement planning and result analytics "
        "for hybrid language models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="parse and classify a model into a descriptor")
    _add(p, "model", required=True, help="safetensors file or descriptor JSON")
    _add(p, "rules", default=None, help="classification rules JSON (default: built-in)")
    _add(p, "out", default=None, help="write the classified descriptor here")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("plan", help="compile placement conditions into target lists")
    _add(p, "model", required=True, help="safetensors file or descriptor JSON")
    _add(p, "rules", default=None)
    _add(p, "condition", default="all", help="condition name or 'all'")
    _add(p, "rank", default="16")
    _add(p, "alpha", default="32")
    _add(p, "dropout", default="0.05")
    _add(p, "format", default="csv", choices=("csv", "json", "markdown"))
    _add(p, "out", default=None, help="directory for target lists and the budget table")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="check an attachment report against a plan")
    _add(p, "targets", required=True, help="target list JSON")
    _add(p, "model", required=True, help="safetensors file or descriptor JSON")
    _add(p, "report", required=True, help="attachment report JSON")
    _add(p, "out", default=None, help="write the verification result here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="derive all metrics from evaluation results")
    _add(p, "results", required=True, help="results CSV/JSON")
    _add(p, "baselines", required=True, help="baseline table CSV/JSON")
    _add(p, "budgets", required=True, help="per-condition parameter budgets CSV/JSON")
    _add(p, "published", default=None, help="published recipe table to compare against")
    _add(p, "target-map", default=None, help="domain=benchmark pairs, comma separated")
    _add(p, "threshold", default="0.95")
    _add(p, "seed", default="0")
    _add(p, "resamples", default="10000")
    _add(p, "format", default="json", choices=("csv", "json", "markdown", "svg"))
    _add(p, "out", default=None, help="output directory")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    missing = [
        name
        for name in ("model", "results", "baselines", "budgets", "targets", "report")
        if hasattr(args, name) and getattr(args, name) is None
    ]
    # required-by-command flags may have been satisfied via environment
    if missing:
        print(f"loraplan {args.command}: missing required flags: {missing}", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
