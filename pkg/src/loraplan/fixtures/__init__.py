"""Bundled reference data: synthetic checkpoint headers for both hybrid
architectures plus evaluation tables transcribed from the study's results.

The checkpoint fixtures are dimension-reconstructed: module layout and
counts follow the published architecture facts, and the widths were chosen
so that totals, component shares and adapter budgets land on the published
values within their stated tolerances (see the metadata note inside each
header).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

QWEN = "qwen35_0_8b"
FALCON = "falcon_h1_0_5b"

QWEN_MODEL_NAME = "Qwen3.5-0.8B"
FALCON_MODEL_NAME = "Falcon-H1-0.5B"


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file."""
    path = resources.files(__package__) / name
    return Path(str(path))


def header_path(model: str) -> Path:
    return fixture_path(f"{model}.safetensors")


def descriptor_path(model: str) -> Path:
    return fixture_path(f"{model}.descriptor.json")


def rules_path() -> Path:
    return fixture_path("default_rules.json")


def results_path() -> Path:
    return fixture_path("results.csv")


def baselines_path() -> Path:
    return fixture_path("baselines.csv")


def budgets_path() -> Path:
    return fixture_path("budgets.csv")


def published_recipes_path() -> Path:
    return fixture_path("published_recipes.csv")
