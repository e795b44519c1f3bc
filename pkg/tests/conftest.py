import json

import pytest

from loraplan import fixtures
from loraplan.checkpoint import parse_safetensors_header
from loraplan.descriptor import descriptor_from_index, load_descriptor
from loraplan.analytics import load_baselines, load_records
from loraplan.taxonomy import DEFAULT_RULES, classify_all, detect_topology


def _classified_descriptor(model: str):
    raw = fixtures.header_path(model).read_bytes()
    descriptor = descriptor_from_index(parse_safetensors_header(raw))
    descriptor, _ = classify_all(descriptor, DEFAULT_RULES)
    return descriptor.with_labels(descriptor.component_labels, detect_topology(descriptor))


@pytest.fixture(scope="session")
def qwen():
    return _classified_descriptor(fixtures.QWEN)


@pytest.fixture(scope="session")
def falcon():
    return _classified_descriptor(fixtures.FALCON)


@pytest.fixture(scope="session")
def qwen_doc():
    return json.loads(fixtures.descriptor_path(fixtures.QWEN).read_text())


@pytest.fixture(scope="session")
def falcon_doc():
    return json.loads(fixtures.descriptor_path(fixtures.FALCON).read_text())


@pytest.fixture(scope="session")
def records():
    return load_records(fixtures.results_path().read_text())


@pytest.fixture(scope="session")
def baselines():
    return load_baselines(fixtures.baselines_path().read_text())


@pytest.fixture(scope="session")
def budgets():
    import csv

    with open(fixtures.budgets_path(), newline="") as fh:
        return {
            (row["model"], row["condition"]): float(row["params_M"])
            for row in csv.DictReader(fh)
        }
