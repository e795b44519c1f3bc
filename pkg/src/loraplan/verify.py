"""Adapter attachment verification (pipeline stage 4).

Compares what an attachment report claims against what the plan expected:
host sets must match exactly and every factor pair must have the shapes
the descriptor and rank imply.  A wrong-rank attachment silently changes
the parameter budget, so shapes are checked even when host sets agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .descriptor import ModelDescriptor
from .placement import TargetList

__all__ = [
    "VerifyError",
    "AdapterHost",
    "AttachmentReport",
    "VerificationResult",
    "verify_attachment",
    "report_from",
    "load_attachment_report",
    "dump_attachment_report",
]


class VerifyError(Exception):
    """Raised for document mismatches that indicate pipeline misuse."""


@dataclass(frozen=True)
class AdapterHost:
    path: str
    a_shape: tuple[int, int]  # (r, in_dim)
    b_shape: tuple[int, int]  # (out_dim, r)


@dataclass(frozen=True)
class AttachmentReport:
    model_name: str
    condition_name: str
    hosts: tuple[AdapterHost, ...]

    def __post_init__(self) -> None:
        paths = [h.path for h in self.hosts]
        if len(paths) != len(set(paths)):
            raise VerifyError("attachment report lists a host path twice")


@dataclass(frozen=True)
class ShapeMismatch:
    path: str
    expected_a: tuple[int, int]
    expected_b: tuple[int, int]
    reported_a: tuple[int, int]
    reported_b: tuple[int, int]


@dataclass(frozen=True)
class VerificationResult:
    missing: frozenset[str]
    unexpected: frozenset[str]
    shape_mismatches: tuple[ShapeMismatch, ...]

    @property
    def passed(self) -> bool:
        return not self.missing and not self.unexpected and not self.shape_mismatches

    def to_doc(self) -> dict:
        return {
            "pass": self.passed,
            "missing": sorted(self.missing),
            "unexpected": sorted(self.unexpected),
            "shape_mismatches": [
                {
                    "path": m.path,
                    "expected": {"a_shape": list(m.expected_a), "b_shape": list(m.expected_b)},
                    "reported": {"a_shape": list(m.reported_a), "b_shape": list(m.reported_b)},
                }
                for m in self.shape_mismatches
            ],
        }


def verify_attachment(
    expected: TargetList,
    descriptor: ModelDescriptor,
    report: AttachmentReport,
) -> VerificationResult:
    """Check an attachment report against the plan it should implement."""
    if report.model_name != expected.model_name:
        raise VerifyError(
            f"model mismatch: plan is for {expected.model_name!r}, "
            f"report for {report.model_name!r}"
        )
    if report.condition_name != expected.condition_name:
        raise VerifyError(
            f"condition mismatch: plan is {expected.condition_name!r}, "
            f"report is {report.condition_name!r}"
        )
    expected_paths = set(expected.paths)
    reported = {h.path: h for h in report.hosts}
    missing = frozenset(expected_paths - set(reported))
    unexpected = frozenset(set(reported) - expected_paths)

    r = expected.lora.r
    mismatches = []
    for path in sorted(expected_paths & set(reported)):
        leaf = descriptor.leaf(path)
        want_a = (r, leaf.in_dim)
        want_b = (leaf.out_dim, r)
        host = reported[path]
        if host.a_shape != want_a or host.b_shape != want_b:
            mismatches.append(
                ShapeMismatch(
                    path=path,
                    expected_a=want_a,
                    expected_b=want_b,
                    reported_a=host.a_shape,
                    reported_b=host.b_shape,
                )
            )
    return VerificationResult(
        missing=missing,
        unexpected=unexpected,
        shape_mismatches=tuple(mismatches),
    )


def report_from(target_list: TargetList, descriptor: ModelDescriptor) -> AttachmentReport:
    """Synthesize the report a faithful attachment of this plan would produce."""
    r = target_list.lora.r
    hosts = []
    for path in target_list.paths:
        leaf = descriptor.leaf(path)
        hosts.append(
            AdapterHost(path=path, a_shape=(r, leaf.in_dim), b_shape=(leaf.out_dim, r))
        )
    return AttachmentReport(
        model_name=target_list.model_name,
        condition_name=target_list.condition_name,
        hosts=tuple(hosts),
    )


def dump_attachment_report(report: AttachmentReport) -> dict:
    return {
        "model": report.model_name,
        "condition": report.condition_name,
        "hosts": [
            {"path": h.path, "a_shape": list(h.a_shape), "b_shape": list(h.b_shape)}
            for h in report.hosts
        ],
    }


def load_attachment_report(doc: dict) -> AttachmentReport:
    if not isinstance(doc, dict) or not {"model", "condition", "hosts"} <= set(doc):
        raise VerifyError("attachment report must carry model/condition/hosts")
    hosts = []
    for i, raw in enumerate(doc["hosts"]):
        if not isinstance(raw, dict) or not {"path", "a_shape", "b_shape"} <= set(raw):
            raise VerifyError(f"hosts[{i}] must carry path/a_shape/b_shape")
        a = raw["a_shape"]
        b = raw["b_shape"]
        if not (isinstance(a, list) and len(a) == 2 and isinstance(b, list) and len(b) == 2):
            raise VerifyError(f"hosts[{i}] factor shapes must be [int, int]")
        hosts.append(
            AdapterHost(path=str(raw["path"]), a_shape=(a[0], a[1]), b_shape=(b[0], b[1]))
        )
    return AttachmentReport(
        model_name=str(doc["model"]),
        condition_name=str(doc["condition"]),
        hosts=tuple(hosts),
    )


def load_attachment_report_file(path: str) -> AttachmentReport:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise VerifyError(f"cannot read attachment report {path!r}: {exc}") from exc
    return load_attachment_report(doc)
