"""Component classification and hybrid-topology detection (pipeline stage 2).

Every leaf module is assigned exactly one :class:`ComponentType` by the
highest-priority matching glob rule; unmatched paths fall through to
``Other``.  Topology detection then decides whether the model interleaves
its sequence mixers across depth (sequential) or runs both mixers inside
every block (parallel).
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass
from enum import Enum

from .descriptor import ModelDescriptor

__all__ = [
    "ComponentType",
    "ClassificationRule",
    "RuleSet",
    "RuleSetError",
    "TaxonomyError",
    "Topology",
    "DEFAULT_RULES",
    "classify_module",
    "classify_all",
    "component_param_shares",
    "detect_topology",
]


class TaxonomyError(Exception):
    """Raised for classification and topology failures."""


class RuleSetError(TaxonomyError):
    """Raised when a rule set document is malformed or self-conflicting."""


class ComponentType(str, Enum):
    ATTENTION = "Attention"
    RECURRENT = "Recurrent"
    MLP = "Mlp"
    NORM = "Norm"
    EMBEDDING = "Embedding"
    OTHER = "Other"


MIXER_TYPES = (ComponentType.ATTENTION, ComponentType.RECURRENT)


@dataclass(frozen=True)
class ClassificationRule:
    """Glob pattern over dotted paths mapping to a component; higher priority wins."""

    pattern: str
    component: ComponentType
    priority: int

    def matches(self, path: str) -> bool:
        return fnmatch.fnmatchcase(path, self.pattern)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[ClassificationRule, ...]

    @classmethod
    def from_doc(cls, doc: object) -> "RuleSet":
        """Parse a rule-set JSON document: array of {pattern, component, priority}."""
        if not isinstance(doc, list):
            raise RuleSetError("rule set document must be an array")
        rules = []
        for i, raw in enumerate(doc):
            if not isinstance(raw, dict) or set(raw) != {"pattern", "component", "priority"}:
                raise RuleSetError(f"rule {i} must have exactly pattern/component/priority")
            pattern = raw["pattern"]
            if not isinstance(pattern, str) or not pattern:
                raise RuleSetError(f"rule {i} pattern must be a non-empty string")
            try:
                component = ComponentType(raw["component"])
            except ValueError as exc:
                raise RuleSetError(f"rule {i} component invalid: {exc}") from exc
            priority = raw["priority"]
            if not isinstance(priority, int) or isinstance(priority, bool):
                raise RuleSetError(f"rule {i} priority must be an integer")
            rules.append(ClassificationRule(pattern, component, priority))
        return cls(tuple(rules))

    @classmethod
    def from_file(cls, path: str) -> "RuleSet":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise RuleSetError(f"cannot read rule set {path!r}: {exc}") from exc
        return cls.from_doc(doc)

    def check_against(self, paths: list[str]) -> None:
        """Reject equal-priority rules mapping one path to different components."""
        for path in paths:
            hits = [r for r in self.rules if r.matches(path)]
            by_priority: dict[int, set[ComponentType]] = {}
            for r in hits:
                by_priority.setdefault(r.priority, set()).add(r.component)
            for priority, comps in by_priority.items():
                if len(comps) > 1:
                    raise RuleSetError(
                        f"equal-priority ({priority}) rules disagree on path {path!r}: "
                        f"{sorted(c.value for c in comps)}"
                    )


# Reconstruction of the naming conventions of both reference architectures;
# user-overridable because checkpoints are free to deviate.
DEFAULT_RULES = RuleSet(
    (
        ClassificationRule("*linear_attn*", ComponentType.RECURRENT, 100),
        ClassificationRule("*mamba*", ComponentType.RECURRENT, 100),
        ClassificationRule("*ssm*", ComponentType.RECURRENT, 100),
        ClassificationRule("*self_attn*", ComponentType.ATTENTION, 90),
        # norm outranks the loose attention patterns so post_attention_layernorm
        # stays a norm; per-head q_norm/k_norm still land on *self_attn* above.
        ClassificationRule("*norm*", ComponentType.NORM, 85),
        ClassificationRule("*attn*", ComponentType.ATTENTION, 80),
        ClassificationRule("*attention*", ComponentType.ATTENTION, 80),
        ClassificationRule("*mlp*", ComponentType.MLP, 70),
        ClassificationRule("*feed_forward*", ComponentType.MLP, 70),
        ClassificationRule("*embed*", ComponentType.EMBEDDING, 50),
        ClassificationRule("*lm_head*", ComponentType.EMBEDDING, 50),
    )
)


def classify_module(path: str, rules: RuleSet = DEFAULT_RULES) -> ComponentType:
    """Return the component of the highest-priority matching rule, else Other."""
    best: ClassificationRule | None = None
    for rule in rules.rules:
        if rule.matches(path) and (best is None or rule.priority > best.priority):
            best = rule
    return best.component if best is not None else ComponentType.OTHER


def classify_all(
    descriptor: ModelDescriptor, rules: RuleSet = DEFAULT_RULES
) -> tuple[ModelDescriptor, list[str]]:
    """Label every leaf exactly once; returns (descriptor, unmatched-path warnings)."""
    paths = [leaf.path for leaf in descriptor.leaves()]
    rules.check_against(paths)
    labels = {path: classify_module(path, rules) for path in paths}
    warnings = sorted(p for p, c in labels.items() if c is ComponentType.OTHER)
    return descriptor.with_labels(labels), warnings


def component_param_shares(descriptor: ModelDescriptor) -> dict[ComponentType, float]:
    """Fraction of total parameters held by each component type.

    Covers all six component types (zero-parameter ones included) so the
    values always sum to one.
    """
    if not descriptor.classified:
        raise TaxonomyError(f"descriptor {descriptor.model_name!r} is not classified")
    counts = {comp: 0 for comp in ComponentType}
    for leaf in descriptor.leaves():
        counts[descriptor.component_labels[leaf.path]] += leaf.element_count
    total = descriptor.total_params
    if total == 0:
        raise TaxonomyError("descriptor has no parameters")
    return {comp: counts[comp] / total for comp in ComponentType}


@dataclass(frozen=True)
class Topology:
    """Sequential (one mixer per layer, interleaved) or parallel (both per block)."""

    kind: str  # "sequential" | "parallel"
    mixer_ratio: tuple[int, int] | None = None  # (recurrent layers, attention layers)

    def __post_init__(self) -> None:
        if self.kind not in ("sequential", "parallel"):
            raise TaxonomyError(f"unknown topology kind {self.kind!r}")

    @property
    def is_sequential(self) -> bool:
        return self.kind == "sequential"

    def to_doc(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.mixer_ratio is not None:
            doc["mixer_ratio"] = list(self.mixer_ratio)
        return doc

    @classmethod
    def from_doc(cls, doc: object) -> "Topology":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise TaxonomyError("topology document must be an object with a kind")
        ratio = doc.get("mixer_ratio")
        return cls(
            kind=doc["kind"],
            mixer_ratio=tuple(ratio) if ratio is not None else None,
        )


def _layer_index(path: str) -> int | None:
    for seg in path.split("."):
        if seg.isdigit():
            return int(seg)
    return None


def detect_topology(descriptor: ModelDescriptor) -> Topology:
    """Decide sequential vs parallel from the mixer types each layer hosts.

    Sequential: every layer hosts exactly one mixer type.  Parallel: every
    layer hosts both.  Anything mixed is reported with the offending layer
    indices.
    """
    if not descriptor.classified:
        raise TaxonomyError(f"descriptor {descriptor.model_name!r} is not classified")
    mixers_per_layer: dict[int, set[ComponentType]] = {}
    for leaf in descriptor.leaves():
        idx = _layer_index(leaf.path)
        if idx is None:
            continue
        comp = descriptor.component_labels[leaf.path]
        if comp in MIXER_TYPES:
            mixers_per_layer.setdefault(idx, set()).add(comp)
    if not mixers_per_layer:
        raise TaxonomyError("no layer hosts a sequence mixer; topology undetectable")

    single = {i for i, m in mixers_per_layer.items() if len(m) == 1}
    double = {i for i, m in mixers_per_layer.items() if len(m) == 2}
    if single and not double:
        recurrent = sum(
            1 for m in mixers_per_layer.values() if m == {ComponentType.RECURRENT}
        )
        attention = len(mixers_per_layer) - recurrent
        return Topology("sequential", mixer_ratio=(recurrent, attention))
    if double and not single:
        return Topology("parallel")
    raise TaxonomyError(
        "indeterminate mixer layout: layers "
        f"{sorted(double)} host both mixers while layers {sorted(single)} host one"
    )
