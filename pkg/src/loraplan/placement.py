"""Placement conditions, target-list compilation and parameter budgets (stage 3).

A placement condition names the component types to adapt plus exclusion
patterns; compiling it against a classified descriptor yields the exact
sorted list of dotted module paths that should receive rank-r adapters,
and the trainable-parameter budget that list implies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .descriptor import ModelDescriptor
from .taxonomy import ComponentType, Topology

__all__ = [
    "PlacementError",
    "LoraConfig",
    "PlacementCondition",
    "TargetList",
    "ParameterBudget",
    "canonical_conditions",
    "compile_targets",
    "lora_param_count",
    "budget",
    "load_target_list",
    "dump_target_list",
]


class PlacementError(Exception):
    """Raised for invalid conditions, empty target lists or bad plan files."""


@dataclass(frozen=True)
class LoraConfig:
    """Adapter hyperparameters; the defaults follow the reference recipe."""

    r: int = 16
    alpha: float = 32.0
    dropout: float = 0.05

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise PlacementError("rank must be positive")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise PlacementError("alpha must be finite and positive")
        if not 0.0 <= self.dropout <= 1.0:
            raise PlacementError("dropout must lie in [0, 1]")

    @property
    def scaling(self) -> float:
        return self.alpha / self.r


@dataclass(frozen=True)
class PlacementCondition:
    """A named component selection with per-condition exclusion patterns.

    Exclusion patterns are suffix matches on the final path segment
    (``out_proj`` excludes ``...mamba.out_proj`` and ``...gate_out_proj``
    but not ``...o_proj``).
    """

    name: str
    include: frozenset[ComponentType]
    exclusion_rules: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.include:
            raise PlacementError(f"condition {self.name!r} includes no component")
        bad = self.include - {ComponentType.ATTENTION, ComponentType.RECURRENT, ComponentType.MLP}
        if bad:
            raise PlacementError(
                f"condition {self.name!r} includes non-adaptable components: "
                f"{sorted(c.value for c in bad)}"
            )

    def excludes(self, path: str) -> bool:
        segment = path.rsplit(".", 1)[-1]
        return any(segment.endswith(pattern) for pattern in self.exclusion_rules)


@dataclass(frozen=True)
class TargetList:
    """The compiled, sorted adapter host list for one condition on one model."""

    condition_name: str
    model_name: str
    paths: tuple[str, ...]
    lora: LoraConfig


@dataclass(frozen=True)
class ParameterBudget:
    trainable_params: int
    fraction_of_model: float
    module_count: int


_ATT = ComponentType.ATTENTION
_REC = ComponentType.RECURRENT
_MLP = ComponentType.MLP

# conv1d/out_proj adaptation destabilizes Mamba-2 training; the conditions
# that single out the recurrent component exclude them.
SSM_EXCLUSIONS = ("conv1d", "out_proj")


def canonical_conditions(topology: Topology) -> list[PlacementCondition]:
    """The six standard placement conditions for a hybrid topology."""
    f = frozenset
    if topology.is_sequential:
        return [
            PlacementCondition("all_layers", f({_ATT, _REC, _MLP})),
            PlacementCondition("softmax_only", f({_ATT})),
            PlacementCondition("gdn_only", f({_REC})),
            PlacementCondition("mlp_only", f({_MLP})),
            PlacementCondition("softmax_plus_mlp", f({_ATT, _MLP})),
            PlacementCondition("gdn_plus_mlp", f({_REC, _MLP})),
        ]
    return [
        PlacementCondition("all_eligible", f({_ATT, _REC, _MLP})),
        PlacementCondition("attention_only", f({_ATT})),
        PlacementCondition("ssm_only", f({_REC}), SSM_EXCLUSIONS),
        PlacementCondition("mlp_only", f({_MLP})),
        PlacementCondition("attention_plus_mlp", f({_ATT, _MLP})),
        PlacementCondition("ssm_plus_mlp", f({_REC, _MLP}), SSM_EXCLUSIONS),
    ]


def compile_targets(
    descriptor: ModelDescriptor,
    condition: PlacementCondition,
    lora: LoraConfig = LoraConfig(),
) -> TargetList:
    """Compile a condition into the exact dotted-path target list.

    Eligible hosts are the 2-D-weight leaves (both dims set) whose
    component is included and which match no exclusion rule; the result is
    unique, lexicographically sorted, and deterministic.
    """
    if not descriptor.classified:
        raise PlacementError(f"descriptor {descriptor.model_name!r} is not classified")
    paths = []
    for leaf in descriptor.leaves():
        if leaf.in_dim is None or leaf.out_dim is None:
            continue
        if descriptor.component_labels[leaf.path] not in condition.include:
            continue
        if condition.excludes(leaf.path):
            continue
        paths.append(leaf.path)
    if not paths:
        raise PlacementError(
            f"condition {condition.name!r} selects no module on "
            f"{descriptor.model_name!r}; descriptor and rules do not match"
        )
    return TargetList(
        condition_name=condition.name,
        model_name=descriptor.model_name,
        paths=tuple(sorted(paths)),
        lora=lora,
    )


def lora_param_count(in_dim: int, out_dim: int, r: int) -> int:
    """Trainable elements of one adapted module: the A (r x in) and B (out x r) factors."""
    if in_dim <= 0 or out_dim <= 0 or r <= 0:
        raise PlacementError("lora_param_count requires positive dimensions")
    return r * (in_dim + out_dim)


def budget(target_list: TargetList, descriptor: ModelDescriptor) -> ParameterBudget:
    """Trainable-parameter budget of a compiled target list."""
    r = target_list.lora.r
    trainable = 0
    for path in target_list.paths:
        leaf = descriptor.leaf(path)
        if leaf.in_dim is None or leaf.out_dim is None:
            raise PlacementError(f"target path {path!r} hosts no 2-D weight")
        trainable += lora_param_count(leaf.in_dim, leaf.out_dim, r)
    fraction = trainable / descriptor.total_params if descriptor.total_params else 0.0
    return ParameterBudget(
        trainable_params=trainable,
        fraction_of_model=fraction,
        module_count=len(target_list.paths),
    )


def dump_target_list(target_list: TargetList) -> dict:
    """Serialize a target list to its JSON contract."""
    return {
        "condition": target_list.condition_name,
        "model": target_list.model_name,
        "lora": {
            "r": target_list.lora.r,
            "alpha": target_list.lora.alpha,
            "dropout": target_list.lora.dropout,
        },
        "target_modules": list(target_list.paths),
    }


def load_target_list(doc: dict) -> TargetList:
    """Parse the TargetList JSON contract."""
    if not isinstance(doc, dict):
        raise PlacementError("target list document must be a JSON object")
    required = {"condition", "model", "lora", "target_modules"}
    if not required <= set(doc):
        raise PlacementError(f"target list document missing keys {sorted(required - set(doc))}")
    lora_doc = doc["lora"]
    if not isinstance(lora_doc, dict) or not {"r", "alpha", "dropout"} <= set(lora_doc):
        raise PlacementError("target list lora must carry r/alpha/dropout")
    modules = doc["target_modules"]
    if not isinstance(modules, list) or not all(isinstance(p, str) for p in modules):
        raise PlacementError("target_modules must be a string array")
    return TargetList(
        condition_name=str(doc["condition"]),
        model_name=str(doc["model"]),
        paths=tuple(modules),
        lora=LoraConfig(
            r=int(lora_doc["r"]),
            alpha=float(lora_doc["alpha"]),
            dropout=float(lora_doc["dropout"]),
        ),
    )


def load_target_list_file(path: str) -> TargetList:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PlacementError(f"cannot read target list {path!r}: {exc}") from exc
    return load_target_list(doc)
