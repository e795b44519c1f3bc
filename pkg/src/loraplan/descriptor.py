"""Module trees derived from checkpoint tensor indices or descriptor documents.

Two equivalent entry points produce a :class:`ModelDescriptor`: parsing a
safetensors header (:func:`descriptor_from_index`) or loading a descriptor
JSON document (:func:`load_descriptor`).  Both route tensor records through
the same grouping rule, so adapter eligibility does not depend on which
entry point was used.

Grouping rule: the final path segment is stripped when it is exactly
``weight`` or ``bias``; any other tensor name becomes a module path of its
own (a bare parameter).  Only 2-D tensors that arrived via a ``.weight``
suffix set the hosting leaf's ``out_dim``/``in_dim``; bare 2-D parameters
(e.g. a Mamba ``A_log``) keep their shape but stay adapter-ineligible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Iterator

from .checkpoint import TensorIndex

if TYPE_CHECKING:  # pragma: no cover
    from .taxonomy import ComponentType, Topology

__all__ = [
    "DescriptorError",
    "ModuleNode",
    "ModelDescriptor",
    "derive_module_tree",
    "descriptor_from_index",
    "load_descriptor",
    "dump_descriptor",
]

PARAM_SUFFIXES = ("weight", "bias")


class DescriptorError(Exception):
    """Raised for malformed descriptor documents or inconsistent trees."""


def _numel(shape: tuple[int, ...]) -> int:
    n = 1
    for d in shape:
        n *= d
    return n


@dataclass(frozen=True)
class ModuleNode:
    """One node of a module tree.

    A leaf hosting a 2-D weight carries ``out_dim``/``in_dim``; bare
    parameters (tensors without a recognized suffix) carry only their
    shape.  ``bias_shape`` holds a sibling ``.bias`` tensor's shape so
    parameter totals stay exact on checkpoints with biases.
    """

    path: str
    in_dim: int | None = None
    out_dim: int | None = None
    weight_shape: tuple[int, ...] | None = None
    bias_shape: tuple[int, ...] | None = None
    bare_param: bool = False
    children: tuple["ModuleNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def hosts_params(self) -> bool:
        return self.weight_shape is not None or self.bias_shape is not None

    @property
    def element_count(self) -> int:
        n = 0
        if self.weight_shape is not None:
            n += _numel(self.weight_shape)
        if self.bias_shape is not None:
            n += _numel(self.bias_shape)
        return n

    def iter_leaves(self) -> Iterator["ModuleNode"]:
        if self.is_leaf and self.path:
            yield self
        for child in self.children:
            yield from child.iter_leaves()

    def total_elements(self) -> int:
        return sum(leaf.element_count for leaf in self.iter_leaves())


@dataclass(frozen=True)
class ModelDescriptor:
    """The validated module tree of one checkpoint plus derived facts."""

    model_name: str
    total_params: int
    num_layers: int
    tree: ModuleNode
    component_labels: dict[str, "ComponentType"] = field(default_factory=dict)
    topology: "Topology | None" = None

    def leaves(self) -> list[ModuleNode]:
        return list(self.tree.iter_leaves())

    def leaf(self, path: str) -> ModuleNode:
        for node in self.tree.iter_leaves():
            if node.path == path:
                return node
        raise DescriptorError(f"no module {path!r} in descriptor {self.model_name!r}")

    @property
    def classified(self) -> bool:
        return bool(self.component_labels) or not self.leaves()

    def with_labels(
        self, labels: dict[str, "ComponentType"], topology: "Topology | None" = None
    ) -> "ModelDescriptor":
        return replace(self, component_labels=labels, topology=topology)


def _split_record(name: str) -> tuple[str, str]:
    """Map a tensor name to (module path, kind); kind is weight/bias/bare."""
    head, _, last = name.rpartition(".")
    if head and last in PARAM_SUFFIXES:
        return head, last
    return name, "bare"


def _build_tree(records: Iterable[tuple[str, tuple[int, ...]]]) -> ModuleNode:
    """Group (tensor name, shape) records into a module tree."""
    hosts: dict[str, dict[str, tuple[int, ...]]] = {}
    for name, shape in records:
        if not name:
            raise DescriptorError("empty tensor name")
        module, kind = _split_record(name)
        slot = hosts.setdefault(module, {})
        if kind in slot or ("bare" in slot) or (kind == "bare" and slot):
            raise DescriptorError(
                f"conflicting parameter shapes for module path {module!r}"
            )
        slot[kind] = shape

    for module in hosts:
        prefix = module + "."
        if any(other.startswith(prefix) for other in hosts):
            raise DescriptorError(
                f"module path {module!r} is both a leaf and an interior node"
            )

    # Materialize interior nodes for every dotted prefix.
    children_of: dict[str, set[str]] = {"": set()}
    for module in hosts:
        segs = module.split(".")
        for i in range(1, len(segs) + 1):
            parent = ".".join(segs[: i - 1])
            child = ".".join(segs[:i])
            children_of.setdefault(parent, set()).add(child)
            children_of.setdefault(child, set())

    def build(path: str) -> ModuleNode:
        kids = tuple(build(c) for c in sorted(children_of.get(path, ())))
        slot = hosts.get(path, {})
        weight = slot.get("weight")
        bare = slot.get("bare")
        in_dim = out_dim = None
        if weight is not None and len(weight) == 2:
            out_dim, in_dim = weight
        return ModuleNode(
            path=path,
            in_dim=in_dim,
            out_dim=out_dim,
            weight_shape=weight if weight is not None else bare,
            bias_shape=slot.get("bias"),
            bare_param=bare is not None,
            children=kids,
        )

    return build("")


def derive_module_tree(index: TensorIndex) -> ModuleNode:
    """Build the module tree implied by a checkpoint tensor index."""
    return _build_tree((e.name, e.shape) for e in index.entries)


def infer_num_layers(tree: ModuleNode) -> int:
    """Count distinct integer path segments (the layer indices)."""
    layers: set[int] = set()
    for leaf in tree.iter_leaves():
        for seg in leaf.path.split("."):
            if seg.isdigit():
                layers.add(int(seg))
                break
    return len(layers) if layers else 1


def descriptor_from_index(
    index: TensorIndex,
    model_name: str | None = None,
    num_layers: int | None = None,
) -> ModelDescriptor:
    """Stage-1 entry point: checkpoint header index to model descriptor."""
    tree = derive_module_tree(index)
    name = model_name or index.metadata.get("model_name", "unknown")
    return ModelDescriptor(
        model_name=name,
        total_params=tree.total_elements(),
        num_layers=num_layers if num_layers is not None else infer_num_layers(tree),
        tree=tree,
    )


_TOP_KEYS = {"model_name", "num_layers", "modules", "total_params", "component_labels", "topology"}
_MODULE_KEYS = {"path", "shape"}


def load_descriptor(doc: dict) -> ModelDescriptor:
    """Validate a descriptor JSON document and build the descriptor.

    Required keys: ``model_name`` (str), ``num_layers`` (int), ``modules``
    (array of ``{path, shape}``).  Optional: ``total_params`` (must match
    the recomputed value exactly), plus ``component_labels``/``topology``
    as emitted by the discover command.  Unknown keys are rejected.
    """
    if not isinstance(doc, dict):
        raise DescriptorError("descriptor document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise DescriptorError(f"unknown descriptor keys: {sorted(unknown)}")
    for key in ("model_name", "num_layers", "modules"):
        if key not in doc:
            raise DescriptorError(f"descriptor document missing key {key!r}")
    name = doc["model_name"]
    if not isinstance(name, str) or not name:
        raise DescriptorError("model_name must be a non-empty string")
    num_layers = doc["num_layers"]
    if not isinstance(num_layers, int) or isinstance(num_layers, bool) or num_layers <= 0:
        raise DescriptorError("num_layers must be a positive integer")
    modules = doc["modules"]
    if not isinstance(modules, list):
        raise DescriptorError("modules must be an array")

    records: list[tuple[str, tuple[int, ...]]] = []
    for i, entry in enumerate(modules):
        if not isinstance(entry, dict):
            raise DescriptorError(f"modules[{i}] is not an object")
        unknown = set(entry) - _MODULE_KEYS
        if unknown:
            raise DescriptorError(f"modules[{i}] has unknown keys: {sorted(unknown)}")
        path = entry.get("path")
        shape = entry.get("shape")
        if not isinstance(path, str) or not path:
            raise DescriptorError(f"modules[{i}].path must be a non-empty string")
        if not isinstance(shape, list) or not all(
            isinstance(d, int) and not isinstance(d, bool) and d >= 0 for d in shape
        ):
            raise DescriptorError(f"modules[{i}].shape must be a non-negative int array")
        records.append((path, tuple(shape)))

    tree = _build_tree(records)
    total = tree.total_elements()
    declared = doc.get("total_params")
    if declared is not None:
        if not isinstance(declared, int) or isinstance(declared, bool):
            raise DescriptorError("total_params must be an integer")
        if declared != total:
            raise DescriptorError(
                f"declared total_params {declared} != recomputed {total}"
            )

    labels: dict[str, "ComponentType"] = {}
    if "component_labels" in doc:
        from .taxonomy import ComponentType  # deferred: taxonomy imports this module

        raw = doc["component_labels"]
        if not isinstance(raw, dict):
            raise DescriptorError("component_labels must be an object")
        try:
            labels = {path: ComponentType(comp) for path, comp in raw.items()}
        except ValueError as exc:
            raise DescriptorError(f"invalid component label: {exc}") from exc

    topology = None
    if "topology" in doc and doc["topology"] is not None:
        from .taxonomy import Topology

        topology = Topology.from_doc(doc["topology"])

    return ModelDescriptor(
        model_name=name,
        total_params=total,
        num_layers=num_layers,
        tree=tree,
        component_labels=labels,
        topology=topology,
    )


def dump_descriptor(descriptor: ModelDescriptor) -> dict:
    """Serialize a descriptor back to its JSON document form."""
    modules: list[dict] = []
    for leaf in descriptor.leaves():
        if leaf.weight_shape is not None:
            path = leaf.path if leaf.bare_param else leaf.path + ".weight"
            modules.append({"path": path, "shape": list(leaf.weight_shape)})
        if leaf.bias_shape is not None:
            modules.append({"path": leaf.path + ".bias", "shape": list(leaf.bias_shape)})
    doc: dict = {
        "model_name": descriptor.model_name,
        "num_layers": descriptor.num_layers,
        "total_params": descriptor.total_params,
        "modules": modules,
    }
    if descriptor.component_labels:
        doc["component_labels"] = {
            path: comp.value for path, comp in sorted(descriptor.component_labels.items())
        }
    if descriptor.topology is not None:
        doc["topology"] = descriptor.topology.to_doc()
    return doc


def load_descriptor_file(path: str) -> ModelDescriptor:
    """Read and validate a descriptor JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DescriptorError(f"cannot read descriptor {path!r}: {exc}") from exc
    return load_descriptor(doc)
