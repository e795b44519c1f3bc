import json

import pytest

from loraplan.checkpoint import TensorEntry, TensorIndex, parse_safetensors_header
from loraplan.descriptor import (
    DescriptorError,
    derive_module_tree,
    descriptor_from_index,
    dump_descriptor,
    load_descriptor,
)
from loraplan import fixtures


def index_of(*specs):
    """specs: (name, shape) with synthetic contiguous BF16 offsets."""
    entries = []
    offset = 0
    for name, shape in specs:
        numel = 1
        for d in shape:
            numel *= d
        entries.append(TensorEntry(name, "BF16", tuple(shape), (offset, offset + 2 * numel)))
        offset += 2 * numel
    return TensorIndex(entries=tuple(entries))


def test_empty_index_gives_bare_root():
    root = derive_module_tree(index_of())
    assert root.path == ""
    assert root.children == ()


def test_single_projection_sets_dims():
    root = derive_module_tree(
        index_of(("model.layers.0.self_attn.q_proj.weight", [2048, 1024]))
    )
    leaves = list(root.iter_leaves())
    assert len(leaves) == 1
    leaf = leaves[0]
    assert leaf.path == "model.layers.0.self_attn.q_proj"
    assert leaf.out_dim == 2048
    assert leaf.in_dim == 1024


def test_bias_attaches_to_same_leaf():
    root = derive_module_tree(
        index_of(("lin.weight", [8, 4]), ("lin.bias", [8]))
    )
    (leaf,) = root.iter_leaves()
    assert leaf.weight_shape == (8, 4)
    assert leaf.bias_shape == (8,)
    assert leaf.element_count == 32 + 8


def test_bare_parameter_keeps_full_name_and_no_dims():
    root = derive_module_tree(index_of(("block.mamba.A_log", [64, 16])))
    (leaf,) = root.iter_leaves()
    assert leaf.path == "block.mamba.A_log"
    assert leaf.bare_param
    assert leaf.weight_shape == (64, 16)
    assert leaf.in_dim is None and leaf.out_dim is None


def test_one_dim_weight_sets_no_dims():
    root = derive_module_tree(index_of(("norm.weight", [128])))
    (leaf,) = root.iter_leaves()
    assert leaf.in_dim is None and leaf.out_dim is None
    assert not leaf.bare_param


def test_conflicting_shapes_for_one_module():
    with pytest.raises(DescriptorError, match="conflicting"):
        derive_module_tree(index_of(("x.weight", [2, 2]), ("x", [4])))


def test_leaf_and_interior_conflict():
    with pytest.raises(DescriptorError, match="interior"):
        derive_module_tree(index_of(("x.weight", [2, 2]), ("x.y.weight", [2, 2])))


def test_sibling_order_is_lexicographic():
    root = derive_module_tree(
        index_of(("m.b.weight", [1, 1]), ("m.a.weight", [1, 1]), ("m.c.weight", [1, 1]))
    )
    (m,) = root.children
    assert [c.path for c in m.children] == ["m.a", "m.b", "m.c"]


def test_qwen_fixture_has_24_attention_projection_leaves(qwen):
    proj = [
        leaf
        for leaf in qwen.leaves()
        if ".self_attn." in leaf.path and leaf.in_dim is not None
    ]
    assert len(proj) == 24  # 6 attention layers x 4 projections


def test_minimal_descriptor_doc():
    doc = {
        "model_name": "tiny",
        "num_layers": 1,
        "modules": [{"path": "lin.weight", "shape": [4, 3]}],
    }
    descriptor = load_descriptor(doc)
    assert descriptor.total_params == 12
    assert descriptor.leaf("lin").in_dim == 3


def test_qwen_descriptor_doc_total(qwen_doc):
    descriptor = load_descriptor(qwen_doc)
    assert abs(descriptor.total_params - 759e6) <= 0.01 * 759e6
    assert descriptor.num_layers == 24


def test_falcon_descriptor_doc_total(falcon_doc):
    descriptor = load_descriptor(falcon_doc)
    assert abs(descriptor.total_params - 524e6) <= 0.01 * 524e6
    assert descriptor.num_layers == 36


def test_declared_total_mismatch_rejected():
    doc = {
        "model_name": "tiny",
        "num_layers": 1,
        "total_params": 13,
        "modules": [{"path": "lin.weight", "shape": [4, 3]}],
    }
    with pytest.raises(DescriptorError, match="total_params"):
        load_descriptor(doc)


def test_unknown_top_level_key_rejected():
    doc = {"model_name": "t", "num_layers": 1, "modules": [], "extra": 1}
    with pytest.raises(DescriptorError, match="unknown"):
        load_descriptor(doc)


def test_unknown_module_key_rejected():
    doc = {
        "model_name": "t",
        "num_layers": 1,
        "modules": [{"path": "a.weight", "shape": [1], "dtype": "F32"}],
    }
    with pytest.raises(DescriptorError, match="unknown"):
        load_descriptor(doc)


def test_header_and_document_entry_points_agree(qwen, qwen_doc):
    from_doc = load_descriptor(qwen_doc)
    assert from_doc.total_params == qwen.total_params
    doc_leaves = {(l.path, l.weight_shape, l.bias_shape) for l in from_doc.leaves()}
    hdr_leaves = {(l.path, l.weight_shape, l.bias_shape) for l in qwen.leaves()}
    assert doc_leaves == hdr_leaves
    doc_eligible = {l.path for l in from_doc.leaves() if l.in_dim is not None}
    hdr_eligible = {l.path for l in qwen.leaves() if l.in_dim is not None}
    assert doc_eligible == hdr_eligible


def test_dump_load_round_trip(falcon):
    doc = dump_descriptor(falcon)
    again = load_descriptor(doc)
    assert again.total_params == falcon.total_params
    assert again.component_labels == falcon.component_labels
    assert again.topology == falcon.topology
    assert {l.path for l in again.leaves()} == {l.path for l in falcon.leaves()}


def test_num_layers_inferred_from_integer_segments():
    index = index_of(
        ("model.layers.0.lin.weight", [2, 2]),
        ("model.layers.1.lin.weight", [2, 2]),
        ("model.layers.2.lin.weight", [2, 2]),
        ("head.weight", [2, 2]),
    )
    assert descriptor_from_index(index).num_layers == 3


def test_model_name_from_metadata():
    index = TensorIndex(
        entries=(TensorEntry("w.weight", "F32", (1, 1), (0, 4)),),
        metadata={"model_name": "named"},
    )
    assert descriptor_from_index(index).model_name == "named"


def test_fixture_headers_parse_to_fixture_docs():
    # the two shipped forms of each fixture describe identical models
    for model in (fixtures.QWEN, fixtures.FALCON):
        index = parse_safetensors_header(fixtures.header_path(model).read_bytes())
        from_header = descriptor_from_index(index)
        from_doc = load_descriptor(json.loads(fixtures.descriptor_path(model).read_text()))
        assert from_header.total_params == from_doc.total_params
        assert {l.path for l in from_header.leaves()} == {l.path for l in from_doc.leaves()}
