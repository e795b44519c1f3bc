import pytest

from loraplan.checkpoint import TensorEntry, TensorIndex
from loraplan.descriptor import descriptor_from_index
from loraplan.taxonomy import (
    DEFAULT_RULES,
    ClassificationRule,
    ComponentType,
    RuleSet,
    RuleSetError,
    TaxonomyError,
    classify_all,
    classify_module,
    component_param_shares,
    detect_topology,
)

A = ComponentType.ATTENTION
R = ComponentType.RECURRENT
M = ComponentType.MLP


def tiny_descriptor(*specs):
    entries = []
    offset = 0
    for name, shape in specs:
        numel = 1
        for d in shape:
            numel *= d
        entries.append(TensorEntry(name, "BF16", tuple(shape), (offset, offset + 2 * numel)))
        offset += 2 * numel
    return descriptor_from_index(TensorIndex(entries=tuple(entries)))


def test_attention_projection_classified():
    assert classify_module("model.layers.3.self_attn.q_proj") is A


def test_gdn_naming_classified_recurrent():
    assert classify_module("model.layers.0.linear_attn.in_proj_qkvz") is R


def test_no_rules_gives_other():
    assert classify_module("lm_head", RuleSet(())) is ComponentType.OTHER


def test_post_attention_layernorm_is_norm():
    assert classify_module("model.layers.1.post_attention_layernorm") is ComponentType.NORM


def test_lm_head_is_embedding():
    assert classify_module("lm_head") is ComponentType.EMBEDDING


def test_classify_all_empty_tree():
    descriptor = tiny_descriptor()
    labeled, warnings = classify_all(descriptor)
    assert labeled.component_labels == {}
    assert warnings == []


def test_classify_all_reports_other_paths():
    descriptor = tiny_descriptor(("mystery.thing.weight", [2, 2]))
    labeled, warnings = classify_all(descriptor)
    assert warnings == ["mystery.thing"]
    assert labeled.component_labels["mystery.thing"] is ComponentType.OTHER


def test_qwen_mixer_split_is_18_to_6(qwen):
    per_layer = {}
    for leaf in qwen.leaves():
        segs = leaf.path.split(".")
        digits = [s for s in segs if s.isdigit()]
        if not digits:
            continue
        comp = qwen.component_labels[leaf.path]
        if comp in (A, R):
            per_layer.setdefault(int(digits[0]), set()).add(comp)
    recurrent = [i for i, comps in per_layer.items() if comps == {R}]
    attention = [i for i, comps in per_layer.items() if comps == {A}]
    assert len(recurrent) == 18
    assert len(attention) == 6


def test_falcon_every_block_has_both_mixers(falcon):
    per_layer = {}
    for leaf in falcon.leaves():
        digits = [s for s in leaf.path.split(".") if s.isdigit()]
        if not digits:
            continue
        comp = falcon.component_labels[leaf.path]
        if comp in (A, R):
            per_layer.setdefault(int(digits[0]), set()).add(comp)
    assert len(per_layer) == 36
    assert all(comps == {A, R} for comps in per_layer.values())


def test_single_leaf_share_is_one():
    descriptor = tiny_descriptor(("mlp.up.weight", [4, 4]))
    labeled, _ = classify_all(descriptor)
    shares = component_param_shares(labeled)
    assert shares[M] == 1.0


def test_qwen_component_shares(qwen):
    shares = component_param_shares(qwen)
    assert shares[A] == pytest.approx(0.044, abs=0.005)
    assert shares[R] == pytest.approx(0.188, abs=0.005)
    assert shares[M] == pytest.approx(0.262, abs=0.005)


def test_falcon_component_shares(falcon):
    shares = component_param_shares(falcon)
    assert shares[R] == pytest.approx(0.346, abs=0.005)
    assert shares[A] == pytest.approx(0.064, abs=0.005)
    assert shares[M] == pytest.approx(0.434, abs=0.005)


def test_share_conservation(qwen, falcon):
    for descriptor in (qwen, falcon):
        assert abs(sum(component_param_shares(descriptor).values()) - 1.0) <= 1e-12


def test_unclassified_descriptor_rejected():
    descriptor = tiny_descriptor(("mlp.up.weight", [4, 4]))
    with pytest.raises(TaxonomyError, match="not classified"):
        component_param_shares(descriptor)


def test_qwen_topology(qwen):
    assert qwen.topology.kind == "sequential"
    assert qwen.topology.mixer_ratio == (18, 6)


def test_falcon_topology(falcon):
    assert falcon.topology.kind == "parallel"
    assert falcon.topology.mixer_ratio is None


def test_indeterminate_layout_reports_layers():
    descriptor = tiny_descriptor(
        ("model.layers.0.self_attn.q_proj.weight", [2, 2]),
        ("model.layers.0.mamba.in_proj.weight", [2, 2]),
        ("model.layers.1.self_attn.q_proj.weight", [2, 2]),
    )
    labeled, _ = classify_all(descriptor)
    with pytest.raises(TaxonomyError, match=r"indeterminate.*\[0\].*\[1\]"):
        detect_topology(labeled)


def test_no_mixers_is_an_error():
    descriptor = tiny_descriptor(("model.layers.0.mlp.up_proj.weight", [2, 2]))
    labeled, _ = classify_all(descriptor)
    with pytest.raises(TaxonomyError, match="mixer"):
        detect_topology(labeled)


def test_equal_priority_conflict_detected():
    rules = RuleSet(
        (
            ClassificationRule("*attn*", A, 10),
            ClassificationRule("*attn*", R, 10),
        )
    )
    descriptor = tiny_descriptor(("x.attn.weight", [2, 2]))
    with pytest.raises(RuleSetError, match="equal-priority"):
        classify_all(descriptor, rules)


def test_equal_priority_same_component_is_fine():
    rules = RuleSet(
        (
            ClassificationRule("*attn*", A, 10),
            ClassificationRule("x.*", A, 10),
        )
    )
    descriptor = tiny_descriptor(("x.attn.weight", [2, 2]))
    labeled, _ = classify_all(descriptor, rules)
    assert labeled.component_labels["x.attn"] is A


def test_rule_set_document_validation():
    with pytest.raises(RuleSetError):
        RuleSet.from_doc([{"pattern": "*", "component": "NotAComponent", "priority": 1}])
    with pytest.raises(RuleSetError):
        RuleSet.from_doc([{"pattern": "*", "component": "Mlp"}])
    with pytest.raises(RuleSetError):
        RuleSet.from_doc({"pattern": "*"})


def test_default_rules_file_matches_builtin():
    from loraplan import fixtures

    loaded = RuleSet.from_file(str(fixtures.rules_path()))
    assert loaded == DEFAULT_RULES
