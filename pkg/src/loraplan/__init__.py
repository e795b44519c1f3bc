"""Component-aware LoRA placement planning and experiment analytics for
hybrid language models.

The pipeline has four stages: parse a checkpoint into a module tree
(:mod:`loraplan.checkpoint`, :mod:`loraplan.descriptor`), classify every
module into a component type and detect the hybrid topology
(:mod:`loraplan.taxonomy`), compile placement conditions into exact
dotted-path target lists with parameter budgets (:mod:`loraplan.placement`),
and verify adapter attachment reports (:mod:`loraplan.verify`).
:mod:`loraplan.analytics` and :mod:`loraplan.bootstrap` derive the study
metrics from evaluation results.
"""

from .checkpoint import (
    SafetensorsError,
    TensorEntry,
    TensorIndex,
    parse_safetensors_header,
    serialize_header,
)
from .descriptor import (
    DescriptorError,
    ModelDescriptor,
    ModuleNode,
    derive_module_tree,
    descriptor_from_index,
    dump_descriptor,
    load_descriptor,
)
from .taxonomy import (
    DEFAULT_RULES,
    ClassificationRule,
    ComponentType,
    RuleSet,
    RuleSetError,
    TaxonomyError,
    Topology,
    classify_all,
    classify_module,
    component_param_shares,
    detect_topology,
)
from .placement import (
    LoraConfig,
    ParameterBudget,
    PlacementCondition,
    PlacementError,
    TargetList,
    budget,
    canonical_conditions,
    compile_targets,
    dump_target_list,
    load_target_list,
    lora_param_count,
)
from .verify import (
    AdapterHost,
    AttachmentReport,
    VerificationResult,
    VerifyError,
    dump_attachment_report,
    load_attachment_report,
    report_from,
    verify_attachment,
)
from .analytics import (
    AnalyticsError,
    BaselineTable,
    DeltaCell,
    EvalRecord,
    ForgettingScore,
    ParetoPoint,
    Recipe,
    delta_table,
    efficiency_ratio,
    forgetting_score,
    heatmap_matrix,
    mean_accuracy,
    pareto_frontier,
    select_recipe,
)
from .bootstrap import (
    BootstrapError,
    BootstrapResult,
    InstanceOutcomes,
    outcomes_from_accuracy,
    paired_bootstrap_ci,
)

__version__ = "0.1.0"
