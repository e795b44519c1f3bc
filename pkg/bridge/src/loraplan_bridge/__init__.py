"""Checkpoint-side bridge for the placement planner's JSON contracts.

Loads real models, exports their module trees as descriptor documents,
attaches rank-r adapters per a target-list document and emits attachment
reports.  All communication with the planner happens through the
descriptor / target-list / attachment-report JSON schemas it defines.
"""

from .export import BridgeError, export_descriptor, load_model
from .attach import LoraLinear, attach_adapters, smoke_train

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "LoraLinear",
    "attach_adapters",
    "export_descriptor",
    "load_model",
    "smoke_train",
]
