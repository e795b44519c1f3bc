"""Descriptor export: live model to descriptor JSON document."""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn


class BridgeError(Exception):
    """Raised for load failures and contract violations."""


def load_model(model_path: str | Path, device: str = "cpu") -> nn.Module:
    """Load a locally available causal-LM checkpoint."""
    from transformers import AutoModelForCausalLM

    path = Path(model_path)
    if not path.exists():
        raise BridgeError(f"checkpoint not found: {path}")
    try:
        model = AutoModelForCausalLM.from_pretrained(str(path), dtype=torch.float32)
    except Exception as exc:  # transformers raises a zoo of types here
        raise BridgeError(f"cannot load checkpoint {path}: {exc}") from exc
    return model.to(device)


def export_descriptor(model: nn.Module, model_name: str | None = None) -> dict:
    """Emit the descriptor document for a loaded model.

    Parameter names are exported verbatim (``.weight``/``.bias`` suffixes
    intact, bare parameters such as a Mamba ``A_log`` unsuffixed) so the
    planner's grouping rule sees exactly what a checkpoint header would
    show.  Tied parameters are exported once.
    """
    modules = [
        {"path": name, "shape": list(param.shape)}
        for name, param in model.named_parameters()
    ]
    if not modules:
        raise BridgeError("model has no parameters to export")

    config = getattr(model, "config", None)
    num_layers = getattr(config, "num_hidden_layers", None)
    if num_layers is None:
        indices = {
            int(seg)
            for name, _ in model.named_parameters()
            for seg in name.split(".")
            if seg.isdigit()
        }
        num_layers = len(indices) or 1
    if model_name is None:
        model_name = getattr(config, "name_or_path", "") or type(model).__name__

    total = sum(p.numel() for _, p in model.named_parameters())
    return {
        "model_name": model_name,
        "num_layers": int(num_layers),
        "total_params": int(total),
        "modules": modules,
    }
