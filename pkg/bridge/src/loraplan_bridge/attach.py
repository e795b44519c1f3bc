"""LoRA attachment per a target-list document, and the attachment report.

Adapters are hand-rolled wrapper modules rather than a PEFT dependency so
host paths in the live model stay identical to the base model's paths,
which is what the attachment-report contract expects.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .export import BridgeError


class LoraLinear(nn.Module):
    """A frozen linear layer plus trainable rank-r factors.

    Forward: ``base(x) + (alpha / r) * dropout(x) @ A^T @ B^T`` with
    ``A: (r, in)`` initialized Kaiming-uniform and ``B: (out, r)``
    initialized zero, so attachment leaves the function unchanged.
    """

    def __init__(self, base: nn.Linear, r: int, alpha: float, dropout: float) -> None:
        super().__init__()
        self.base = base
        self.r = r
        self.scaling = alpha / r
        self.lora_dropout = nn.Dropout(p=dropout)
        self.lora_A = nn.Parameter(torch.empty(r, base.in_features))
        self.lora_B = nn.Parameter(torch.zeros(base.out_features, r))
        nn.init.kaiming_uniform_(self.lora_A, a=math.sqrt(5))
        self.base.weight.requires_grad_(False)
        if self.base.bias is not None:
            self.base.bias.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.lora_dropout(x) @ self.lora_A.T @ self.lora_B.T
        return self.base(x) + self.scaling * update


def _freeze_base(model: nn.Module) -> None:
    for name, param in model.named_parameters():
        if "lora_A" not in name and "lora_B" not in name:
            param.requires_grad_(False)


def attach_adapters(model: nn.Module, target_list: dict) -> dict:
    """Attach rank-r adapters to exactly the listed modules.

    Returns the attachment report document, built by re-scanning the live
    model for adapter hosts rather than echoing the plan.  Paths listed in
    the plan but absent from the model are reported as an error, never
    silently skipped.
    """
    for key in ("condition", "model", "lora", "target_modules"):
        if key not in target_list:
            raise BridgeError(f"target list document missing key {key!r}")
    paths = list(target_list["target_modules"])
    if not paths:
        raise BridgeError("target list is empty; refusing to attach nothing")
    lora = target_list["lora"]
    r, alpha, dropout = int(lora["r"]), float(lora["alpha"]), float(lora["dropout"])

    missing = []
    hosts: dict[str, nn.Linear] = {}
    for path in paths:
        try:
            module = model.get_submodule(path)
        except AttributeError:
            missing.append(path)
            continue
        if not isinstance(module, nn.Linear):
            raise BridgeError(f"target {path!r} is not a linear module ({type(module).__name__})")
        hosts[path] = module
    if missing:
        raise BridgeError(f"target paths absent in the live model: {missing}")

    for path, base in hosts.items():
        parent_path, _, attr = path.rpartition(".")
        parent = model.get_submodule(parent_path) if parent_path else model
        setattr(parent, attr, LoraLinear(base, r, alpha, dropout))
    _freeze_base(model)

    report_hosts = [
        {
            "path": name,
            "a_shape": list(module.lora_A.shape),
            "b_shape": list(module.lora_B.shape),
        }
        for name, module in model.named_modules()
        if isinstance(module, LoraLinear)
    ]
    report_hosts.sort(key=lambda h: h["path"])
    return {
        "model": target_list["model"],
        "condition": target_list["condition"],
        "hosts": report_hosts,
    }


def smoke_train(
    model: nn.Module,
    steps: int = 3,
    seq_len: int = 16,
    batch_size: int = 2,
    lr: float = 2e-4,
    seed: int = 3407,
) -> list[float]:
    """Run a few optimizer steps to confirm gradients flow only through adapters.

    Loss values are diagnostic only.  Raises if any base parameter receives
    a gradient or any adapter parameter does not.
    """
    trainable = [p for p in model.parameters() if p.requires_grad]
    if not trainable:
        raise BridgeError("no trainable adapter parameters; attach adapters first")
    generator = torch.Generator().manual_seed(seed)
    vocab = int(model.get_input_embeddings().weight.shape[0])
    optimizer = torch.optim.AdamW(trainable, lr=lr)
    losses = []
    model.train()
    for _ in range(steps):
        tokens = torch.randint(0, vocab, (batch_size, seq_len), generator=generator)
        out = model(input_ids=tokens, labels=tokens)
        optimizer.zero_grad()
        out.loss.backward()
        for name, param in model.named_parameters():
            is_adapter = "lora_A" in name or "lora_B" in name
            if is_adapter and param.grad is None:
                raise BridgeError(f"adapter parameter {name!r} received no gradient")
            if not is_adapter and param.grad is not None and param.grad.abs().sum() > 0:
                raise BridgeError(f"base parameter {name!r} received a gradient")
        optimizer.step()
        losses.append(float(out.loss.detach()))
    return losses
