"""Session fixtures: reduced-width instances of both real hybrid architectures.

The architecture classes, block counts and module naming come from the real
model families; only the widths are shrunk so the round-trip runs on CPU in
seconds.
"""

import pytest
import torch


@pytest.fixture(scope="session")
def falcon_checkpoint(tmp_path_factory):
    from transformers import FalconH1Config, FalconH1ForCausalLM

    torch.manual_seed(0)
    config = FalconH1Config(
        vocab_size=128,
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=36,
        num_attention_heads=4,
        num_key_value_heads=2,
        mamba_d_ssm=64,
        mamba_n_heads=8,
        mamba_d_head=8,
        mamba_d_state=16,
        mamba_n_groups=1,
        mamba_d_conv=4,
        mamba_expand=2,
    )
    model = FalconH1ForCausalLM(config)
    path = tmp_path_factory.mktemp("falcon") / "tiny-falcon-h1"
    model.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def qwen_checkpoint(tmp_path_factory):
    from transformers import Qwen3NextConfig, Qwen3NextForCausalLM

    torch.manual_seed(0)
    config = Qwen3NextConfig(
        vocab_size=128,
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=24,
        num_attention_heads=4,
        num_key_value_heads=2,
        head_dim=8,
        linear_num_value_heads=4,
        linear_num_key_heads=2,
        linear_key_head_dim=8,
        linear_value_head_dim=8,
        linear_conv_kernel_dim=4,
        mlp_only_layers=list(range(24)),
    )
    model = Qwen3NextForCausalLM(config)
    path = tmp_path_factory.mktemp("qwen") / "tiny-qwen35"
    model.save_pretrained(path)
    return str(path)
