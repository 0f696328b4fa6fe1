"""Attention-discriminator block: branches, modulation, and stubs."""

import pytest
import torch

from aadgan.attention import (
    AdConfig,
    ConstantAttention,
    ad_forward,
    attention_branch_forward,
    build_ad_block,
    trunk_forward,
)
from aadgan.errors import InvalidConfig, ShapeMismatch

SMALL = dict(n_c=8, trunk_widths=[4, 8], att_depth=1)


class Stub(torch.nn.Module):
    """Wraps a plain callable so it can replace a child module."""

    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def forward(self, y):
        return self.fn(y)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        AdConfig(n_c=8, trunk_widths=[4, 16]).validate()
    with pytest.raises(InvalidConfig):
        AdConfig(trunk_widths=[]).validate()
    with pytest.raises(InvalidConfig):
        AdConfig(att_depth=0).validate()


def test_build_determinism():
    a = build_ad_block(AdConfig(**SMALL), seed=2)
    b = build_ad_block(AdConfig(**SMALL), seed=2)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


@pytest.mark.parametrize("hw", [(16, 16), (24, 16), (12, 20)])
def test_trunk_geometry_and_sign(hw):
    block = build_ad_block(AdConfig(**SMALL), seed=0)
    y = torch.rand(2, 1, *hw)
    t = trunk_forward(block, y)
    assert t.shape == (2, 8, hw[0] // 2, hw[1] // 2)
    assert t.min() >= 0.0  # rectifier-terminated trunk


@pytest.mark.parametrize("hw", [(16, 16), (24, 16)])
def test_attention_map_alignment_and_range(hw):
    block = build_ad_block(AdConfig(**SMALL), seed=0)
    y = torch.rand(2, 1, *hw)
    a = attention_branch_forward(block, y)
    t = trunk_forward(block, y)
    assert a.shape == (2, 1, t.shape[2], t.shape[3])
    assert a.min() > 0.0 and a.max() < 1.0  # logistic map


def test_ad_forward_embedding_shape():
    block = build_ad_block(AdConfig(**SMALL), seed=0)
    emb, a = ad_forward(block, torch.rand(3, 1, 16, 16))
    assert emb.shape == (3, 8)
    assert a.shape == (3, 1, 8, 8)


def test_ad_forward_micro_oracle():
    """Constant stubs: trunk 2, map 0.5 over one cell gives (0.5+1)*2 = 3."""
    block = build_ad_block(AdConfig(in_channels=1, n_c=4, trunk_widths=[4], att_depth=1), seed=0)
    block.trunk = Stub(lambda y: torch.full((y.shape[0], 4, 1, 1), 2.0))
    block.attention = ConstantAttention(0.5)
    emb, a = ad_forward(block, torch.rand(2, 1, 2, 2))
    assert torch.allclose(emb, torch.full((2, 4), 3.0))
    assert torch.allclose(a, torch.full((2, 1, 1, 1), 0.5))


def test_zero_attention_is_identity_modulation():
    """A zero map leaves the pooled trunk features untouched."""
    block = build_ad_block(AdConfig(**SMALL), seed=1)
    y = torch.rand(2, 1, 16, 16)
    t = trunk_forward(block, y)
    block.attention = ConstantAttention(0.0)
    emb, _ = ad_forward(block, y)
    assert torch.allclose(emb, t.mean(dim=(-2, -1)), atol=1e-6)


def test_misaligned_stub_raises():
    block = build_ad_block(AdConfig(**SMALL), seed=0)
    block.trunk = Stub(lambda y: torch.zeros(y.shape[0], 8, 3, 3))
    block.attention = Stub(lambda y: torch.zeros(y.shape[0], 1, 2, 2))
    with pytest.raises(ShapeMismatch):
        ad_forward(block, torch.rand(1, 1, 6, 6))


def test_channel_check():
    block = build_ad_block(AdConfig(**SMALL), seed=0)
    with pytest.raises(ShapeMismatch):
        trunk_forward(block, torch.rand(1, 3, 16, 16))
    with pytest.raises(ShapeMismatch):
        attention_branch_forward(block, torch.rand(1, 16, 16))


def test_constant_attention_geometry():
    mod = ConstantAttention(0.25)
    out = mod(torch.rand(2, 1, 15, 16))
    assert out.shape == (2, 1, 8, 8)
    assert torch.all(out == 0.25)
