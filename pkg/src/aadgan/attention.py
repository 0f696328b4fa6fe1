"""Attention-discriminator block: trunk features modulated by a learned map.

The block runs two branches over the same input: a small convolutional
trunk producing n_c feature channels at half resolution, and a
bottom-up/top-down attention branch producing a single-channel map in
(0, 1) at the same resolution. The modulated features (A + 1) * T are
pooled into an n_c-dimensional embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import InvalidConfig, ShapeMismatch


@dataclass
class AdConfig:
    in_channels: int = 1
    n_c: int = 64
    trunk_widths: list[int] = field(default_factory=lambda: [16, 32, 64])
    att_depth: int = 2

    def validate(self) -> None:
        if self.n_c < 1 or self.in_channels < 1:
            raise InvalidConfig("n_c and in_channels must be >= 1")
        if not self.trunk_widths:
            raise InvalidConfig("trunk_widths must be non-empty")
        if self.trunk_widths[-1] != self.n_c:
            raise InvalidConfig(
                f"trunk final width {self.trunk_widths[-1]} must equal n_c {self.n_c}"
            )
        if self.att_depth < 1:
            raise InvalidConfig("att_depth must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AdConfig":
        return cls(**d)


class Trunk(nn.Module):
    """Stride-2 stem then 3x3 convs, each rectified; output is non-negative."""

    def __init__(self, cfg: AdConfig):
        super().__init__()
        layers = [nn.Conv2d(cfg.in_channels, cfg.trunk_widths[0], 3, stride=2, padding=1),
                  nn.ReLU(inplace=True)]
        for cin, cout in zip(cfg.trunk_widths, cfg.trunk_widths[1:]):
            layers += [nn.Conv2d(cin, cout, 3, padding=1), nn.ReLU(inplace=True)]
        self.body = nn.Sequential(*layers)

    def forward(self, y):
        return self.body(y)


class AttentionBranch(nn.Module):
    """Bottom-up/top-down map head working at the trunk's half resolution.

    A stride-2 stem matches the trunk scale; att_depth stride-2 convs
    contract, then nearest-neighbor upsampling back through the recorded
    sizes restores the trunk resolution. A 1x1 conv plus logistic gives
    the map.
    """

    def __init__(self, cfg: AdConfig):
        super().__init__()
        w = cfg.trunk_widths[0]
        self.stem = nn.Conv2d(cfg.in_channels, w, 3, stride=2, padding=1)
        self.downs = nn.ModuleList(
            nn.Conv2d(w, w, 3, stride=2, padding=1) for _ in range(cfg.att_depth)
        )
        self.ups = nn.ModuleList(
            nn.Conv2d(w, w, 3, padding=1) for _ in range(cfg.att_depth)
        )
        self.head = nn.Conv2d(w, 1, 1)

    def forward(self, y):
        h = F.relu(self.stem(y))
        sizes = []
        for down in self.downs:
            sizes.append(h.shape[-2:])
            h = F.relu(down(h))
        for up, size in zip(self.ups, reversed(sizes)):
            h = F.interpolate(h, size=size, mode="nearest")
            h = F.relu(up(h))
        return torch.sigmoid(self.head(h))


class ConstantAttention(nn.Module):
    """Drop-in attention branch emitting a constant map; testing bypass."""

    def __init__(self, value: float = 0.0):
        super().__init__()
        self.value = value

    def forward(self, y):
        b, _, h, w = y.shape
        return torch.full(
            (b, 1, (h + 1) // 2, (w + 1) // 2), self.value,
            dtype=y.dtype, device=y.device,
        )


class AdBlock(nn.Module):
    """Trunk plus attention branch over a single response image."""

    def __init__(self, cfg: AdConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.trunk = Trunk(cfg)
        self.attention = AttentionBranch(cfg)


def build_ad_block(cfg: AdConfig, seed: int) -> AdBlock:
    from .generator import init_weights

    torch.manual_seed(seed)
    block = AdBlock(cfg)
    init_weights(block)
    return block


def _check_input(block: AdBlock, y: torch.Tensor) -> None:
    if y.dim() != 4 or y.shape[1] != block.cfg.in_channels:
        raise ShapeMismatch(
            f"expected (B, {block.cfg.in_channels}, H, W), got {tuple(y.shape)}"
        )


def trunk_forward(block: AdBlock, y: torch.Tensor) -> torch.Tensor:
    """Trunk features, (B, n_c, ceil(H/2), ceil(W/2))."""
    _check_input(block, y)
    return block.trunk(y)


def attention_branch_forward(block: AdBlock, y: torch.Tensor) -> torch.Tensor:
    """Attention map in (0, 1), spatially aligned with the trunk output."""
    _check_input(block, y)
    return block.attention(y)


def ad_forward(block: AdBlock, y: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Pooled modulated embedding plus the raw attention map.

    The map modulates the trunk residually, (A + 1) * T, broadcast over
    the trunk channels, then global average pooling yields one n_c
    vector per batch element.
    """
    t = trunk_forward(block, y)
    a = attention_branch_forward(block, y)
    if a.shape[-2:] != t.shape[-2:]:
        raise ShapeMismatch(
            f"attention map {tuple(a.shape[-2:])} misaligned with trunk {tuple(t.shape[-2:])}"
        )
    modulated = (a + 1.0) * t
    embedding = modulated.mean(dim=(-2, -1))
    return embedding, a
