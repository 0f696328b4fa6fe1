"""Dual-discriminator assembly and attention-map aggregation.

A full-image block and an ROI block each produce an embedding and an
attention map; a linear classifier over the concatenated embeddings
scores real vs fake. The two maps are combined into one input-resolution
map by one of four ensemble modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import AdBlock, AdConfig, ad_forward
from .data import RoiRect, check_roi
from .errors import InvalidConfig, ShapeMismatch

ENSEMBLE_MODES = ("global_only", "multiply", "add", "embed")


class AadModel(nn.Module):
    """Global block over the full image, local block over the ROI crop."""

    def __init__(self, cfg: AdConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.global_block = AdBlock(cfg)
        self.local_block = AdBlock(cfg)
        self.classifier = nn.Linear(2 * cfg.n_c, 1)


@dataclass
class AadOutput:
    score: torch.Tensor     # (B,) in (0, 1)
    m_global: torch.Tensor  # (B, 1, ht, wt)
    m_local: torch.Tensor   # (B, 1, ht', wt')


def build_aad(cfg: AdConfig, seed: int) -> AadModel:
    from .generator import init_weights

    torch.manual_seed(seed)
    model = AadModel(cfg)
    init_weights(model)
    return model


def crop_batch(y: torch.Tensor, roi: RoiRect) -> torch.Tensor:
    check_roi(roi, y.shape[-2], y.shape[-1])
    return y[..., roi.top : roi.top + roi.height, roi.left : roi.left + roi.width]


def aad_scores(model: AadModel, y: torch.Tensor, crops: torch.Tensor) -> AadOutput:
    """Score full images against pre-cut ROI crops (one crop per image)."""
    if y.shape[0] != crops.shape[0]:
        raise ShapeMismatch("batch size of images and crops differ")
    e_g, a_g = ad_forward(model.global_block, y)
    e_l, a_l = ad_forward(model.local_block, crops)
    logit = model.classifier(torch.cat([e_g, e_l], dim=1)).squeeze(1)
    return AadOutput(torch.sigmoid(logit), mean_attention(a_g), mean_attention(a_l))


def aad_forward(model: AadModel, y: torch.Tensor, roi: RoiRect) -> AadOutput:
    """Score a (B, 1, H, W) batch, cropping the same ROI from every image."""
    if y.dim() != 4:
        raise ShapeMismatch(f"expected (B, C, H, W), got {tuple(y.shape)}")
    return aad_scores(model, y, crop_batch(y, roi))


def mean_attention(att: torch.Tensor) -> torch.Tensor:
    """Channel-wise mean to a single-channel map; identity on one channel."""
    if att.shape[-3] == 1:
        return att
    return att.mean(dim=-3, keepdim=True)


def _to_torch(m) -> tuple[torch.Tensor, bool]:
    if isinstance(m, torch.Tensor):
        return m, False
    return torch.as_tensor(np.asarray(m), dtype=torch.float32), True


def resize_map(m, h: int, w: int):
    """Bilinear resize (corner alignment off) keeping values in [0, 1]."""
    t, was_numpy = _to_torch(m)
    squeeze = t.dim() == 3
    if squeeze:
        t = t.unsqueeze(0)
    if t.dim() != 4:
        raise ShapeMismatch(f"expected (1, h, w) or (B, 1, h, w), got {tuple(t.shape)}")
    if t.shape[-2:] != (h, w):
        t = F.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
        t = t.clamp(0.0, 1.0)
    if squeeze:
        t = t.squeeze(0)
    return t.numpy() if was_numpy else t


def aggregate_attention(m_global, m_local, roi: RoiRect, hw: tuple[int, int], mode: str):
    """Combine global and local maps into one (1, H, W) map.

    The global map is resized to H x W; outside the ROI it is used as
    is. Inside the ROI the local map (resized to the ROI) replaces it
    (embed), adds with clamping (add), or multiplies (multiply);
    global_only ignores the local map entirely.
    """
    if mode not in ENSEMBLE_MODES:
        raise InvalidConfig(f"unknown ensemble mode {mode!r}")
    h, w = hw
    check_roi(roi, h, w)
    g_t, was_numpy = _to_torch(m_global)
    out = resize_map(g_t, h, w).clone()
    if mode != "global_only":
        l_t, _ = _to_torch(m_local)
        local = resize_map(l_t, roi.height, roi.width)
        sl = (..., slice(roi.top, roi.top + roi.height), slice(roi.left, roi.left + roi.width))
        if mode == "embed":
            out[sl] = local
        elif mode == "add":
            out[sl] = (out[sl] + local).clamp(0.0, 1.0)
        else:  # multiply
            out[sl] = out[sl] * local
    return out.numpy() if was_numpy else out
