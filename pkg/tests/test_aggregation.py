"""Dual-discriminator assembly and map aggregation against hand tables."""

import numpy as np
import pytest
import torch

from aadgan.aggregation import (
    ENSEMBLE_MODES,
    aad_forward,
    aad_scores,
    aggregate_attention,
    build_aad,
    crop_batch,
    mean_attention,
    resize_map,
)
from aadgan.attention import AdConfig
from aadgan.data import RoiRect
from aadgan.errors import InvalidConfig, RoiOutOfBounds, ShapeMismatch

from oracles import aggregate_reference

SMALL = AdConfig(n_c=8, trunk_widths=[4, 8], att_depth=1)


def test_resize_map_doubling_oracle():
    m = np.array([[[0.0, 1.0]]], dtype=np.float32)  # (1, 1, 2)
    out = resize_map(m, 1, 4)
    np.testing.assert_allclose(out[0, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-6)
    assert isinstance(out, np.ndarray)


def test_resize_map_identity_when_size_matches():
    m = torch.rand(2, 1, 5, 7)
    out = resize_map(m, 5, 7)
    assert torch.equal(out, m)


def test_resize_map_batched_torch():
    m = torch.rand(3, 1, 4, 4)
    out = resize_map(m, 8, 8)
    assert isinstance(out, torch.Tensor)
    assert out.shape == (3, 1, 8, 8)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_mean_attention():
    att = torch.tensor([[[[0.0, 1.0]], [[0.5, 0.5]]]])  # (1, 2, 1, 2)
    np.testing.assert_allclose(mean_attention(att)[0, 0], [[0.25, 0.75]])
    one = torch.rand(2, 1, 3, 3)
    assert mean_attention(one) is one


G = np.array([[[0.2, 0.4], [0.6, 0.8]]], dtype=np.float32)
G_UP = np.array(
    [
        [0.2, 0.25, 0.35, 0.4],
        [0.3, 0.35, 0.45, 0.5],
        [0.5, 0.55, 0.65, 0.7],
        [0.6, 0.65, 0.75, 0.8],
    ]
)
L = np.array([[[0.5]]], dtype=np.float32)
ROI = RoiRect(1, 1, 2, 2)


def test_aggregate_global_only_hand_table():
    out = aggregate_attention(G, L, ROI, (4, 4), "global_only")
    np.testing.assert_allclose(out[0], G_UP, atol=1e-6)


def test_aggregate_embed_hand_table():
    out = aggregate_attention(G, L, ROI, (4, 4), "embed")
    expect = G_UP.copy()
    expect[1:3, 1:3] = 0.5
    np.testing.assert_allclose(out[0], expect, atol=1e-6)


def test_aggregate_add_hand_table():
    out = aggregate_attention(G, L, ROI, (4, 4), "add")
    expect = G_UP.copy()
    expect[1:3, 1:3] = np.clip(expect[1:3, 1:3] + 0.5, 0.0, 1.0)
    np.testing.assert_allclose(out[0], expect, atol=1e-6)


def test_aggregate_multiply_hand_table():
    out = aggregate_attention(G, L, ROI, (4, 4), "multiply")
    expect = G_UP.copy()
    expect[1:3, 1:3] *= 0.5
    np.testing.assert_allclose(out[0], expect, atol=1e-6)


@pytest.mark.parametrize("mode", ENSEMBLE_MODES)
def test_aggregate_random_draws_match_reference(mode, rng):
    for _ in range(25):
        h = int(rng.integers(8, 33))
        w = int(rng.integers(8, 33))
        rh = int(rng.integers(2, h - 1))
        rw = int(rng.integers(2, w - 1))
        roi = RoiRect(
            int(rng.integers(0, h - rh + 1)), int(rng.integers(0, w - rw + 1)), rh, rw
        )
        mg = rng.random((1, int(rng.integers(2, 12)), int(rng.integers(2, 12)))).astype(np.float32)
        ml = rng.random((1, int(rng.integers(1, 8)), int(rng.integers(1, 8)))).astype(np.float32)
        got = aggregate_attention(mg, ml, roi, (h, w), mode)
        want = aggregate_reference(mg, ml, roi, (h, w), mode)
        np.testing.assert_allclose(got, want, atol=1e-5)


def test_aggregate_torch_passthrough():
    out = aggregate_attention(torch.as_tensor(G), torch.as_tensor(L), ROI, (4, 4), "embed")
    assert isinstance(out, torch.Tensor)


def test_aggregate_rejects_unknown_mode():
    with pytest.raises(InvalidConfig):
        aggregate_attention(G, L, ROI, (4, 4), "mean")


def test_aggregate_rejects_bad_roi():
    with pytest.raises(RoiOutOfBounds):
        aggregate_attention(G, L, RoiRect(3, 3, 2, 2), (4, 4), "embed")


def test_crop_batch():
    y = torch.arange(16.0).reshape(1, 1, 4, 4)
    crop = crop_batch(y, RoiRect(1, 2, 2, 2))
    np.testing.assert_allclose(crop[0, 0], [[6.0, 7.0], [10.0, 11.0]])


def test_aad_forward_matches_aad_scores():
    model = build_aad(SMALL, seed=3)
    y = torch.rand(3, 1, 16, 16)
    roi = RoiRect(4, 4, 8, 8)
    a = aad_forward(model, y, roi)
    b = aad_scores(model, y, crop_batch(y, roi))
    assert torch.equal(a.score, b.score)
    assert torch.equal(a.m_global, b.m_global)
    assert torch.equal(a.m_local, b.m_local)


def test_aad_output_shapes_and_range():
    model = build_aad(SMALL, seed=4)
    out = aad_forward(model, torch.rand(2, 1, 16, 16), RoiRect(4, 4, 8, 8))
    assert out.score.shape == (2,)
    assert torch.all((out.score > 0) & (out.score < 1))
    assert out.m_global.shape == (2, 1, 8, 8)
    assert out.m_local.shape == (2, 1, 4, 4)


def test_aad_scores_batch_mismatch():
    model = build_aad(SMALL, seed=4)
    with pytest.raises(ShapeMismatch):
        aad_scores(model, torch.rand(2, 1, 16, 16), torch.rand(3, 1, 8, 8))


def test_build_aad_determinism():
    a = build_aad(SMALL, seed=7)
    b = build_aad(SMALL, seed=7)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_zeroed_classifier_scores_half():
    """All-zero classifier weights collapse every score to logistic(0) = 0.5."""
    model = build_aad(SMALL, seed=5)
    with torch.no_grad():
        model.classifier.weight.zero_()
        model.classifier.bias.zero_()
    out = aad_forward(model, torch.rand(4, 1, 16, 16), RoiRect(4, 4, 8, 8))
    assert torch.all(out.score == 0.5)
