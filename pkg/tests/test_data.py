"""Dataset plumbing: normalization, ROI handling, batching, manifests."""

import json

import numpy as np
import pytest

from aadgan.data import (
    ADC_CHANNEL,
    CHANNEL_ORDER,
    RoiRect,
    apply_adc_mode,
    centered_roi,
    check_roi,
    extract_roi,
    load_manifest,
    load_sample,
    make_batches,
    normalize_volume,
)
from aadgan.errors import (
    EmptyDataset,
    InvalidConfig,
    NonFiniteInput,
    RoiOutOfBounds,
    ShapeMismatch,
)
from aadgan.phantom import generate_phantom_dataset


def test_channel_order():
    assert CHANNEL_ORDER == ("t2w", "adc", "t1pre")
    assert CHANNEL_ORDER[ADC_CHANNEL] == "adc"


def test_normalize_volume_per_channel():
    t = np.stack(
        [
            np.linspace(2.0, 4.0, 16).reshape(4, 4),
            np.full((4, 4), 7.0),
            np.linspace(-1.0, 1.0, 16).reshape(4, 4),
        ]
    ).astype(np.float32)
    out = normalize_volume(t)
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_allclose(out[0].min(), 0.0, atol=1e-7)
    np.testing.assert_allclose(out[0].max(), 1.0, atol=1e-7)
    np.testing.assert_allclose(out[1], 0.5)  # constant channel maps to mid-range
    np.testing.assert_allclose(out[2], (t[2] + 1.0) / 2.0, atol=1e-6)


def test_normalize_volume_rejects_nan():
    t = np.zeros((3, 4, 4), dtype=np.float32)
    t[0, 0, 0] = np.nan
    with pytest.raises(NonFiniteInput):
        normalize_volume(t)


def test_normalize_volume_rejects_wrong_rank():
    with pytest.raises(ShapeMismatch):
        normalize_volume(np.zeros((4, 4), dtype=np.float32))


def test_centered_roi():
    assert centered_roi(64, 64, 24, 24) == RoiRect(20, 20, 24, 24)
    assert centered_roi(10, 8, 4, 4) == RoiRect(3, 2, 4, 4)


def test_extract_roi_is_copy():
    t = np.arange(32, dtype=np.float32).reshape(1, 4, 8)
    roi = RoiRect(1, 2, 2, 3)
    crop = extract_roi(t, roi)
    assert crop.shape == (1, 2, 3)
    np.testing.assert_array_equal(crop[0], t[0, 1:3, 2:5])
    crop[...] = -1
    assert t.min() >= 0


@pytest.mark.parametrize(
    "roi",
    [
        RoiRect(-1, 0, 2, 2),
        RoiRect(0, 0, 5, 2),
        RoiRect(3, 3, 2, 2),
        RoiRect(0, 0, 0, 2),
    ],
)
def test_check_roi_rejects(roi):
    with pytest.raises(RoiOutOfBounds):
        check_roi(roi, 4, 4)


def test_make_batches_partition_and_determinism():
    ids = [f"s{i}" for i in range(10)]
    b1 = make_batches(ids, 4, seed=3, epoch=0)
    b2 = make_batches(ids, 4, seed=3, epoch=0)
    assert b1 == b2
    assert [len(b) for b in b1] == [4, 4, 2]
    assert sorted(sum(b1, [])) == sorted(ids)
    assert make_batches(ids, 4, seed=3, epoch=1) != b1
    assert make_batches(ids, 4, seed=4, epoch=0) != b1


def test_make_batches_no_shuffle_keeps_order():
    ids = ["a", "b", "c"]
    assert make_batches(ids, 2, seed=0, shuffle=False) == [["a", "b"], ["c"]]


def test_make_batches_errors():
    with pytest.raises(EmptyDataset):
        make_batches([], 2, seed=0)
    with pytest.raises(InvalidConfig):
        make_batches(["a"], 0, seed=0)


def test_apply_adc_mode():
    x = np.stack([np.full((2, 2), 0.2), np.arange(4.0).reshape(2, 2), np.full((2, 2), 0.8)])
    on = apply_adc_mode(x, "on")
    np.testing.assert_array_equal(on, x)
    off = apply_adc_mode(x, "off")
    np.testing.assert_allclose(off[ADC_CHANNEL], 1.5)
    np.testing.assert_array_equal(off[0], x[0])
    np.testing.assert_array_equal(off[2], x[2])
    assert x[ADC_CHANNEL].max() == 3.0  # input untouched
    with pytest.raises(InvalidConfig):
        apply_adc_mode(x, "maybe")


@pytest.fixture(scope="module")
def small_ds(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    return generate_phantom_dataset(out, seed=5, n=3, hw=(32, 32), roi_hw=(12, 12))


def test_load_manifest_roundtrip(small_ds):
    m = load_manifest(small_ds.root / "manifest.json")
    assert len(m) == 3
    assert m.geometry["h"] == 32
    assert m.ids == small_ds.ids


def test_load_manifest_rejects_duplicate_ids(tmp_path, small_ds):
    doc = json.loads((small_ds.root / "manifest.json").read_text())
    doc["samples"].append(dict(doc["samples"][0]))
    bad = tmp_path / "manifest.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(InvalidConfig, match="duplicate"):
        load_manifest(bad)


def test_load_manifest_rejects_missing_field(tmp_path, small_ds):
    doc = json.loads((small_ds.root / "manifest.json").read_text())
    del doc["samples"][0]["adc"]
    bad = tmp_path / "manifest.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(InvalidConfig, match="adc"):
        load_manifest(bad)


def test_load_sample_normalized(small_ds):
    s = load_sample(small_ds, small_ds.ids[0])
    assert s.x.shape == (3, 32, 32)
    assert s.y_early.shape == (1, 32, 32)
    assert s.y_late.shape == (1, 32, 32)
    assert 0.0 <= s.x.min() and s.x.max() <= 1.0
    assert s.roi == RoiRect(10, 10, 12, 12)
    assert s.lesion_mask is not None
    assert set(np.unique(s.lesion_mask)) <= {0.0, 1.0}


def test_load_sample_raw(small_ds):
    s_raw = load_sample(small_ds, small_ds.ids[0], normalize=False)
    s_norm = load_sample(small_ds, small_ds.ids[0])
    assert not np.array_equal(s_raw.x, s_norm.x)
