"""Scikit-learn facade: params contract, fitting, prediction, scoring."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from aadgan.data import RoiRect, load_samples
from aadgan.errors import NonFiniteInput, ShapeMismatch
from aadgan.estimator import AadSynthesizer


def small_est(**overrides):
    kw = dict(epochs=1, batch_size=4, base_width=8, depth=2, n_res_blocks=1, n_c=16, seed=0)
    kw.update(overrides)
    return AadSynthesizer(**kw)


def test_get_params_set_params_roundtrip():
    est = AadSynthesizer(lr=5e-4, ensemble="add")
    params = est.get_params()
    assert params["lr"] == 5e-4
    assert params["ensemble"] == "add"
    est.set_params(epochs=3, adc="off")
    assert est.epochs == 3 and est.adc == "off"


def test_clone_preserves_params():
    est = AadSynthesizer(seed=9, generator_arch="unet", n_c=32)
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_unfitted_raises():
    est = AadSynthesizer()
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 3, 32, 32), dtype=np.float32))
    with pytest.raises(NotFittedError):
        est.score("unused")


@pytest.fixture(scope="module")
def fitted(tiny_train_manifest):
    return small_est().fit(tiny_train_manifest)


def test_fit_sets_state(fitted):
    assert fitted.checkpoint_.step == 3  # 12 samples / batch 4, one epoch
    assert fitted.geometry_["h"] == 32
    assert fitted.runtime_ is not None


def test_predict_shapes(fitted, tiny_train_manifest):
    xs = np.stack([s.x for s in load_samples(tiny_train_manifest)[:2]])
    out = fitted.predict(xs)
    assert out.shape == (2, 1, 32, 32)
    assert out.min() >= 0.0 and out.max() <= 1.0

    single = fitted.predict(xs[0])
    assert single.shape == (1, 32, 32)
    np.testing.assert_array_equal(single, out[0])


def test_predict_roi_override_changes_result(fitted, tiny_train_manifest):
    x = load_samples(tiny_train_manifest)[0].x
    a = fitted.predict(x)
    b = fitted.predict(x, roi=RoiRect(0, 0, 12, 12))
    assert not np.array_equal(a, b)


def test_predict_rejects_bad_input(fitted):
    with pytest.raises(ShapeMismatch):
        fitted.predict(np.zeros((1, 2, 32, 32), dtype=np.float32))
    bad = np.zeros((3, 32, 32), dtype=np.float32)
    bad[0, 0, 0] = np.inf
    with pytest.raises(NonFiniteInput):
        fitted.predict(bad)


def test_score_and_evaluate(fitted, tiny_val_manifest):
    s = fitted.score(tiny_val_manifest)
    assert -1.0 <= s <= 1.0
    report = fitted.evaluate(tiny_val_manifest)
    assert report["ssim"]["mean"] == pytest.approx(s)
    assert report["n"] == 4


def test_fit_from_manifest_path(tiny_train_manifest):
    est = small_est(epochs=1)
    est.fit(tiny_train_manifest.root / "manifest.json")
    assert hasattr(est, "checkpoint_")
