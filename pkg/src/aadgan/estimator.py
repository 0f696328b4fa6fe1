"""Scikit-learn style estimator facade over the training pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .attention import AdConfig
from .data import DatasetManifest, RoiRect, centered_roi, load_manifest
from .errors import NonFiniteInput, ShapeMismatch
from .generator import GeneratorConfig
from .metrics import evaluate
from .training import Runtime, TrainConfig, infer, train


def _as_manifest(data) -> DatasetManifest:
    if isinstance(data, DatasetManifest):
        return data
    return load_manifest(data)


class AadSynthesizer(BaseEstimator):
    """Contrast-response synthesizer with attention-guided adversarial training.

    fit() trains on a dataset manifest; predict() maps (n, 3, H, W)
    non-contrast stacks to (n, 1, H, W) synthesized response images.

    Parameters mirror the training configuration; get_params/set_params
    follow scikit-learn conventions.
    """

    def __init__(
        self,
        target_phase: str = "early",
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epochs: int = 30,
        batch_size: int = 4,
        lambda_l1: float = 10.0,
        ensemble: str = "embed",
        seed: int = 0,
        adc: str = "on",
        generator_arch: str = "resnet_encdec",
        base_width: int = 16,
        depth: int = 3,
        n_res_blocks: int = 4,
        n_c: int = 64,
        att_depth: int = 2,
        infer_refinements: int = 1,
    ):
        self.target_phase = target_phase
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epochs = epochs
        self.batch_size = batch_size
        self.lambda_l1 = lambda_l1
        self.ensemble = ensemble
        self.seed = seed
        self.adc = adc
        self.generator_arch = generator_arch
        self.base_width = base_width
        self.depth = depth
        self.n_res_blocks = n_res_blocks
        self.n_c = n_c
        self.att_depth = att_depth
        self.infer_refinements = infer_refinements

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            target_phase=self.target_phase,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lambda_l1=self.lambda_l1,
            ensemble=self.ensemble,
            seed=self.seed,
            generator=GeneratorConfig(
                arch=self.generator_arch,
                base_width=self.base_width,
                depth=self.depth,
                n_res_blocks=self.n_res_blocks,
            ),
            ad=AdConfig(n_c=self.n_c, trunk_widths=[16, 32, self.n_c], att_depth=self.att_depth),
            infer_refinements=self.infer_refinements,
            adc=self.adc,
        )

    def fit(self, manifest, y=None, out_dir=None):
        """Train on a DatasetManifest (or a manifest path); returns self."""
        m = _as_manifest(manifest)
        self.checkpoint_ = train(self._train_config(), m, out_dir=out_dir)
        self.geometry_ = dict(m.geometry)
        self.runtime_ = Runtime(self.checkpoint_)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "checkpoint_"):
            raise NotFittedError(
                "This AadSynthesizer instance is not fitted yet; call fit first."
            )

    def predict(self, X, roi: RoiRect | None = None) -> np.ndarray:
        """Synthesize responses for a (n, 3, H, W) or (3, H, W) input array."""
        self._check_fitted()
        arr = np.asarray(X, dtype=np.float32)
        single = arr.ndim == 3
        if single:
            arr = arr[None]
        if arr.ndim != 4 or arr.shape[1] != 3:
            raise ShapeMismatch(f"expected (n, 3, H, W), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteInput("predict input contains non-finite values")
        g = self.geometry_
        if roi is None:
            roi = centered_roi(arr.shape[2], arr.shape[3], g["roi_h"], g["roi_w"])
        out = np.stack([infer(self.runtime_, x, roi) for x in arr])
        return out[0] if single else out

    def score(self, manifest, y=None) -> float:
        """Mean SSIM of predictions over a manifest's samples."""
        self._check_fitted()
        report = evaluate(self.checkpoint_, _as_manifest(manifest))
        return float(report["ssim"]["mean"])

    def evaluate(self, manifest) -> dict:
        """Full metric report over a manifest."""
        self._check_fitted()
        return evaluate(self.checkpoint_, _as_manifest(manifest))
