"""Image-quality metrics (PSNR, SSIM, MAE) and dataset-level evaluation."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from .checkpoint import Checkpoint
from .data import DatasetManifest, load_sample
from .errors import ImageTooSmall, ShapeMismatch

_WIN = 11
_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mae(a, b) -> float:
    """Mean absolute error over all elements."""
    a, b = _pair(a, b)
    return float(np.abs(a - b).mean())


def psnr(a, b, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images are equal."""
    a, b = _pair(a, b)
    if data_range <= 0:
        raise ShapeMismatch(f"data_range must be > 0, got {data_range}")
    mse = float(((a - b) ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(data_range**2 / mse))


def _gauss_kernel() -> np.ndarray:
    x = np.arange(_WIN, dtype=np.float64) - (_WIN - 1) / 2
    k = np.exp(-(x**2) / (2.0 * _SIGMA**2))
    return k / k.sum()


def _windowed(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    out = correlate1d(img, k, axis=0, mode="constant")
    out = correlate1d(out, k, axis=1, mode="constant")
    r = _WIN // 2
    return out[r:-r, r:-r]


def ssim(a, b, data_range: float = 1.0) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5).

    Uses K1=0.01, K2=0.03, biased weighted moments, and averages over
    the valid (fully covered) window positions only.
    """
    a, b = _pair(a, b)
    if a.ndim == 3:
        if a.shape[0] != 1:
            raise ShapeMismatch(f"expected a single channel, got {a.shape}")
        a, b = a[0], b[0]
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2D image, got shape {a.shape}")
    if min(a.shape) < _WIN:
        raise ImageTooSmall(f"image {a.shape} smaller than the {_WIN}x{_WIN} window")
    k = _gauss_kernel()
    mu_a = _windowed(a, k)
    mu_b = _windowed(b, k)
    var_a = _windowed(a * a, k) - mu_a * mu_a
    var_b = _windowed(b * b, k) - mu_b * mu_b
    cov = _windowed(a * b, k) - mu_a * mu_b
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


def _agg(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "std": None}
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def evaluate(
    ckpt: Checkpoint,
    manifest: DatasetManifest,
    k: int | None = None,
    predict_fn=None,
) -> dict:
    """Metric report over a manifest: per-sample values plus aggregates.

    predict_fn(sample) may replace checkpoint inference (testing hook).
    Infinite PSNR values are excluded from the aggregate and counted.
    """
    from .training import Runtime, infer

    phase = ckpt.config["target_phase"]
    if predict_fn is None:
        rt = Runtime(ckpt)
        predict_fn = lambda s: infer(rt, s.x, s.roi, k)  # noqa: E731
    per_sample = []
    psnrs, ssims, maes = [], [], []
    inf_count = 0
    for sid in manifest.ids:
        s = load_sample(manifest, sid)
        y_hat = predict_fn(s)
        y = s.target(phase)
        p = psnr(y_hat, y)
        ss = ssim(y_hat, y)
        m = mae(y_hat, y)
        if np.isinf(p):
            inf_count += 1
            p_rec = None
        else:
            p_rec = p
            psnrs.append(p)
        ssims.append(ss)
        maes.append(m)
        per_sample.append({"id": sid, "psnr": p_rec, "ssim": ss, "mae": m})
    report = {
        "phase": phase,
        "n": len(manifest),
        "psnr": {**_agg(psnrs), "inf_count": inf_count},
        "ssim": _agg(ssims),
        "mae": _agg(maes),
        "per_sample": per_sample,
        "config": ckpt.config,
    }
    return report
