"""Synthetic multimodal phantom generator.

Each sample is an elliptical anatomy region on a dark background, imaged
in three input modalities (T2W, ADC, T1-pre) plus early/late response
targets. One to three elliptical lesions sit inside the ROI; lesions are
visible as reduced ADC (restricted diffusion) and as added contrast in
the response targets (strong wash-in early, partial wash-out late). The
responses also enhance outside the ROI with a capsular rim and a few
vessel-like blobs, both co-visible in the structural inputs, so realism
pressure is spread over the whole image rather than the lesions alone.
The anatomy boundary is shared across all modalities of a sample.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion, gaussian_filter

from .aadt import write_tensor_file
from .data import DatasetManifest, centered_roi
from .errors import InvalidGeometry

_SMOOTH = 0.6     # edge softening, in pixels
_NOISE = 0.012    # additive gaussian noise sigma


def _ellipse(h, w, cy, cx, ry, rx, theta):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    c, s = np.cos(theta), np.sin(theta)
    u = c * dy + s * dx
    v = -s * dy + c * dx
    return ((u / ry) ** 2 + (v / rx) ** 2 <= 1.0).astype(np.float64)


def _texture(rng, h, w, scale):
    f = gaussian_filter(rng.normal(0.0, 1.0, (h, w)), 3.0)
    sd = f.std()
    return f * (scale / sd) if sd > 0 else f


def _make_sample(rng, h, w, roi):
    anatomy = _ellipse(
        h,
        w,
        h / 2 + rng.uniform(-0.03, 0.03) * h,
        w / 2 + rng.uniform(-0.03, 0.03) * w,
        rng.uniform(0.36, 0.44) * h,
        rng.uniform(0.36, 0.44) * w,
        rng.uniform(0.0, np.pi),
    )

    lesion = np.zeros((h, w), dtype=np.float64)
    for _ in range(int(rng.integers(1, 4))):
        ry = rng.uniform(0.11, 0.17) * min(roi.height, roi.width)
        rx = rng.uniform(0.11, 0.17) * min(roi.height, roi.width)
        m = max(ry, rx) + 1.5
        cy = rng.uniform(roi.top + m, roi.top + roi.height - m)
        cx = rng.uniform(roi.left + m, roi.left + roi.width - m)
        lesion = np.maximum(lesion, _ellipse(h, w, cy, cx, ry, rx, rng.uniform(0.0, np.pi)))
    lesion *= anatomy

    # capsular rim: a thin band along the anatomy boundary
    hard = anatomy > 0.5
    rim = (binary_dilation(hard, iterations=1) & ~binary_erosion(hard, iterations=2))
    rim = rim.astype(np.float64)

    # vessel-like blobs outside the ROI, co-visible in T2W
    vessels = np.zeros((h, w), dtype=np.float64)
    for _ in range(int(rng.integers(2, 5))):
        for _attempt in range(20):
            ry = rng.uniform(1.5, 3.0)
            rx = rng.uniform(1.5, 3.0)
            cy = rng.uniform(2, h - 2)
            cx = rng.uniform(2, w - 2)
            inside_roi = (
                roi.top - 3 <= cy <= roi.top + roi.height + 3
                and roi.left - 3 <= cx <= roi.left + roi.width + 3
            )
            if inside_roi:
                continue
            blob = _ellipse(h, w, cy, cx, ry, rx, rng.uniform(0.0, np.pi)) * anatomy
            if blob.sum() >= 4:
                vessels = np.maximum(vessels, blob)
                break

    def channel(bg, tissue, extras=()):
        img = bg + (tissue - bg) * anatomy + _texture(rng, h, w, 0.03) * anatomy
        for delta, support in extras:
            img = img + delta * support
        img = gaussian_filter(img, _SMOOTH)
        img = img + rng.normal(0.0, _NOISE, (h, w))
        return np.clip(img, 0.0, 1.0).astype(np.float32)[None]

    delta_adc = rng.uniform(0.28, 0.38)
    delta_early = rng.uniform(0.32, 0.40)
    delta_late = delta_early * rng.uniform(0.45, 0.60)
    delta_rim = rng.uniform(0.15, 0.22)
    delta_vessel = rng.uniform(0.20, 0.28)
    tissue_resp = rng.uniform(0.32, 0.40)

    t2w = channel(
        rng.uniform(0.05, 0.10), rng.uniform(0.55, 0.65),
        [(rng.uniform(0.10, 0.16), vessels)],
    )
    adc = channel(rng.uniform(0.05, 0.10), rng.uniform(0.65, 0.75), [(-delta_adc, lesion)])
    t1pre = channel(rng.uniform(0.05, 0.10), rng.uniform(0.45, 0.55))
    bg_resp = rng.uniform(0.05, 0.10)
    early = channel(
        bg_resp, tissue_resp,
        [(delta_early, lesion), (delta_rim, rim), (delta_vessel, vessels)],
    )
    late = channel(
        bg_resp, tissue_resp,
        [(delta_late, lesion), (delta_rim, rim), (delta_vessel, vessels)],
    )
    mask = lesion.astype(np.float32)[None]
    return t2w, adc, t1pre, early, late, mask


def generate_phantom_dataset(
    out_dir: str | Path,
    seed: int,
    n: int,
    hw: tuple[int, int],
    roi_hw: tuple[int, int],
    split: str = "train",
) -> DatasetManifest:
    """Write n phantom samples plus a manifest.json under out_dir.

    Deterministic: the same arguments always produce bit-identical
    files. Returns the loaded manifest.
    """
    h, w = hw
    roi_h, roi_w = roi_hw
    if h < 16 or w < 16:
        raise InvalidGeometry(f"image {h}x{w} too small, need at least 16x16")
    if not (1 <= roi_h <= h and 1 <= roi_w <= w):
        raise InvalidGeometry(f"roi {roi_h}x{roi_w} does not fit in {h}x{w}")
    if roi_h < 8 or roi_w < 8:
        raise InvalidGeometry(f"roi {roi_h}x{roi_w} too small, need at least 8x8")
    if n < 1:
        raise InvalidGeometry(f"need at least one sample, got n={n}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roi = centered_roi(h, w, roi_h, roi_w)

    records = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        t2w, adc, t1pre, early, late, mask = _make_sample(rng, h, w, roi)
        sid = f"{split}_{i:04d}"
        rec = {"id": sid, "roi": roi.as_list()}
        for key, arr in (
            ("t2w", t2w),
            ("adc", adc),
            ("t1pre", t1pre),
            ("early", early),
            ("late", late),
            ("lesion_mask", mask),
        ):
            rel = f"{sid}_{key}.aadt"
            write_tensor_file(arr, out / rel)
            rec[key] = rel
        records.append(rec)

    doc = {
        "geometry": {"h": h, "w": w, "roi_h": roi_h, "roi_w": roi_w},
        "samples": records,
        "split": split,
    }
    (out / "manifest.json").write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":"))
    )
    return DatasetManifest(geometry=doc["geometry"], samples=records, split=split, root=out)
