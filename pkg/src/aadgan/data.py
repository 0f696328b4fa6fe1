"""Dataset types, normalization, ROI handling, and deterministic batching."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .aadt import read_tensor_file
from .errors import (
    DimMismatch,
    EmptyDataset,
    InvalidConfig,
    NonFiniteInput,
    RoiOutOfBounds,
    ShapeMismatch,
)

CHANNEL_ORDER = ("t2w", "adc", "t1pre")
ADC_CHANNEL = 1


@dataclass(frozen=True)
class RoiRect:
    """Axis-aligned rectangle given as (top, left, height, width) in pixels."""

    top: int
    left: int
    height: int
    width: int

    def as_list(self) -> list[int]:
        return [self.top, self.left, self.height, self.width]


def centered_roi(h: int, w: int, roi_h: int, roi_w: int) -> RoiRect:
    """The default ROI: a centered roi_h x roi_w rectangle."""
    return RoiRect((h - roi_h) // 2, (w - roi_w) // 2, roi_h, roi_w)


@dataclass
class MultimodalSample:
    """One paired sample: 3-channel input, two response targets, ROI."""

    id: str
    x: np.ndarray          # (3, H, W) float32, channels (T2W, ADC, T1-pre)
    y_early: np.ndarray    # (1, H, W) float32
    y_late: np.ndarray     # (1, H, W) float32
    roi: RoiRect
    lesion_mask: np.ndarray | None = None  # (1, H, W) binary, optional

    def target(self, phase: str) -> np.ndarray:
        if phase == "early":
            return self.y_early
        if phase == "late":
            return self.y_late
        raise InvalidConfig(f"unknown target phase {phase!r}")


@dataclass
class DatasetManifest:
    """Index of a dataset on disk plus its shared geometry."""

    geometry: dict            # {"h","w","roi_h","roi_w"}
    samples: list[dict]       # manifest records with file paths
    split: str
    root: Path = field(default_factory=Path)

    @property
    def ids(self) -> list[str]:
        return [s["id"] for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)

    def record(self, sample_id: str) -> dict:
        for s in self.samples:
            if s["id"] == sample_id:
                return s
        raise KeyError(sample_id)


def ensure_finite(arr: np.ndarray, name: str = "input") -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteInput(f"{name} contains non-finite values")


def normalize_volume(t: np.ndarray) -> np.ndarray:
    """Min-max scale each channel to [0, 1]; constant channels map to 0.5."""
    arr = np.asarray(t, dtype=np.float32)
    ensure_finite(arr, "tensor")
    if arr.ndim != 3:
        raise ShapeMismatch(f"expected (C, H, W), got shape {arr.shape}")
    out = np.empty_like(arr)
    for c in range(arr.shape[0]):
        lo = float(arr[c].min())
        hi = float(arr[c].max())
        if hi > lo:
            out[c] = (arr[c] - lo) / (hi - lo)
        else:
            out[c] = 0.5
    return out


def extract_roi(t: np.ndarray, roi: RoiRect) -> np.ndarray:
    """Copy the ROI crop out of a (C, H, W) tensor."""
    arr = np.asarray(t)
    if arr.ndim != 3:
        raise ShapeMismatch(f"expected (C, H, W), got shape {arr.shape}")
    _, h, w = arr.shape
    check_roi(roi, h, w)
    return arr[:, roi.top : roi.top + roi.height, roi.left : roi.left + roi.width].copy()


def check_roi(roi: RoiRect, h: int, w: int) -> None:
    if roi.height < 1 or roi.width < 1:
        raise RoiOutOfBounds(f"roi {roi} has empty extent")
    if roi.top < 0 or roi.left < 0 or roi.top + roi.height > h or roi.left + roi.width > w:
        raise RoiOutOfBounds(f"roi {roi} exceeds image {h}x{w}")


def make_batches(
    manifest: DatasetManifest | Sequence[str],
    batch_size: int,
    seed: int,
    shuffle: bool = True,
    epoch: int = 0,
) -> list[list[str]]:
    """Partition sample ids into batches, deterministic in (seed, epoch)."""
    if batch_size < 1:
        raise InvalidConfig(f"batch_size must be >= 1, got {batch_size}")
    ids = list(manifest.ids) if isinstance(manifest, DatasetManifest) else list(manifest)
    if not ids:
        raise EmptyDataset("no samples to batch")
    if shuffle:
        perm = np.random.default_rng([seed, epoch]).permutation(len(ids))
        ids = [ids[int(i)] for i in perm]
    return [ids[i : i + batch_size] for i in range(0, len(ids), batch_size)]


def apply_adc_mode(x: np.ndarray, adc: str) -> np.ndarray:
    """Return x unchanged ("on") or with the ADC channel mean-filled ("off")."""
    if adc == "on":
        return x
    if adc == "off":
        out = x.copy()
        out[ADC_CHANNEL] = out[ADC_CHANNEL].mean()
        return out
    raise InvalidConfig(f"adc mode must be 'on' or 'off', got {adc!r}")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read and structurally validate a manifest JSON document."""
    from .schemas import validate_manifest

    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise InvalidConfig(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"manifest {path} is not valid JSON: {e}") from e
    validate_manifest(doc)
    ids = [s["id"] for s in doc["samples"]]
    if len(set(ids)) != len(ids):
        raise InvalidConfig(f"manifest {path} has duplicate sample ids")
    return DatasetManifest(
        geometry=doc["geometry"],
        samples=doc["samples"],
        split=doc["split"],
        root=path.parent,
    )


def _read_channel(manifest: DatasetManifest, rel: str, h: int, w: int) -> np.ndarray:
    arr = read_tensor_file(manifest.root / rel)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape != (1, h, w):
        raise DimMismatch(f"{rel}: expected (1, {h}, {w}), got {arr.shape}")
    return arr


def load_sample(
    manifest: DatasetManifest, sample_id: str, normalize: bool = True
) -> MultimodalSample:
    """Load one sample's tensors from disk, normalizing unless told not to."""
    rec = manifest.record(sample_id)
    g = manifest.geometry
    h, w = g["h"], g["w"]
    x = np.concatenate([_read_channel(manifest, rec[k], h, w) for k in CHANNEL_ORDER])
    y_early = _read_channel(manifest, rec["early"], h, w)
    y_late = _read_channel(manifest, rec["late"], h, w)
    if "roi" in rec and rec["roi"] is not None:
        roi = RoiRect(*rec["roi"])
    else:
        roi = centered_roi(h, w, g["roi_h"], g["roi_w"])
    check_roi(roi, h, w)
    mask = None
    if rec.get("lesion_mask"):
        mask = _read_channel(manifest, rec["lesion_mask"], h, w)
    if normalize:
        x = normalize_volume(x)
        y_early = normalize_volume(y_early)
        y_late = normalize_volume(y_late)
    return MultimodalSample(sample_id, x, y_early, y_late, roi, mask)


def load_samples(
    manifest: DatasetManifest, ids: Iterable[str] | None = None, normalize: bool = True
) -> list[MultimodalSample]:
    ids = manifest.ids if ids is None else list(ids)
    return [load_sample(manifest, i, normalize=normalize) for i in ids]
