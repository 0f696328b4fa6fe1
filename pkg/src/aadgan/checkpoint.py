"""Checkpoint container (AADC format).

Layout, little-endian throughout: magic b"AADC", version u32 (=1), a
length-prefixed UTF-8 canonical-JSON header, then a table of named
arrays as (name_len u32, name, ndim u32, dims u32 each, float32
payload). The header document holds the config echo plus the step
counter and a metrics snapshot.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, DimMismatch, IoFailure

MAGIC = b"AADC"
VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class Checkpoint:
    """Config echo plus every array needed to resume or run a model."""

    config: dict
    step: int = 0
    metrics: dict = field(default_factory=dict)
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def group(self, prefix: str) -> dict[str, np.ndarray]:
        """Arrays under ``prefix/``, keyed by the remainder of the name."""
        cut = len(prefix) + 1
        return {k[cut:]: v for k, v in self.arrays.items() if k.startswith(prefix + "/")}


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    header = canonical_json(
        {"config": ckpt.config, "step": ckpt.step, "metrics": ckpt.metrics}
    ).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", VERSION))
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            for name in sorted(ckpt.arrays):
                arr = np.ascontiguousarray(ckpt.arrays[name], dtype=np.float32)
                nb = name.encode("utf-8")
                f.write(struct.pack("<I", len(nb)))
                f.write(nb)
                f.write(struct.pack("<I", arr.ndim))
                if arr.ndim:
                    f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                f.write(arr.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read checkpoint {path}: {e}") from e
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: not an AADC file")
    version, hlen = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported AADC version {version}")
    off = 12
    if len(blob) < off + hlen:
        raise DimMismatch(f"{path}: truncated header")
    doc = json.loads(blob[off : off + hlen].decode("utf-8"))
    off += hlen
    arrays: dict[str, np.ndarray] = {}
    while off < len(blob):
        if len(blob) < off + 4:
            raise DimMismatch(f"{path}: truncated entry header")
        (nlen,) = struct.unpack_from("<I", blob, off)
        off += 4
        if len(blob) < off + nlen + 4:
            raise DimMismatch(f"{path}: truncated entry header")
        name = blob[off : off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<I", blob, off)
        off += 4
        if ndim > 8 or len(blob) < off + 4 * ndim:
            raise DimMismatch(f"{path}: array {name!r} dimension table truncated")
        dims = struct.unpack_from(f"<{ndim}I", blob, off) if ndim else ()
        off += 4 * ndim
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        end = off + 4 * count
        if len(blob) < end:
            raise DimMismatch(f"{path}: array {name!r} payload truncated")
        arrays[name] = np.array(
            np.frombuffer(blob[off:end], dtype="<f4").reshape(dims), dtype=np.float32
        )
        off = end
    return Checkpoint(
        config=doc["config"], step=doc["step"], metrics=doc["metrics"], arrays=arrays
    )
