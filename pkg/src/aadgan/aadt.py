"""Binary tensor file I/O (AADT format).

Layout, all little-endian: magic b"AADT", version u32 (=1), ndim u32,
one u32 per dimension, then the payload as float32 values in row-major
order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, DimMismatch, IoFailure

MAGIC = b"AADT"
VERSION = 1
_MAX_NDIM = 8


def write_tensor_file(t: np.ndarray, path: str | Path) -> None:
    """Write a tensor to ``path`` in the AADT format.

    Values are stored as float32; the array is converted if needed.
    """
    # np.asarray, not ascontiguousarray: the latter promotes 0-d to 1-d,
    # and tobytes() already serialises row-major for any layout.
    arr = np.asarray(t, dtype=np.float32)
    header = MAGIC + struct.pack("<II", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(arr.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_tensor_file(path: str | Path) -> np.ndarray:
    """Read an AADT tensor file and return a float32 array.

    Raises BadMagic for a wrong magic/version, DimMismatch when the
    payload length disagrees with the declared dims, IoFailure on OS
    errors.
    """
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e

    if len(blob) < 12 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: not an AADT file")
    version, ndim = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported AADT version {version}")
    if ndim > _MAX_NDIM:
        raise DimMismatch(f"{path}: implausible ndim {ndim}")
    offset = 12
    if len(blob) < offset + 4 * ndim:
        raise DimMismatch(f"{path}: truncated dimension table")
    dims = struct.unpack_from(f"<{ndim}I", blob, offset)
    offset += 4 * ndim
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = blob[offset:]
    if len(payload) != 4 * count:
        raise DimMismatch(
            f"{path}: payload holds {len(payload) // 4} values, "
            f"header declares {count}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return np.array(arr, dtype=np.float32)  # own, writable copy
