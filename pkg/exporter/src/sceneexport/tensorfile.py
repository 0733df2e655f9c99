"""Minimal writer/reader for the shared binary tensor container.

Layout: magic ``VGT1``, u16 version (1), u8 dtype code (0 = float32,
1 = float64), u8 ndim, ndim little-endian u64 extents, then row-major
little-endian scalars. Deliberately tiny: the format is the contract
between this exporter and the analysis toolkit, not a shared library.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"VGT1"
VERSION = 1
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def write_tensor(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _CODES:
        raise ValueError(f"only float32/float64 tensors, got {arr.dtype}")
    if arr.ndim < 1 or any(d < 1 for d in arr.shape):
        raise ValueError(f"every extent must be >= 1, got shape {arr.shape}")
    header = MAGIC + struct.pack("<HBB", VERSION, _CODES[arr.dtype], arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a tensor container")
    version, code, ndim = struct.unpack_from("<HBB", blob, 4)
    if version != VERSION or code not in _DTYPES or ndim < 1:
        raise ValueError(f"{path}: unsupported header")
    dims = struct.unpack_from(f"<{ndim}Q", blob, 8)
    dtype = _DTYPES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = blob[8 + 8 * ndim :]
    if len(payload) != expected:
        raise ValueError(f"{path}: payload size mismatch")
    arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return arr.astype(dtype.newbyteorder("="), copy=True)
