"""Binary file format for complex 3-D tensors (echo cubes, radar cubes).

Layout: 16-byte header = 4-byte magic ``CXT1`` + three little-endian uint32
dimensions, followed by the row-major complex entries as interleaved
little-endian float64 (re, im) pairs.
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"CXT1"
_HEADER = struct.Struct("<4s3I")


def write_tensor(path, data: np.ndarray) -> None:
    if data.ndim != 3:
        raise ValueError("tensor file format holds 3-D tensors")
    arr = np.ascontiguousarray(data, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, d0, d1, d2 = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        payload = fh.read()
    expected = d0 * d1 * d2 * 16
    if len(payload) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    flat = np.frombuffer(payload, dtype="<c16")
    return flat.reshape(d0, d1, d2).astype(np.complex128)
