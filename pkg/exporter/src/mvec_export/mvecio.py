"""MVEC binary format: little-endian header (magic "MVEC", u32 version,
u32 dim, u32 count) followed by count entries of u32 key length, UTF-8
key bytes, and dim float32 values. Keys are written sorted so identical
tables always produce identical bytes."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MVEC_MAGIC = b"MVEC"
MVEC_VERSION = 1


class MvecFormatError(ValueError):
    pass


def write_mvec(table: dict, path) -> None:
    keys = sorted(table)
    dim = None
    for k in keys:
        vec = np.asarray(table[k], dtype=np.float32)
        if vec.ndim != 1:
            raise MvecFormatError(f"vector for '{k}' is not 1-d")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise MvecFormatError(
                f"vector for '{k}' has dim {vec.shape[0]}, expected {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise MvecFormatError(f"vector for '{k}' has non-finite entries")
    if dim is None:
        dim = 0
    with open(path, "wb") as fh:
        fh.write(MVEC_MAGIC)
        fh.write(struct.pack("<III", MVEC_VERSION, dim, len(keys)))
        for k in keys:
            kb = k.encode("utf-8")
            fh.write(struct.pack("<I", len(kb)))
            fh.write(kb)
            fh.write(np.asarray(table[k], dtype="<f4").tobytes())


def read_mvec(path) -> dict:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MVEC_MAGIC:
        raise MvecFormatError(f"{path}: bad magic, not an MVEC file")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != MVEC_VERSION:
        raise MvecFormatError(f"{path}: unsupported version {version}")
    table = {}
    offset = 16
    for i in range(count):
        if offset + 4 > len(data):
            raise MvecFormatError(f"{path}: truncated at entry {i}")
        (klen,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + klen + 4 * dim > len(data):
            raise MvecFormatError(f"{path}: truncated at entry {i}")
        key = data[offset:offset + klen].decode("utf-8")
        offset += klen
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        if key in table:
            raise MvecFormatError(f"{path}: duplicate key '{key}'")
        if not np.all(np.isfinite(vec)):
            raise MvecFormatError(f"{path}: non-finite values under '{key}'")
        table[key] = vec.astype(np.float64)
    return table
