"""Shape-tagged, checksummed binary container for float64 arrays.

Layout (all little-endian):

    magic   4 bytes  b"RSKD"
    version u16      currently 1
    dtype   u8       1 = float64 (the only supported tag)
    rank    u8
    dims    rank * u64
    payload row-major float64 values
    meta    u32 length + UTF-8 JSON (auxiliary metadata, may be empty)
    crc     u32 CRC32 of every preceding byte
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"RSKD"
VERSION = 1
_DTYPE_F64 = 1
_MAX_RANK = 8


def write_array(path: str | Path, arr: np.ndarray, meta: dict | None = None) -> None:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    if arr.ndim > _MAX_RANK:
        raise FormatError(f"rank {arr.ndim} exceeds limit {_MAX_RANK}")
    header = MAGIC + struct.pack("<HBB", VERSION, _DTYPE_F64, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    body = header + arr.tobytes(order="C") + struct.pack("<I", len(meta_bytes)) + meta_bytes
    crc = zlib.crc32(body) & 0xFFFFFFFF
    Path(path).write_bytes(body + struct.pack("<I", crc))


def read_array(path: str | Path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated file")
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise FormatError(f"{path}: checksum mismatch")
    version, dtype_tag, rank = struct.unpack("<HBB", raw[4:8])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype_tag != _DTYPE_F64:
        raise FormatError(f"{path}: unsupported dtype tag {dtype_tag}")
    if rank > _MAX_RANK:
        raise FormatError(f"{path}: rank {rank} exceeds limit {_MAX_RANK}")
    offset = 8 + 8 * rank
    if len(raw) < offset + 8:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack(f"<{rank}Q", raw[8:offset])
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload_end = offset + 8 * count
    if payload_end + 8 > len(raw):
        raise FormatError(f"{path}: truncated payload")
    arr = np.frombuffer(raw[offset:payload_end], dtype="<f8").reshape(dims).copy()
    meta_len = struct.unpack("<I", raw[payload_end:payload_end + 4])[0]
    meta_end = payload_end + 4 + meta_len
    if meta_end + 4 != len(raw):
        raise FormatError(f"{path}: inconsistent section lengths")
    try:
        meta = json.loads(raw[payload_end + 4:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad metadata block: {exc}") from exc
    return arr, meta
