"""Named-tensor container format for models and encoders.

Layout (all integers little-endian):

    magic   4 bytes  b"STSC"
    version u32      = 1
    count   u32      number of tensors
    per tensor:
        name_len u16, name UTF-8
        rank     u8,  dims u32 each
        data     float32 little-endian, C order
    crc32   u32      of every preceding byte

Tensors are written in sorted-name order so identical contents always
produce identical bytes; save -> load -> save round-trips exactly.
"""

from __future__ import annotations

import struct
import zlib
from typing import Mapping

import numpy as np

from .tensor import Tensor

__all__ = [
    "MAGIC",
    "VERSION",
    "CheckpointError",
    "CheckpointMagicError",
    "CheckpointVersionError",
    "CheckpointCrcError",
    "CheckpointTruncatedError",
    "CheckpointKeyError",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_crc",
]

MAGIC = b"STSC"
VERSION = 1


class CheckpointError(ValueError):
    """Base error for malformed or unreadable checkpoints."""


class CheckpointMagicError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCrcError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointKeyError(CheckpointError):
    """A required tensor is missing or has the wrong shape."""


def _coerce(arr) -> np.ndarray:
    # note: no ascontiguousarray here, it would promote rank-0 to rank-1;
    # tobytes() already emits C order for any layout
    if isinstance(arr, Tensor):
        arr = arr.data
    return np.asarray(arr, dtype=np.float64).astype("<f4")


def serialize_checkpoint(tensors: Mapping[str, "np.ndarray | Tensor"]) -> bytes:
    """Encode a name->array map; data is stored as little-endian float32."""
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CheckpointError(f"tensor name too long: {name!r}")
        arr = _coerce(tensors[name])
        if arr.ndim > 0xFF:
            raise CheckpointError(f"tensor rank too large for {name!r}: {arr.ndim}")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            parts.append(struct.pack("<I", d))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_checkpoint(tensors: Mapping[str, "np.ndarray | Tensor"], path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_checkpoint(tensors))


def parse_checkpoint(blob: bytes) -> dict[str, np.ndarray]:
    """Decode checkpoint bytes into a name -> float32 array map."""
    view = memoryview(blob)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointTruncatedError(f"unexpected end of file while reading {what}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    magic = bytes(take(4, "magic"))
    if magic != MAGIC:
        raise CheckpointMagicError(f"not a checkpoint: bad magic {magic!r}")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise CheckpointVersionError(f"unsupported version {version} (expected {VERSION})")
    (count,) = struct.unpack("<I", take(4, "tensor count"))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = bytes(take(name_len, "name")).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1, f"rank of {name!r}"))
        dims = tuple(
            struct.unpack("<I", take(4, f"dims of {name!r}"))[0] for _ in range(rank)
        )
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = take(4 * size, f"data of {name!r}")
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(dims).astype(np.float32)
    stored = struct.unpack("<I", take(4, "crc32"))[0]
    if pos != len(view):
        raise CheckpointError(f"{len(view) - pos} trailing bytes after checkpoint")
    actual = zlib.crc32(view[: pos - 4]) & 0xFFFFFFFF
    if stored != actual:
        raise CheckpointCrcError(
            f"crc mismatch: stored {stored:08x}, computed {actual:08x}"
        )
    return tensors


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    return parse_checkpoint(blob)


def checkpoint_crc(path: str) -> str:
    """The file's verified trailing CRC32, as 8 hex digits."""
    with open(path, "rb") as fh:
        blob = fh.read()
    parse_checkpoint(blob)
    return f"{struct.unpack('<I', blob[-4:])[0]:08x}"
