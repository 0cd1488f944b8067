"""Versioned binary container for named float64 tensors.

Byte layout (all integers little-endian)::

    offset 0   8 bytes   magic b"STNLGCK\\0"
    offset 8   uint32    format version (currently 1)
    offset 12  uint64    header length n
    offset 20  n bytes   UTF-8 JSON header:
                         {"tensors": [{"name", "shape", "offset", "count"}, ...], "meta": {...}}
                         offsets count float64 elements from the start of the payload
    20+n       8*N bytes payload, float64 little-endian, C order, tensors back to back
    end-4      uint32    CRC-32 of every preceding byte

Loading validates magic, version, sizes and the checksum before returning
anything, so a damaged file never yields a partial model.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"STNLGCK\x00"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def to_bytes(tensors: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    manifest, chunks, offset = [], [], 0
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr, dtype="<f8")
        manifest.append({"name": name, "shape": list(a.shape), "offset": offset, "count": int(a.size)})
        chunks.append(a.tobytes())
        offset += a.size
    header = json.dumps({"tensors": manifest, "meta": meta or {}}, sort_keys=True).encode("utf-8")
    body = _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(blob: bytes):
    if len(blob) < _PREFIX.size + 4:
        raise CheckpointError("checkpoint truncated")
    magic, version, hlen = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != crc:
        raise CheckpointError("checkpoint checksum mismatch (corrupted or truncated)")
    start = _PREFIX.size
    try:
        header = json.loads(blob[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint header: {e}") from None
    payload = np.frombuffer(blob, dtype="<f8", count=(len(blob) - 4 - start - hlen) // 8, offset=start + hlen)
    tensors = {}
    for entry in header["tensors"]:
        lo, n = entry["offset"], entry["count"]
        if lo + n > payload.size or int(np.prod(entry["shape"], dtype=np.int64)) != n:
            raise CheckpointError(f"tensor {entry['name']!r} out of bounds")
        tensors[entry["name"]] = payload[lo : lo + n].astype(np.float64).reshape(entry["shape"])
    return tensors, header.get("meta", {})


def save(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(tensors, meta))
    os.replace(tmp, path)


def load(path):
    """Return ``(tensors, meta)``."""
    return from_bytes(Path(path).read_bytes())
