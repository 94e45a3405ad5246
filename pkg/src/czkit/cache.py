"""Binary cache for assembled operator matrices.

Layout (little-endian): magic ``CZK1``, uint32 format version, 32-byte
SHA-256 of the assembly spec, uint64 record count, then records
``(j_I, k_I, j_J, k_J)`` as int64 followed by the float64 value, and finally
a 32-byte SHA-256 of everything before it.  Files are written to a temporary
name and renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"CZK1"
VERSION = 1
RECORD = np.dtype([("jI", "<i8"), ("kI", "<i8"), ("jJ", "<i8"), ("kJ", "<i8"), ("v", "<f8")])


class CacheError(RuntimeError):
    pass


def spec_hash(spec: dict) -> bytes:
    blob = json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).digest()


def cache_path(cache_dir: str | os.PathLike, spec: dict) -> Path:
    return Path(cache_dir) / f"{spec_hash(spec).hex()[:32]}.czk"


def write_records(path: str | os.PathLike, spec: dict, records: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = np.asarray(records, dtype=RECORD)
    body = MAGIC + struct.pack("<I", VERSION) + spec_hash(spec) + struct.pack("<Q", len(records)) + records.tobytes()
    blob = body + hashlib.sha256(body).digest()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".czk-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_records(path: str | os.PathLike, spec: dict) -> np.ndarray:
    """Records of a cache file, validated against ``spec``; raises CacheError otherwise."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 + 4 + 32 + 8 + 32 or blob[:4] != MAGIC:
        raise CacheError("not a cache file")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CacheError("checksum mismatch")
    (version,) = struct.unpack("<I", body[4:8])
    if version != VERSION:
        raise CacheError(f"unsupported cache version {version}")
    if body[8:40] != spec_hash(spec):
        raise CacheError("cache was built for a different spec")
    (count,) = struct.unpack("<Q", body[40:48])
    payload = body[48:]
    if len(payload) != count * RECORD.itemsize:
        raise CacheError("truncated record block")
    return np.frombuffer(payload, dtype=RECORD).copy()
