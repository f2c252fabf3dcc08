"""Single-file binary cache: magic-tagged, versioned, config-hash guarded.

Layout: magic ``SEPX`` + 4-byte kind tag + u32 format version + u32 JSON
metadata length + metadata + u32 array count + per array (u16 name length,
name, u16 dtype length, dtype string, u8 ndim, u64 dims..., u64 byte length,
raw C-order bytes).  Readers refuse wrong magic, kind, version, or config
hash; nothing is ever silently reused.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import StaleCacheError

MAGIC = b"SEPX"
FORMAT_VERSION = 1

KIND_CANDLES = "CNDL"
KIND_FEATURES = "FMTX"
KIND_MODEL = "KNNM"


def write_cache(path, kind: str, arrays: dict[str, np.ndarray], meta: dict) -> None:
    if len(kind) != 4:
        raise ValueError(f"kind must be 4 characters, got {kind!r}")
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks = [MAGIC, kind.encode("ascii"),
              struct.pack("<II", FORMAT_VERSION, len(meta_bytes)), meta_bytes,
              struct.pack("<I", len(arrays))]
    for name, array in arrays.items():
        array = np.ascontiguousarray(array)
        name_b = name.encode("utf-8")
        dtype_b = array.dtype.str.encode("ascii")
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<H", len(dtype_b)))
        chunks.append(dtype_b)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        raw = array.tobytes()
        chunks.append(struct.pack("<Q", len(raw)))
        chunks.append(raw)
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.path = path
        self.at = 0

    def take(self, count: int) -> bytes:
        if self.at + count > len(self.blob):
            raise StaleCacheError(f"cache {self.path} is truncated")
        out = self.blob[self.at:self.at + count]
        self.at += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_cache(path, kind: str, expect_config_hash: str | None = None
               ) -> tuple[dict[str, np.ndarray], dict]:
    """Load arrays + metadata, refusing anything stale or mismatched."""
    path = Path(path)
    if not path.exists():
        raise StaleCacheError(f"cache file not found: {path}")
    r = _Reader(path.read_bytes(), path)

    if r.take(4) != MAGIC:
        raise StaleCacheError(f"{path} is not a cache file (bad magic)")
    found_kind = r.take(4).decode("ascii", errors="replace")
    if found_kind != kind:
        raise StaleCacheError(f"{path} holds {found_kind!r}, expected {kind!r}")
    version, meta_len = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise StaleCacheError(
            f"{path} uses cache format v{version}, this build reads v{FORMAT_VERSION}")
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    if expect_config_hash is not None and meta.get("config_hash") != expect_config_hash:
        raise StaleCacheError(
            f"{path} was built for config hash {meta.get('config_hash')!r}, "
            f"current config hash is {expect_config_hash!r}; "
            f"rebuild the artifact or restore the matching config"
        )

    (n_arrays,) = r.unpack("<I")
    arrays = {}
    for _ in range(n_arrays):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (dtype_len,) = r.unpack("<H")
        dtype = np.dtype(r.take(dtype_len).decode("ascii"))
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q")
        (nbytes,) = r.unpack("<Q")
        data = np.frombuffer(r.take(nbytes), dtype=dtype)
        arrays[name] = data.reshape(shape).copy()
    return arrays, meta
