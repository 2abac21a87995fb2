"""
Checkpoint file format

    b"SPHL" | u32 format version | u32 manifest length | manifest (UTF-8 JSON)
    | little-endian float64 arrays in manifest order

The manifest lists parameter names and shapes plus a free-form "meta" object
(step counters, model sizes, distribution triples). Round trips are bit-exact.
"""

import json
import os
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import CheckpointFormatError

MAGIC = b"SPHL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII")


def encode_checkpoint(arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> bytes:
    names = sorted(arrays)
    manifest = {
        "params": [{"name": n, "shape": list(np.shape(arrays[n]))} for n in names],
        "meta": meta or {},
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(manifest_bytes)), manifest_bytes]
    for n in names:
        chunks.append(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_checkpoint(data: bytes, path: str = "<bytes>") -> tuple[dict[str, np.ndarray], dict]:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError(path, "truncated header")
    magic, version, manifest_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(path, f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(path, f"unsupported format version {version}")

    offset = _HEADER.size
    try:
        manifest = json.loads(data[offset : offset + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(path, f"unreadable manifest: {e}") from e
    offset += manifest_len

    arrays = {}
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointFormatError(path, f"truncated array {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise CheckpointFormatError(path, f"{len(data) - offset} trailing bytes")
    return arrays, manifest.get("meta", {})


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> Path:
    """Write atomically: a reader never sees a partially written file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".partial")
    partial.write_bytes(encode_checkpoint(arrays, meta))
    os.replace(partial, path)
    return path


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(str(path), f"cannot read: {e}") from e
    return decode_checkpoint(data, str(path))
