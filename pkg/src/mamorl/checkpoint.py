"""Binary checkpoint format.

Layout::

    MAMORL-CKPT-1\n
    <one line of JSON: {"meta": {...}, "tensors": [{"key", "shape", "offset"}, ...]}>\n
    <concatenated little-endian float64 payload>

Offsets count float64 elements from the start of the payload.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

MAGIC = b"MAMORL-CKPT-1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> Path:
    path = Path(path)
    entries, chunks, offset = [], [], 0
    for key, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"key": key, "shape": list(a.shape), "offset": offset})
        chunks.append(a.reshape(-1))
        offset += a.size
    header = json.dumps({"meta": dict(meta or {}), "tensors": entries}, sort_keys=True)
    payload = np.concatenate(chunks) if chunks else np.zeros(0, dtype="<f8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(payload.astype("<f8").tobytes())
    return path


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic {magic[:32]!r})")
        header = json.loads(fh.readline().decode("utf-8"))
        payload = np.frombuffer(fh.read(), dtype="<f8")
    arrays = {}
    for e in header["tensors"]:
        n = int(np.prod(e["shape"])) if e["shape"] else 1
        arrays[e["key"]] = payload[e["offset"] : e["offset"] + n].reshape(e["shape"]).astype(np.float64)
    return arrays, header["meta"]
