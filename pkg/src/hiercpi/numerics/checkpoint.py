"""Flat binary checkpoints.

Layout::

    b"HCPICKPT"            8-byte magic
    uint32 LE              format version
    uint64 LE              header length in bytes
    header                 UTF-8 JSON: {"dtype", "meta", "tensors": [{name, shape, offset}]}
    payload                little-endian float values, concatenated in header order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"HCPICKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    dtype = np.dtype(np.float64)
    entries, offset, blobs = [], 0, []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=dtype.newbyteorder("<"))
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.size
    header = json.dumps({"dtype": "float64", "meta": meta or {}, "tensors": entries},
                        sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(header)))
        fh.write(header)
        for b in blobs:
            fh.write(b)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<IQ", raw[8:20])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[20:20 + hlen])
    payload = np.frombuffer(raw[20 + hlen:], dtype="<f8")
    arrays = {}
    for e in header["tensors"]:
        n = int(np.prod(e["shape"])) if e["shape"] else 1
        chunk = payload[e["offset"]:e["offset"] + n]
        if chunk.size != n:
            raise CheckpointError(f"{path}: truncated payload for {e['name']}")
        arrays[e["name"]] = chunk.reshape(e["shape"]).astype(np.float64)
    return arrays, header.get("meta", {})


def assign_parameters(params: dict, arrays: dict[str, np.ndarray], strict: bool = True) -> list[str]:
    """Copy checkpoint arrays into parameter tensors; returns names that were loaded.

    Shape mismatches always raise. With ``strict`` the name sets must match.
    """
    if strict:
        missing = sorted(set(params) - set(arrays))
        extra = sorted(set(arrays) - set(params))
        if missing or extra:
            raise CheckpointError(f"parameter names differ: missing={missing[:5]} unexpected={extra[:5]}")
    loaded = []
    for name, p in params.items():
        if name not in arrays:
            continue
        arr = arrays[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise CheckpointError(
                f"shape mismatch for {name}: checkpoint {tuple(arr.shape)} vs model {tuple(p.data.shape)}")
        p.data = arr.astype(p.data.dtype, copy=True)
        loaded.append(name)
    return loaded
