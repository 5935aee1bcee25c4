"""Named-tensor checkpoint container.

Layout: a magic line, then one line of JSON (format version, model config,
tensor names, shapes and byte offsets), then little-endian float64 blobs.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = b"SENTIPIPE-CKPT\n"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, kind: str, config: dict, tensors: dict, extra: dict | None = None) -> None:
    entries, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        blob = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "dtype": "<f8",
        "tensors": entries,
        "extra": extra or {},
    }
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path, expected_shapes: dict | None = None):
    """Return (header, {name: array}); shapes are checked against ``expected_shapes`` if given."""
    with open(path, "rb") as f:
        if f.readline() != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint")
        header = json.loads(f.readline().decode("utf-8"))
        body = f.read()
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
    tensors = {}
    for e in header["tensors"]:
        raw = body[e["offset"]: e["offset"] + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise CheckpointError(f"{path}: truncated tensor {e['name']}")
        tensors[e["name"]] = np.frombuffer(raw, dtype="<f8").reshape(e["shape"]).astype(np.float64)
    if expected_shapes is not None:
        check_shapes(path, tensors, expected_shapes)
    return header, tensors


def check_shapes(path, tensors: dict, expected_shapes: dict) -> None:
    missing = sorted(set(expected_shapes) - set(tensors))
    if missing:
        raise CheckpointError(f"{path}: missing tensors {missing}")
    for name, shape in expected_shapes.items():
        if tuple(tensors[name].shape) != tuple(shape):
            raise CheckpointError(f"{path}: {name} has shape {tensors[name].shape}, config says {tuple(shape)}")
