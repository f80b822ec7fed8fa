"""Versioned binary checkpoints with a payload checksum.

Layout: magic, little-endian u32 format version, sha256 over everything that
follows, u64 header length, JSON header (config, vocabulary, epoch, metric,
array index), then the concatenated little-endian float64 arrays. A version
mismatch raises before the checksum is even inspected; any flipped payload
bit raises an integrity error.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

__all__ = ["Checkpoint", "CheckpointError", "CheckpointVersionError",
           "CheckpointIntegrityError", "save_checkpoint", "load_checkpoint"]

_MAGIC = b"GSEQCKPT"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointIntegrityError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    """Everything needed to rebuild a trained model and keep training context."""

    config: dict
    vocab_tokens: list
    arrays: dict  # name -> float64 ndarray
    epoch: int = 0
    best_metric: float = 0.0
    version: int = FORMAT_VERSION


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    index = []
    payload = bytearray()
    for name, arr in ckpt.arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        index.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload += arr.tobytes()
    header = json.dumps({
        "config": ckpt.config,
        "vocab": list(ckpt.vocab_tokens),
        "epoch": ckpt.epoch,
        "best_metric": ckpt.best_metric,
        "arrays": index,
    }, sort_keys=True).encode("utf-8")
    body = struct.pack("<Q", len(header)) + header + bytes(payload)
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", ckpt.version))
        fh.write(digest)
        fh.write(body)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 4 + 32 + 8 or blob[:len(_MAGIC)] != _MAGIC:
        raise CheckpointIntegrityError(f"{path}: not a checkpoint file")
    pos = len(_MAGIC)
    (version,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
    digest = blob[pos:pos + 32]
    pos += 32
    body = blob[pos:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointIntegrityError(f"{path}: checksum mismatch, file is corrupt")
    (header_len,) = struct.unpack_from("<Q", body, 0)
    header = json.loads(body[8:8 + header_len].decode("utf-8"))
    payload = body[8 + header_len:]
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=n, offset=start)
        arrays[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return Checkpoint(config=header["config"], vocab_tokens=header["vocab"],
                      arrays=arrays, epoch=header["epoch"],
                      best_metric=header["best_metric"], version=version)
