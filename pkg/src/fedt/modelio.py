"""Versioned binary model files with a whole-file checksum.

Layout (big-endian):
  magic "FEDTMODL" | u32 version | u32 header_len | header JSON
  per tree: u32 n_nodes | feature i32[n] | threshold f64[n]
            | left i32[n] | right i32[n] | weight f64[n]
  u32 CRC-32 of everything before it

The header carries hyperparameters, cutoff, base score, model id and the
registry fingerprint; predictions round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict

import numpy as np

from .boosting import FedtModel, FedtParams, RegressionTree
from .errors import (
    ModelChecksumError,
    ModelFormatError,
    ModelTruncatedError,
    ModelVersionError,
)
from .ioutil import atomic_write_bytes

MAGIC = b"FEDTMODL"
FORMAT_VERSION = 1


def save_model(model: FedtModel) -> bytes:
    header = {
        "model_id": model.model_id,
        "fingerprint": model.fingerprint,
        "base_score": model.base_score,
        "params": asdict(model.params),
        "n_trees": len(model.trees),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack(">II", FORMAT_VERSION, len(header_bytes)), header_bytes]
    for tree in model.trees:
        n = tree.feature.shape[0]
        parts.append(struct.pack(">I", n))
        parts.append(tree.feature.astype(">i4").tobytes())
        parts.append(tree.threshold.astype(">f8").tobytes())
        parts.append(tree.left.astype(">i4").tobytes())
        parts.append(tree.right.astype(">i4").tobytes())
        parts.append(tree.weight.astype(">f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack(">I", zlib.crc32(body))


def load_model(data: bytes) -> FedtModel:
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise ModelTruncatedError(
                f"model file ends inside {what} (need {n} bytes at offset {pos}, "
                f"have {len(view) - pos})"
            )
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(8, "magic")) != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    version, header_len = struct.unpack(">II", take(8, "version/header length"))
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {version} (expected {FORMAT_VERSION})"
        )
    try:
        header = json.loads(bytes(take(header_len, "header")).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable model header: {exc}") from None
    trees = []
    for t in range(header["n_trees"]):
        (n,) = struct.unpack(">I", take(4, f"tree {t} node count"))
        feature = np.frombuffer(take(4 * n, f"tree {t} features"), dtype=">i4").astype(np.int32)
        threshold = np.frombuffer(take(8 * n, f"tree {t} thresholds"), dtype=">f8").astype(np.float64)
        left = np.frombuffer(take(4 * n, f"tree {t} left"), dtype=">i4").astype(np.int32)
        right = np.frombuffer(take(4 * n, f"tree {t} right"), dtype=">i4").astype(np.int32)
        weight = np.frombuffer(take(8 * n, f"tree {t} weights"), dtype=">f8").astype(np.float64)
        trees.append(RegressionTree(feature, threshold, left, right, weight))
    crc_expected = struct.unpack(">I", take(4, "checksum"))[0]
    if pos != len(view):
        raise ModelFormatError(f"{len(view) - pos} trailing bytes after the checksum")
    if zlib.crc32(data[: len(data) - 4]) != crc_expected:
        raise ModelChecksumError("model file checksum mismatch (corrupt content)")
    return FedtModel(
        trees=trees,
        params=FedtParams(**header["params"]),
        base_score=header["base_score"],
        fingerprint=header["fingerprint"],
        model_id=header["model_id"],
    )


def save_model_file(model: FedtModel, path) -> None:
    atomic_write_bytes(path, save_model(model))


def load_model_file(path) -> FedtModel:
    with open(path, "rb") as fh:
        return load_model(fh.read())
