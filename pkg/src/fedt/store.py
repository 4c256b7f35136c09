"""Versioned windows container: the on-disk handoff between CLI stages.

Layout (big-endian):
  magic "FEDTWINS" | u32 version | u32 header_len | header JSON
  per window: u8 label (0 ADL / 1 FALL / 255 none)
              | u16 id_len + recording id | u16 s_len + subject
              | u32 start | u32 n_samples | samples f64[n*3]
  u32 CRC-32 of everything before it

The header records the DatasetConfig that produced the windows. Samples are
stored at full float64 precision, so save/load is lossless.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import ModelChecksumError, ModelFormatError, ModelTruncatedError, ModelVersionError
from .ioutil import atomic_write_bytes
from .signals import Label, Window, WindowOrigin

MAGIC = b"FEDTWINS"
FORMAT_VERSION = 1

_LABEL_CODES = {Label.ADL: 0, Label.FALL: 1, None: 255}
_CODE_LABELS = {0: Label.ADL, 1: Label.FALL, 255: None}


def encode_windows(windows: list[Window], header: dict | None = None) -> bytes:
    header = dict(header or {})
    header["count"] = len(windows)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack(">II", FORMAT_VERSION, len(header_bytes)), header_bytes]
    for w in windows:
        rid = w.origin.recording_id.encode("utf-8")
        subj = w.origin.subject.encode("utf-8")
        parts.append(struct.pack(">B", _LABEL_CODES[w.label]))
        parts.append(struct.pack(">H", len(rid)) + rid)
        parts.append(struct.pack(">H", len(subj)) + subj)
        parts.append(struct.pack(">II", w.origin.start, w.samples.shape[0]))
        parts.append(w.samples.astype(">f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack(">I", zlib.crc32(body))


def decode_windows(data: bytes) -> tuple[list[Window], dict]:
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise ModelTruncatedError(
                f"windows file ends inside {what} at offset {pos}"
            )
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(8, "magic")) != MAGIC:
        raise ModelFormatError("not a windows file (bad magic)")
    version, header_len = struct.unpack(">II", take(8, "header length"))
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported windows format version {version}")
    header = json.loads(bytes(take(header_len, "header")).decode("utf-8"))
    windows = []
    for i in range(header["count"]):
        (code,) = struct.unpack(">B", take(1, f"window {i} label"))
        if code not in _CODE_LABELS:
            raise ModelFormatError(f"window {i}: unknown label code {code}")
        (id_len,) = struct.unpack(">H", take(2, f"window {i} id length"))
        rid = bytes(take(id_len, f"window {i} id")).decode("utf-8")
        (s_len,) = struct.unpack(">H", take(2, f"window {i} subject length"))
        subj = bytes(take(s_len, f"window {i} subject")).decode("utf-8")
        start, n = struct.unpack(">II", take(8, f"window {i} extent"))
        samples = (
            np.frombuffer(take(24 * n, f"window {i} samples"), dtype=">f8")
            .astype(np.float64)
            .reshape(n, 3)
        )
        windows.append(
            Window(samples=samples, label=_CODE_LABELS[code], origin=WindowOrigin(rid, start, subj))
        )
    crc_expected = struct.unpack(">I", take(4, "checksum"))[0]
    if pos != len(view):
        raise ModelFormatError(f"{len(view) - pos} trailing bytes after the checksum")
    if zlib.crc32(data[: len(data) - 4]) != crc_expected:
        raise ModelChecksumError("windows file checksum mismatch")
    return windows, header


def save_windows(windows: list[Window], path, header: dict | None = None) -> None:
    atomic_write_bytes(path, encode_windows(windows, header))


def load_windows(path) -> tuple[list[Window], dict]:
    with open(path, "rb") as fh:
        return decode_windows(fh.read())
