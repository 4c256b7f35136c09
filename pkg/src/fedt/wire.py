"""Length-prefixed binary TCP framing between edge and cloud.

Frame layout (big-endian throughout):
  magic "FEDT" | version u8 (=1) | msg_type u8 | payload_length u32
  | payload | CRC-32 of the payload, u32

Message types: 0x01 WINDOW, 0x02 VERDICT, 0x03 HELLO, 0x04 ERROR. The frame
format is versioned so it can evolve; decode distinguishes "need more bytes"
from corruption. Window samples travel as 32-bit floats, so senders holding
float64 data that is not float32-representable lose precision at the wire
(the synthetic generator emits float32-exact values for this reason).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import FedtError

MAGIC = b"FEDT"
PROTOCOL_VERSION = 1
HEADER = struct.Struct(">4sBBI")  # magic, version, msg_type, payload_length
CRC = struct.Struct(">I")
DEFAULT_MAX_PAYLOAD = 16 * 1024 * 1024


class MsgType(IntEnum):
    WINDOW = 0x01
    VERDICT = 0x02
    HELLO = 0x03
    ERROR = 0x04


class ErrorCode(IntEnum):
    BAD_FRAME = 1
    FINGERPRINT_MISMATCH = 2
    OVERSIZED = 3
    PROTOCOL = 4
    BAD_WINDOW = 5
    BUSY = 6
    INTERNAL = 7


class FrameError(FedtError):
    """Corrupt or invalid frame bytes."""


class BadMagicError(FrameError):
    pass


class BadVersionError(FrameError):
    pass


class UnknownTypeError(FrameError):
    pass


class ChecksumError(FrameError):
    pass


class OversizedError(FrameError):
    pass


class PayloadError(FrameError):
    """Payload bytes do not parse as the declared message type."""


class NeedMoreData(FedtError):
    """Not an error: the buffer holds a frame prefix only."""

    def __init__(self, needed: int):
        super().__init__(f"need at least {needed} more bytes")
        self.needed = needed


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes


def encode_frame(frame: Frame) -> bytes:
    return (
        HEADER.pack(MAGIC, PROTOCOL_VERSION, int(frame.msg_type), len(frame.payload))
        + frame.payload
        + CRC.pack(zlib.crc32(frame.payload))
    )


def decode_frame(buf: bytes, max_payload: int = DEFAULT_MAX_PAYLOAD) -> tuple[Frame, int]:
    """Decode exactly one frame from the head of `buf`.

    Returns (frame, bytes consumed). Raises NeedMoreData when the buffer is a
    valid prefix, FrameError subclasses when it is corrupt.
    """
    if len(buf) < HEADER.size:
        # validate what we can before asking for more
        if buf[: min(len(buf), 4)] != MAGIC[: min(len(buf), 4)]:
            raise BadMagicError(f"bad magic {bytes(buf[:4])!r}")
        raise NeedMoreData(HEADER.size - len(buf))
    magic, version, msg_type, payload_length = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise BadVersionError(f"unsupported protocol version {version}")
    try:
        mt = MsgType(msg_type)
    except ValueError:
        raise UnknownTypeError(f"unknown message type 0x{msg_type:02x}") from None
    if payload_length > max_payload:
        raise OversizedError(
            f"payload of {payload_length} bytes exceeds the {max_payload} limit"
        )
    total = HEADER.size + payload_length + CRC.size
    if len(buf) < total:
        raise NeedMoreData(total - len(buf))
    payload = bytes(buf[HEADER.size : HEADER.size + payload_length])
    (crc_expected,) = CRC.unpack_from(buf, HEADER.size + payload_length)
    if zlib.crc32(payload) != crc_expected:
        raise ChecksumError("payload checksum mismatch")
    return Frame(mt, payload), total


# --- payload codecs ---

_WINDOW_HEAD = struct.Struct(">QI")  # window id, sample count
_VERDICT = struct.Struct(">QBdQ")  # window id, label, probability, latency_us
_HELLO_HEAD = struct.Struct(">B")  # protocol version
_ERROR_HEAD = struct.Struct(">HH")  # code, message length


def encode_window_payload(window_id: int, samples: np.ndarray) -> bytes:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise PayloadError(f"window samples must be (n, 3), got {samples.shape}")
    return _WINDOW_HEAD.pack(window_id, samples.shape[0]) + samples.astype(">f4").tobytes()


def decode_window_payload(payload: bytes) -> tuple[int, np.ndarray]:
    if len(payload) < _WINDOW_HEAD.size:
        raise PayloadError("window payload shorter than its fixed header")
    window_id, count = _WINDOW_HEAD.unpack_from(payload)
    expected = _WINDOW_HEAD.size + 12 * count
    if len(payload) != expected:
        raise PayloadError(
            f"window payload of {len(payload)} bytes, expected {expected} for {count} samples"
        )
    samples = (
        np.frombuffer(payload, dtype=">f4", offset=_WINDOW_HEAD.size)
        .astype(np.float64)
        .reshape(count, 3)
    )
    return window_id, samples


def encode_verdict_payload(
    window_id: int, label: int, probability: float, latency_us: int
) -> bytes:
    return _VERDICT.pack(window_id, label, probability, latency_us)


def decode_verdict_payload(payload: bytes) -> tuple[int, int, float, int]:
    if len(payload) != _VERDICT.size:
        raise PayloadError(f"verdict payload must be {_VERDICT.size} bytes, got {len(payload)}")
    window_id, label, probability, latency_us = _VERDICT.unpack(payload)
    if label not in (0, 1):
        raise PayloadError(f"verdict label must be 0 or 1, got {label}")
    if not 0.0 <= probability <= 1.0:
        raise PayloadError(f"verdict probability {probability} outside [0, 1]")
    return window_id, label, probability, latency_us


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack(">H", len(b)) + b


def _unpack_str(payload: bytes, pos: int) -> tuple[str, int]:
    if pos + 2 > len(payload):
        raise PayloadError("string field truncated")
    (n,) = struct.unpack_from(">H", payload, pos)
    pos += 2
    if pos + n > len(payload):
        raise PayloadError("string field truncated")
    return payload[pos : pos + n].decode("utf-8"), pos + n


def encode_hello_payload(fingerprint: str, model_id: str) -> bytes:
    return _HELLO_HEAD.pack(PROTOCOL_VERSION) + _pack_str(fingerprint) + _pack_str(model_id)


def decode_hello_payload(payload: bytes) -> tuple[int, str, str]:
    if len(payload) < _HELLO_HEAD.size:
        raise PayloadError("hello payload too short")
    (version,) = _HELLO_HEAD.unpack_from(payload)
    fingerprint, pos = _unpack_str(payload, _HELLO_HEAD.size)
    model_id, pos = _unpack_str(payload, pos)
    if pos != len(payload):
        raise PayloadError("trailing bytes in hello payload")
    return version, fingerprint, model_id


def encode_error_payload(code: ErrorCode, message: str) -> bytes:
    b = message.encode("utf-8")
    return _ERROR_HEAD.pack(int(code), len(b)) + b


def decode_error_payload(payload: bytes) -> tuple[int, str]:
    if len(payload) < _ERROR_HEAD.size:
        raise PayloadError("error payload too short")
    code, n = _ERROR_HEAD.unpack_from(payload)
    if len(payload) != _ERROR_HEAD.size + n:
        raise PayloadError("error payload length mismatch")
    return code, payload[_ERROR_HEAD.size :].decode("utf-8", errors="replace")
