"""Cloud-side TCP inference service: decode, extract, classify, reply.

Per connection: a HELLO handshake (the client's registry fingerprint must
match the loaded model's), then a stream of WINDOW frames, each answered by
one VERDICT carrying the same window id in arrival order. Any malformed
frame gets an ERROR reply and the connection closes; the service itself
survives arbitrary bytes. Handlers share one immutable model and registry;
the only shared mutable state is an atomic stats counter.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field

from .boosting import FedtModel, classify
from .errors import FedtError
from .features import FeatureRegistry, extract_features
from .signals import Label, Window, WindowOrigin
from . import wire

log = logging.getLogger(__name__)


@dataclass
class ServiceLimits:
    max_payload: int = wire.DEFAULT_MAX_PAYLOAD
    max_sessions: int = 128


@dataclass
class ServiceStats:
    sessions: int = 0
    windows: int = 0
    verdicts: int = 0
    errors: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, **deltas: int):
        with self._lock:
            for name, d in deltas.items():
                setattr(self, name, getattr(self, name) + d)


def _read_exact(rfile, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = rfile.read(remaining)
        if not chunk:
            raise ConnectionError("peer closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _read_frame(rfile, max_payload: int) -> wire.Frame:
    buf = _read_exact(rfile, wire.HEADER.size)
    while True:
        try:
            frame, consumed = wire.decode_frame(buf, max_payload)
            return frame
        except wire.NeedMoreData as more:
            buf += _read_exact(rfile, more.needed)


class _Handler(socketserver.BaseRequestHandler):
    def setup(self):
        self.rfile = self.request.makefile("rb")
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def finish(self):
        self.rfile.close()

    def _send(self, msg_type: wire.MsgType, payload: bytes):
        self.request.sendall(wire.encode_frame(wire.Frame(msg_type, payload)))

    def _fail(self, code: wire.ErrorCode, message: str):
        self.server.stats.bump(errors=1)
        log.info("session error (%s): %s", code.name, message)
        try:
            self._send(wire.MsgType.ERROR, wire.encode_error_payload(code, message))
        except OSError:
            pass

    def handle(self):
        server: InferenceService = self.server
        if not server.try_enter_session():
            self._fail(wire.ErrorCode.BUSY, "session limit reached")
            return
        try:
            server.stats.bump(sessions=1)
            self._session()
        except (ConnectionError, OSError, TimeoutError):
            pass  # peer went away; nothing to answer
        except wire.OversizedError as exc:
            self._fail(wire.ErrorCode.OVERSIZED, str(exc))
        except wire.FrameError as exc:
            self._fail(wire.ErrorCode.BAD_FRAME, str(exc))
        except FedtError as exc:
            self._fail(wire.ErrorCode.INTERNAL, str(exc))
        except Exception:
            log.exception("unexpected handler failure")
            self._fail(wire.ErrorCode.INTERNAL, "internal error")
        finally:
            server.leave_session()

    def _session(self):
        server: InferenceService = self.server
        hello = _read_frame(self.rfile, server.limits.max_payload)
        if hello.msg_type is not wire.MsgType.HELLO:
            self._fail(wire.ErrorCode.PROTOCOL, "expected HELLO first")
            return
        version, fingerprint, _client_id = wire.decode_hello_payload(hello.payload)
        if version != wire.PROTOCOL_VERSION:
            self._fail(wire.ErrorCode.PROTOCOL, f"unsupported protocol version {version}")
            return
        if fingerprint != server.model.fingerprint:
            self._fail(
                wire.ErrorCode.FINGERPRINT_MISMATCH,
                f"client registry {fingerprint[:12]}... does not match the "
                f"served model {server.model.fingerprint[:12]}...",
            )
            return
        self._send(
            wire.MsgType.HELLO,
            wire.encode_hello_payload(server.model.fingerprint, server.model.model_id),
        )
        while True:
            try:
                frame = _read_frame(self.rfile, server.limits.max_payload)
            except (ConnectionError, OSError):
                return  # client done
            if frame.msg_type is not wire.MsgType.WINDOW:
                self._fail(
                    wire.ErrorCode.PROTOCOL,
                    f"expected WINDOW after handshake, got {frame.msg_type.name}",
                )
                return
            started = time.perf_counter()
            window_id, samples = wire.decode_window_payload(frame.payload)
            server.stats.bump(windows=1)
            if samples.shape[0] < server.registry.min_series_length:
                self._fail(
                    wire.ErrorCode.BAD_WINDOW,
                    f"window {window_id} has {samples.shape[0]} samples, registry "
                    f"needs {server.registry.min_series_length}",
                )
                return
            window = Window(
                samples=samples, label=None, origin=WindowOrigin(f"wire:{window_id}", 0)
            )
            label, probability = classify(
                server.model, extract_features(window, server.registry)
            )
            latency_us = int((time.perf_counter() - started) * 1e6)
            self._send(
                wire.MsgType.VERDICT,
                wire.encode_verdict_payload(
                    window_id, 1 if label is Label.FALL else 0, probability, latency_us
                ),
            )
            server.stats.bump(verdicts=1)


class InferenceService(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        model: FedtModel,
        registry: FeatureRegistry,
        limits: ServiceLimits | None = None,
    ):
        if model.fingerprint != registry.fingerprint:
            raise FedtError(
                "model fingerprint does not match the registry; refusing to serve"
            )
        super().__init__(address, _Handler)
        self.model = model
        self.registry = registry
        self.limits = limits or ServiceLimits()
        self.stats = ServiceStats()
        self._sessions = 0
        self._session_lock = threading.Lock()
        self._thread: threading.Thread | None = None

    def try_enter_session(self) -> bool:
        with self._session_lock:
            if self._sessions >= self.limits.max_sessions:
                return False
            self._sessions += 1
            return True

    def leave_session(self):
        with self._session_lock:
            self._sessions = max(0, self._sessions - 1)

    @property
    def address(self) -> tuple[str, int]:
        return self.socket.getsockname()[:2]

    def start(self) -> "InferenceService":
        """Serve on a background thread (tests and the edge simulator)."""
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve(
    address: tuple[str, int],
    model: FedtModel,
    registry: FeatureRegistry,
    limits: ServiceLimits | None = None,
) -> InferenceService:
    """Bind and return the service; call serve_forever() or start()."""
    return InferenceService(address, model, registry, limits)
