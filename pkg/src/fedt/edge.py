"""Edge simulator: replay a recording through the gate, escalate over TCP.

The simulator runs the mobile-stage gate over the recording, frames every
escalated window and streams it to the cloud service, pipelining at most
`max_inflight` unacknowledged windows (beyond that the sender blocks on
verdicts). On connection loss the unacknowledged windows are buffered up to a
cap and retried once over a fresh connection; anything beyond that is logged
as undelivered rather than silently dropped.
"""

from __future__ import annotations

import logging
import socket
import time
from dataclasses import dataclass, field

from .gate import GateEvent, Threshold, gate_stream
from .service import _read_frame
from .signals import TriaxialRecording
from . import wire

log = logging.getLogger(__name__)


@dataclass
class EdgeConfig:
    window_size: int = 100
    lookback: int | None = None
    realtime: bool = False  # pace sends by the recording sample rate
    max_inflight: int = 16
    max_retry_buffer: int = 64
    connect_timeout: float = 5.0
    reply_timeout: float = 30.0


@dataclass
class SessionEntry:
    trigger_index: int
    window_id: int
    label: int | None = None
    probability: float | None = None
    service_latency_us: int | None = None
    round_trip_s: float | None = None
    status: str = "pending"  # delivered | undelivered


@dataclass
class SessionLog:
    entries: list[SessionEntry] = field(default_factory=list)
    partial_triggers: list[int] = field(default_factory=list)
    error: str | None = None

    @property
    def delivered(self) -> list[SessionEntry]:
        return [e for e in self.entries if e.status == "delivered"]

    @property
    def undelivered(self) -> list[SessionEntry]:
        return [e for e in self.entries if e.status != "delivered"]


class _Session:
    """One connection with the HELLO handshake done."""

    def __init__(self, address: tuple[str, int], fingerprint: str, cfg: EdgeConfig):
        self.sock = socket.create_connection(address, timeout=cfg.connect_timeout)
        self.sock.settimeout(cfg.reply_timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.rfile = self.sock.makefile("rb")
        hello = wire.encode_hello_payload(fingerprint, "edge-sim")
        self.sock.sendall(wire.encode_frame(wire.Frame(wire.MsgType.HELLO, hello)))
        reply = _read_frame(self.rfile, wire.DEFAULT_MAX_PAYLOAD)
        if reply.msg_type is wire.MsgType.ERROR:
            code, message = wire.decode_error_payload(reply.payload)
            raise wire.FrameError(f"service rejected session ({code}): {message}")
        if reply.msg_type is not wire.MsgType.HELLO:
            raise wire.FrameError(f"unexpected handshake reply {reply.msg_type.name}")

    def send_window(self, window_id: int, samples) -> None:
        payload = wire.encode_window_payload(window_id, samples)
        self.sock.sendall(wire.encode_frame(wire.Frame(wire.MsgType.WINDOW, payload)))

    def read_verdict(self) -> tuple[int, int, float, int]:
        frame = _read_frame(self.rfile, wire.DEFAULT_MAX_PAYLOAD)
        if frame.msg_type is wire.MsgType.ERROR:
            code, message = wire.decode_error_payload(frame.payload)
            raise wire.FrameError(f"service error ({code}): {message}")
        if frame.msg_type is not wire.MsgType.VERDICT:
            raise wire.FrameError(f"unexpected reply {frame.msg_type.name}")
        return wire.decode_verdict_payload(frame.payload)

    def close(self):
        try:
            self.rfile.close()
            self.sock.close()
        except OSError:
            pass


def _run_attempt(
    session: _Session,
    pending: list[tuple[int, GateEvent]],
    entries: dict[int, SessionEntry],
    cfg: EdgeConfig,
    sample_period: float,
) -> None:
    """Pipelined send/receive over one connection; raises on any failure."""
    unacked: dict[int, float] = {}

    def consume_verdict():
        wid, label, probability, latency_us = session.read_verdict()
        sent_at = unacked.pop(wid, None)
        if sent_at is None:
            raise wire.FrameError(f"verdict for unknown window {wid}")
        entry = entries[wid]
        entry.label = label
        entry.probability = probability
        entry.service_latency_us = latency_us
        entry.round_trip_s = time.perf_counter() - sent_at
        entry.status = "delivered"

    for wid, event in pending:
        while len(unacked) >= cfg.max_inflight:
            consume_verdict()
        if sample_period:
            time.sleep(sample_period * len(event.window.samples))
        unacked[wid] = time.perf_counter()
        try:
            session.send_window(wid, event.window.samples)
        except OSError:
            unacked.pop(wid, None)
            raise
    while unacked:
        consume_verdict()


def edge_sim(
    recording: TriaxialRecording,
    threshold: Threshold,
    cfg: EdgeConfig,
    address: tuple[str, int],
    fingerprint: str,
) -> SessionLog:
    """Replay one recording; returns the per-window session log."""
    scan = gate_stream(recording, threshold, cfg.window_size, cfg.lookback)
    logbook = SessionLog(partial_triggers=list(scan.partial_triggers))
    if not scan.events:
        return logbook
    entries = {
        wid: SessionEntry(trigger_index=ev.trigger_index, window_id=wid)
        for wid, ev in enumerate(scan.events)
    }
    logbook.entries = [entries[w] for w in sorted(entries)]
    pending = list(enumerate(scan.events))
    sample_period = 1.0 / recording.sample_rate_hz if cfg.realtime else 0.0
    for attempt in (1, 2):
        if attempt > 1:
            if len(pending) > cfg.max_retry_buffer:
                log.warning(
                    "%d windows exceed the retry buffer of %d; excess undelivered",
                    len(pending),
                    cfg.max_retry_buffer,
                )
                pending = pending[: cfg.max_retry_buffer]
            log.info("retrying %d unacknowledged windows", len(pending))
        session = None
        try:
            session = _Session(address, fingerprint, cfg)
            _run_attempt(session, pending, entries, cfg, sample_period)
            logbook.error = None
            break
        except (OSError, ConnectionError, wire.FrameError) as exc:
            logbook.error = str(exc)
            log.warning("session attempt %d failed: %s", attempt, exc)
        finally:
            if session is not None:
                session.close()
        pending = [(wid, ev) for wid, ev in pending if entries[wid].status == "pending"]
        if not pending:
            break
    for entry in logbook.entries:
        if entry.status == "pending":
            entry.status = "undelivered"
    return logbook
