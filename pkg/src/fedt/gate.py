"""Mobile-stage filter: fit an RMS threshold and gate live samples.

The threshold is the smallest training-fall peak magnitude scaled by a
safety factor, so every training fall escalates by construction. A sample
whose magnitude reaches the threshold escalates (boundary included).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import CannotFitError, InvalidSampleError
from .signals import TriaxialRecording, Window, WindowOrigin, peak_rms, rms, rms_series

log = logging.getLogger(__name__)


class GateDecision(Enum):
    STAY_MOBILE = 0
    ESCALATE = 1


@dataclass(frozen=True)
class Threshold:
    tau: float
    safety_factor: float
    datasets: tuple[str, ...] = ()
    fall_count: int = 0

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidSampleError("tau must be non-negative")
        if not (0 < self.safety_factor <= 1):
            raise InvalidSampleError("safety_factor must be in (0, 1]")


def fit_threshold(fall_windows: list[Window], safety_factor: float = 0.9) -> Threshold:
    """tau = safety_factor * min over fall windows of their peak magnitude."""
    if not (0 < safety_factor <= 1):
        raise InvalidSampleError("safety_factor must be in (0, 1]")
    if not fall_windows:
        raise CannotFitError("cannot fit a threshold without fall windows")
    min_peak = min(peak_rms(w) for w in fall_windows)
    datasets = tuple(sorted({w.origin.recording_id.split("/")[0] for w in fall_windows}))
    return Threshold(
        tau=safety_factor * min_peak,
        safety_factor=safety_factor,
        datasets=datasets,
        fall_count=len(fall_windows),
    )


def gate(sample, th: Threshold) -> GateDecision:
    """ESCALATE iff the sample magnitude reaches tau."""
    return GateDecision.ESCALATE if rms(sample) >= th.tau else GateDecision.STAY_MOBILE


@dataclass(frozen=True)
class GateEvent:
    trigger_index: int
    window: Window


@dataclass
class StreamScan:
    """Result of replaying one recording through the gate."""

    events: list[GateEvent] = field(default_factory=list)
    partial_triggers: list[int] = field(default_factory=list)


def gate_stream(
    recording: TriaxialRecording,
    th: Threshold,
    window_size: int,
    lookback: int | None = None,
) -> StreamScan:
    """Scan a recording; emit one window per trigger with a refractory period.

    A trigger at index t emits samples [t - lookback, t - lookback +
    window_size) (shifted right when the trigger sits near the stream start);
    re-triggering is suppressed for one window length. A trigger too close to
    the stream end to fill a window is flagged, not emitted.
    """
    if lookback is None:
        lookback = window_size // 2
    if not (0 <= lookback < window_size):
        raise InvalidSampleError("lookback must satisfy 0 <= lookback < window_size")
    series = rms_series(recording)
    n = len(series)
    scan = StreamScan()
    t = 0
    while t < n:
        if series[t] >= th.tau:
            start = max(0, t - lookback)
            if start + window_size > n:
                scan.partial_triggers.append(t)
                log.info(
                    "trigger at %d in %s too close to stream end for a full window",
                    t,
                    recording.recording_id,
                )
                break
            scan.events.append(
                GateEvent(
                    trigger_index=t,
                    window=Window(
                        samples=recording.samples[start : start + window_size].copy(),
                        label=None,
                        origin=WindowOrigin(
                            recording.recording_id, start, recording.meta.subject
                        ),
                    ),
                )
            )
            t += window_size  # refractory period
        else:
            t += 1
    return scan


def save_threshold(th: Threshold, path) -> None:
    """Persist as JSON; float text round-trips bit-exactly."""
    from .ioutil import atomic_write_text

    doc = {
        "tau": th.tau,
        "safety_factor": th.safety_factor,
        "datasets": list(th.datasets),
        "fall_count": th.fall_count,
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_threshold(path) -> Threshold:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Threshold(
        tau=doc["tau"],
        safety_factor=doc["safety_factor"],
        datasets=tuple(doc["datasets"]),
        fall_count=doc["fall_count"],
    )
