"""Accelerometer data model, RMS computation and window segmentation.

Recordings hold an immutable (n, 3) float64 sample matrix; the magnitude used
everywhere downstream is the vector norm sqrt(x^2 + y^2 + z^2) per sample.
Units (g or m/s^2) travel as metadata and are never converted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EmptyInputError, InvalidSampleError, TooShortError

log = logging.getLogger(__name__)

# Per-dataset window sizes (sample counts) used when segmenting the public
# datasets; strides default to 50% overlap and are configurable.
DATASET_WINDOW_SIZES = {
    "sisfall": 200,
    "mmsys": 100,
    "mobiact": 600,
    "practical": 300,
}


class Label(Enum):
    ADL = 0
    FALL = 1


class TriaxialSample(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class RecordingMeta:
    dataset: str = ""
    subject: str = ""
    device: str = ""
    activity: str = ""
    label: Label | None = None
    unit: str = "g"


class TriaxialRecording:
    """Ordered, non-empty stream of tri-axial samples plus provenance."""

    def __init__(
        self,
        recording_id: str,
        samples,
        sample_rate_hz: float,
        meta: RecordingMeta | None = None,
    ):
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidSampleError(
                f"recording {recording_id!r}: samples must be (n, 3), got {arr.shape}"
            )
        if arr.shape[0] == 0:
            raise EmptyInputError(f"recording {recording_id!r} is empty")
        if not np.isfinite(arr).all():
            raise InvalidSampleError(
                f"recording {recording_id!r} contains non-finite samples"
            )
        if not (sample_rate_hz > 0):
            raise InvalidSampleError(
                f"recording {recording_id!r}: sample_rate_hz must be > 0"
            )
        arr.setflags(write=False)
        self.recording_id = recording_id
        self.samples = arr
        self.sample_rate_hz = float(sample_rate_hz)
        self.meta = meta if meta is not None else RecordingMeta()

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __repr__(self) -> str:
        return (
            f"TriaxialRecording({self.recording_id!r}, n={len(self)}, "
            f"rate={self.sample_rate_hz}, label={self.meta.label})"
        )


@dataclass(frozen=True)
class WindowOrigin:
    recording_id: str
    start: int
    subject: str = ""


@dataclass(frozen=True)
class Window:
    """Fixed-length labeled segment of a recording; the unit of classification."""

    samples: np.ndarray  # (window_size, 3) float64, read-only
    label: Label | None
    origin: WindowOrigin

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != 3:
            raise InvalidSampleError(f"window samples must be (n, 3), got {self.samples.shape}")
        self.samples.setflags(write=False)

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class DatasetConfig:
    window_size: int
    stride: int
    adapter: str = "generic"

    def __post_init__(self):
        if self.window_size <= 0:
            raise InvalidSampleError("window_size must be > 0")
        if not (0 < self.stride <= self.window_size):
            raise InvalidSampleError("stride must satisfy 0 < stride <= window_size")

    @classmethod
    def for_dataset(cls, dataset: str, stride: int | None = None) -> "DatasetConfig":
        size = DATASET_WINDOW_SIZES[dataset]
        return cls(window_size=size, stride=stride if stride else size // 2, adapter=dataset)


def rms(sample) -> float:
    """Vector magnitude sqrt(x^2 + y^2 + z^2) of one tri-axial sample."""
    x, y, z = float(sample[0]), float(sample[1]), float(sample[2])
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise InvalidSampleError(f"non-finite sample ({x}, {y}, {z})")
    return math.sqrt(x * x + y * y + z * z)


def rms_series(recording: TriaxialRecording) -> np.ndarray:
    """Per-sample magnitude series; element i equals rms(samples[i])."""
    if len(recording) == 0:
        raise EmptyInputError("cannot compute the magnitude series of an empty recording")
    s = recording.samples
    return np.sqrt((s * s).sum(axis=1))


def _magnitude(samples: np.ndarray) -> np.ndarray:
    return np.sqrt((samples * samples).sum(axis=1))


def peak_rms(window: Window) -> float:
    """Maximum sample magnitude inside a window."""
    return float(_magnitude(window.samples).max())


def segment_fall(recording: TriaxialRecording, window_size: int) -> Window:
    """Cut the window of `window_size` samples centered on the magnitude peak.

    The left half holds floor(window_size / 2) samples before the first
    occurrence of the maximum; near the edges the window shifts inward so the
    peak stays inside and no samples are fabricated.
    """
    n = len(recording)
    if n < window_size:
        raise TooShortError(
            f"recording {recording.recording_id!r} has {n} samples, "
            f"needs at least {window_size}"
        )
    series = rms_series(recording)
    p = int(np.argmax(series))  # first occurrence on ties
    start = p - window_size // 2
    start = max(0, min(start, n - window_size))
    return Window(
        samples=recording.samples[start : start + window_size].copy(),
        label=Label.FALL,
        origin=WindowOrigin(recording.recording_id, start, recording.meta.subject),
    )


def segment_adl(recording: TriaxialRecording, cfg: DatasetConfig) -> list[Window]:
    """Slide a window of cfg.window_size by cfg.stride over the recording.

    Too-short recordings yield an empty list (logged, not fatal).
    """
    n = len(recording)
    if n < cfg.window_size:
        log.warning(
            "recording %s has %d samples, shorter than window %d; skipped",
            recording.recording_id,
            n,
            cfg.window_size,
        )
        return []
    windows = []
    for start in range(0, n - cfg.window_size + 1, cfg.stride):
        windows.append(
            Window(
                samples=recording.samples[start : start + cfg.window_size].copy(),
                label=Label.ADL,
                origin=WindowOrigin(recording.recording_id, start, recording.meta.subject),
            )
        )
    return windows


def segment_recordings(
    recordings: Iterable[TriaxialRecording], cfg: DatasetConfig
) -> list[Window]:
    """Segment a mixed batch: falls via peak centering, ADLs via sliding windows.

    Recordings without a label are skipped with a warning.
    """
    windows: list[Window] = []
    for rec in recordings:
        if rec.meta.label is Label.FALL:
            try:
                windows.append(segment_fall(rec, cfg.window_size))
            except TooShortError:
                log.warning(
                    "fall recording %s shorter than window %d; skipped",
                    rec.recording_id,
                    cfg.window_size,
                )
        elif rec.meta.label is Label.ADL:
            windows.extend(segment_adl(rec, cfg))
        else:
            log.warning("recording %s has no label; skipped", rec.recording_id)
    return windows
