"""Seeded synthetic accelerometer data: generator and desk-scale fixtures.

Falls are sharp magnitude spikes over an ADL-like noise floor, so a fitted
gate threshold separates the classes cleanly (the separable fixture) and the
whole pipeline can be exercised without the public datasets. All generated
values are quantized to float32 so the 32-bit wire encoding is lossless.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .signals import (
    DatasetConfig,
    Label,
    RecordingMeta,
    TriaxialRecording,
    Window,
    WindowOrigin,
    segment_adl,
    segment_fall,
)

_SPIKE_SHAPE = np.array([0.15, 0.5, 1.0, 0.55, 0.2])


@dataclass
class GeneratorSpec:
    """Parameters of the synthetic dataset; a JSON dict of these fields drives
    the `synthetic` ingestion adapter."""

    seed: int = 7
    n_falls: int = 220
    n_adls: int = 12
    fall_len: int = 320
    adl_len: int = 8750
    sample_rate_hz: float = 50.0
    noise_scale: float = 0.35
    spike_lo: float = 22.0
    spike_hi: float = 38.0
    vigorous_lo: float = 6.0
    vigorous_hi: float = 13.0
    vigorous_every: int = 4  # every k-th ADL recording gets sub-fall spikes
    window_size: int = 100
    stride: int = 50

    def dataset_config(self) -> DatasetConfig:
        return DatasetConfig(self.window_size, self.stride, adapter="synthetic")


def _quantize(arr: np.ndarray) -> np.ndarray:
    return arr.astype(np.float32).astype(np.float64)


def _background(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    sig = rng.normal(0.0, scale, size=(n, 3))
    sig[:, 2] += 1.0  # gravity on z
    return sig


def _add_spike(sig: np.ndarray, center: int, magnitude: float, rng: np.random.Generator):
    direction = rng.normal(0.0, 1.0, size=3)
    direction /= np.sqrt((direction * direction).sum())
    half = len(_SPIKE_SHAPE) // 2
    lo = max(0, center - half)
    for i, a in enumerate(_SPIKE_SHAPE[lo - (center - half) :]):
        if lo + i >= len(sig):
            break
        sig[lo + i] += a * magnitude * direction


def generate_recordings(
    spec: GeneratorSpec,
) -> tuple[list[TriaxialRecording], list[TriaxialRecording]]:
    """Deterministic (falls, adls) recording lists for a spec."""
    rng = np.random.default_rng(spec.seed)
    falls = []
    for i in range(spec.n_falls):
        sig = _background(rng, spec.fall_len, spec.noise_scale)
        center = int(rng.integers(60, spec.fall_len - 60))
        magnitude = float(rng.uniform(spec.spike_lo, spec.spike_hi))
        _add_spike(sig, center, magnitude, rng)
        falls.append(
            TriaxialRecording(
                recording_id=f"synthetic/fall_{i:04d}",
                samples=_quantize(sig),
                sample_rate_hz=spec.sample_rate_hz,
                meta=RecordingMeta(
                    dataset="synthetic",
                    subject=f"s{i % 6:02d}",
                    activity="fall",
                    label=Label.FALL,
                ),
            )
        )
    adls = []
    for i in range(spec.n_adls):
        sig = _background(rng, spec.adl_len, spec.noise_scale)
        if spec.vigorous_every and i % spec.vigorous_every == 0:
            # energetic but sub-fall activity, e.g. jumping
            for _ in range(8):
                center = int(rng.integers(30, spec.adl_len - 30))
                magnitude = float(rng.uniform(spec.vigorous_lo, spec.vigorous_hi))
                _add_spike(sig, center, magnitude, rng)
        adls.append(
            TriaxialRecording(
                recording_id=f"synthetic/adl_{i:04d}",
                samples=_quantize(sig),
                sample_rate_hz=spec.sample_rate_hz,
                meta=RecordingMeta(
                    dataset="synthetic",
                    subject=f"s{i % 6:02d}",
                    activity="adl",
                    label=Label.ADL,
                ),
            )
        )
    return falls, adls


def separable_windows(spec: GeneratorSpec | None = None) -> list[Window]:
    """The bundled separable fixture: segmented fall and ADL windows."""
    spec = spec or GeneratorSpec()
    falls, adls = generate_recordings(spec)
    cfg = spec.dataset_config()
    windows = [segment_fall(rec, cfg.window_size) for rec in falls]
    for rec in adls:
        windows.extend(segment_adl(rec, cfg))
    return windows


def fall_window_fixture(seed: int = 7) -> Window:
    """One deterministic fall window, used for golden feature values."""
    spec = GeneratorSpec(seed=seed, n_falls=1, n_adls=0)
    falls, _ = generate_recordings(spec)
    return segment_fall(falls[0], spec.window_size)


def write_generic_dir(spec: GeneratorSpec, outdir) -> tuple[int, int]:
    """Materialize the generator output as generic-adapter text files.

    Layout: <outdir>/falls/fall_0000.csv and <outdir>/adls/adl_0000.csv with
    t,x,y,z columns; float text is repr-exact so re-ingestion is lossless.
    Returns (fall file count, adl file count).
    """
    from pathlib import Path

    outdir = Path(outdir)
    falls, adls = generate_recordings(spec)
    for sub, recs in (("falls", falls), ("adls", adls)):
        d = outdir / sub
        d.mkdir(parents=True, exist_ok=True)
        for rec in recs:
            name = rec.recording_id.rsplit("/", 1)[-1] + ".csv"
            with open(d / name, "w", encoding="utf-8") as fh:
                fh.write(f"# synthetic recording, subject={rec.meta.subject}\n")
                for t, (x, y, z) in enumerate(rec.samples):
                    fh.write(f"{t},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    return len(falls), len(adls)


def low_variance_signal_windows(
    seed: int = 11,
    n_per_class: int = 300,
    n_samples: int = 40,
    epsilon: float = 0.05,
) -> list[Window]:
    """Fixture whose class signal lives in a low-variance direction.

    Channels x and z track a shared per-window level drawn from a 21-step
    grid; falls shift z up and x down by epsilon/2. Axis-aligned recursive
    splits condition on the (cleanly quantized) level and then separate on z,
    but after standardization the discriminative contrast z - x sits in a
    small principal component, well below the shared-level and noise
    components, so a 95%-variance projection discards most of it. A fixed
    identical spike on every window keeps the gate from filtering anything.
    """
    rng = np.random.default_rng(seed)
    windows = []
    order = rng.permutation(2 * n_per_class)
    for idx in order:
        is_fall = idx < n_per_class
        level = 1.0 + 0.05 * rng.integers(0, 21)
        shift = epsilon / 2.0 if is_fall else 0.0
        sig = np.empty((n_samples, 3))
        sig[:, 0] = level - shift + rng.normal(0.0, 0.01, n_samples)
        sig[:, 1] = rng.normal(0.0, 0.05, n_samples)
        sig[:, 2] = level + shift + rng.normal(0.0, 0.01, n_samples)
        sig[5] = (30.0, 30.0, 30.0)  # identical spike, class-independent
        windows.append(
            Window(
                samples=_quantize(sig),
                label=Label.FALL if is_fall else Label.ADL,
                origin=WindowOrigin(f"lowvar_{idx:04d}", 0, f"s{idx % 4:02d}"),
            )
        )
    return windows


def spec_to_json(spec: GeneratorSpec) -> dict:
    return asdict(spec)
