"""Cloud-side time-series features behind a named, ordered registry.

Each registered feature maps one real-valued series to one or more values
and is fanned out over the window channels x, y, z and the derived magnitude
series. The registry's canonical text form is hashed into a fingerprint that
travels with trained models and wire handshakes; extraction order and vector
arity are fully determined by it.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, EmptyInputError, ParameterError
from .signals import Window

log = logging.getLogger(__name__)

CHANNELS = ("x", "y", "z", "rms")


def fft_coefficient(series, k: int) -> tuple[float, float, float]:
    """k-th discrete Fourier coefficient C_k = sum_m a_m exp(-2*pi*i*m*k/n).

    Returns (real part, imaginary part, modulus).
    """
    a = np.asarray(series, dtype=np.float64)
    n = a.size
    if n == 0:
        raise EmptyInputError("fft_coefficient of an empty series")
    if not 0 <= k < n:
        raise ParameterError(f"fft_coefficient: k={k} out of range [0, {n})")
    c = complex(np.dot(a, np.exp((-2j * np.pi * k / n) * np.arange(n))))
    return c.real, c.imag, abs(c)


def abs_energy(series) -> float:
    """Sum of squared values."""
    a = np.asarray(series, dtype=np.float64)
    if a.size == 0:
        raise EmptyInputError("abs_energy of an empty series")
    return float(np.dot(a, a))


def absolute_changes(series) -> float:
    """Sum of absolute successive differences.

    Without the absolute value the sum telescopes to last - first, a much
    weaker feature, so |.| is applied to each step.
    """
    a = np.asarray(series, dtype=np.float64)
    if a.size < 2:
        raise EmptyInputError("absolute_changes needs at least 2 values")
    return float(np.abs(np.diff(a)).sum())


def energy_ratio_by_chunks(series, num_chunks: int) -> np.ndarray:
    """Per-chunk share of the total sum of squares; shares sum to 1.

    The series splits into num_chunks contiguous chunks, the first
    n mod num_chunks of them one element longer. A zero-energy series yields
    the uniform vector (flagged via log) so the output stays total.
    """
    a = np.asarray(series, dtype=np.float64)
    if a.size == 0:
        raise EmptyInputError("energy_ratio_by_chunks of an empty series")
    if num_chunks < 1:
        raise ParameterError(f"num_chunks must be >= 1, got {num_chunks}")
    sq = a * a
    total = float(sq.sum())
    if total == 0.0:
        log.warning("energy_ratio_by_chunks: zero total energy, returning uniform")
        return np.full(num_chunks, 1.0 / num_chunks)
    base, extra = divmod(a.size, num_chunks)
    out = np.empty(num_chunks)
    pos = 0
    for i in range(num_chunks):
        size = base + (1 if i < extra else 0)
        out[i] = sq[pos : pos + size].sum() / total
        pos += size
    return out


def first_location_of_maximum(series) -> float:
    """Relative index of the first maximum: argmax / n, in [0, 1)."""
    a = np.asarray(series, dtype=np.float64)
    if a.size == 0:
        raise EmptyInputError("first_location_of_maximum of an empty series")
    return float(np.argmax(a)) / a.size


def _series_mean(series) -> float:
    return float(np.mean(series))


def _series_std(series) -> float:
    return float(np.std(series))


def _series_min(series) -> float:
    return float(np.min(series))


def _series_max(series) -> float:
    return float(np.max(series))


def _series_median(series) -> float:
    return float(np.median(series))


@dataclass(frozen=True)
class _FeatureDef:
    compute: callable  # (series, params dict) -> float or 1-D array
    outputs: callable  # (params dict) -> tuple of output suffixes ("",) if scalar
    min_length: callable  # (params dict) -> minimum series length


def _scalar(fn):
    return _FeatureDef(
        compute=lambda s, p: fn(s, **p),
        outputs=lambda p: ("",),
        min_length=lambda p: 1,
    )


def _fft_attr(series, params) -> float:
    re, im, mod = fft_coefficient(series, params["k"])
    return {"real": re, "imag": im, "modulus": mod}[params.get("attr", "modulus")]


_FEATURE_DEFS: dict[str, _FeatureDef] = {
    "fft_coefficient": _FeatureDef(
        compute=_fft_attr,
        outputs=lambda p: ("",),
        min_length=lambda p: p["k"] + 1,
    ),
    "abs_energy": _scalar(lambda s: abs_energy(s)),
    "absolute_changes": _FeatureDef(
        compute=lambda s, p: absolute_changes(s),
        outputs=lambda p: ("",),
        min_length=lambda p: 2,
    ),
    "energy_ratio_by_chunks": _FeatureDef(
        compute=lambda s, p: energy_ratio_by_chunks(s, p["num_chunks"]),
        outputs=lambda p: tuple(f"chunk_{i}" for i in range(p["num_chunks"])),
        min_length=lambda p: 1,
    ),
    "first_location_of_maximum": _scalar(lambda s: first_location_of_maximum(s)),
    "mean": _scalar(lambda s: _series_mean(s)),
    "std": _scalar(lambda s: _series_std(s)),
    "minimum": _scalar(lambda s: _series_min(s)),
    "maximum": _scalar(lambda s: _series_max(s)),
    "median": _scalar(lambda s: _series_median(s)),
}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    params: tuple[tuple[str, int | float | str], ...] = ()
    channels: tuple[str, ...] = CHANNELS
    group: str = "catalog"  # "baseline" marks invented plumbing features

    def __post_init__(self):
        if self.name not in _FEATURE_DEFS:
            raise ParameterError(f"unknown feature {self.name!r}")
        for ch in self.channels:
            if ch not in CHANNELS:
                raise ParameterError(f"unknown channel {ch!r}")
        # canonical param order keeps fingerprints independent of call style
        object.__setattr__(self, "params", tuple(sorted(self.params)))

    @property
    def params_dict(self) -> dict:
        return dict(self.params)

    def canonical(self) -> str:
        params = ",".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.name}({params}) channels={','.join(self.channels)} group={self.group}"


class FeatureRegistry:
    """Ordered, immutable feature set; identity is the fingerprint."""

    def __init__(self, specs: list[FeatureSpec] | tuple[FeatureSpec, ...]):
        self.specs = tuple(specs)
        names = [self._expanded_names(sp) for sp in self.specs]
        flat = [n for group in names for n in group]
        if len(set(flat)) != len(flat):
            raise ParameterError("registry feature names must be unique")
        self.feature_names: tuple[str, ...] = tuple(flat)
        self.fingerprint: str = hashlib.sha256(
            self.canonical_text().encode("utf-8")
        ).hexdigest()

    @staticmethod
    def _expanded_names(sp: FeatureSpec) -> list[str]:
        d = _FEATURE_DEFS[sp.name]
        names = []
        for ch in sp.channels:
            for suffix in d.outputs(sp.params_dict):
                parts = [ch, sp.name]
                if sp.params:
                    parts.append(",".join(f"{k}={v}" for k, v in sp.params))
                if suffix:
                    parts.append(suffix)
                names.append("__".join(parts))
        return names

    @property
    def arity(self) -> int:
        return len(self.feature_names)

    @property
    def min_series_length(self) -> int:
        return max(
            _FEATURE_DEFS[sp.name].min_length(sp.params_dict) for sp in self.specs
        )

    def canonical_text(self) -> str:
        return "\n".join(sp.canonical() for sp in self.specs) + "\n"

    def to_json(self) -> list[dict]:
        return [
            {
                "name": sp.name,
                "params": dict(sp.params),
                "channels": list(sp.channels),
                "group": sp.group,
            }
            for sp in self.specs
        ]

    @classmethod
    def from_json(cls, doc: list[dict]) -> "FeatureRegistry":
        return cls(
            [
                FeatureSpec(
                    name=entry["name"],
                    params=tuple(sorted(entry["params"].items())),
                    channels=tuple(entry["channels"]),
                    group=entry.get("group", "catalog"),
                )
                for entry in doc
            ]
        )

    def __eq__(self, other):
        return isinstance(other, FeatureRegistry) and self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        return f"FeatureRegistry({len(self.specs)} specs, arity={self.arity}, fp={self.fingerprint[:12]})"


def default_registry(channels: tuple[str, ...] = CHANNELS) -> FeatureRegistry:
    """Catalog features (Fourier moduli, energy, changes, energy ratios, peak
    location) plus a baseline statistics set, over all four channels."""
    specs = [
        FeatureSpec("fft_coefficient", (("attr", "modulus"), ("k", k)), channels)
        for k in range(10)
    ]
    specs += [
        FeatureSpec("abs_energy", (), channels),
        FeatureSpec("absolute_changes", (), channels),
        FeatureSpec("energy_ratio_by_chunks", (("num_chunks", 10),), channels),
        FeatureSpec("first_location_of_maximum", (), channels),
    ]
    specs += [
        FeatureSpec(name, (), channels, group="baseline")
        for name in ("mean", "std", "minimum", "maximum", "median")
    ]
    return FeatureRegistry(specs)


def baseline_registry(channels: tuple[str, ...] = CHANNELS) -> FeatureRegistry:
    """Baseline statistics only; used by fixtures that need a small arity."""
    return FeatureRegistry(
        [
            FeatureSpec(name, (), channels, group="baseline")
            for name in ("mean", "std", "minimum", "maximum", "median")
        ]
    )


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    fingerprint: str
    replaced: tuple[str, ...] = ()  # names whose non-finite output became 0

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def flagged(self) -> bool:
        return bool(self.replaced)


def _window_channels(window: Window) -> dict[str, np.ndarray]:
    s = window.samples
    return {
        "x": s[:, 0],
        "y": s[:, 1],
        "z": s[:, 2],
        "rms": np.sqrt((s * s).sum(axis=1)),
    }


def extract_features(window: Window, registry: FeatureRegistry) -> FeatureVector:
    """Apply every registry feature to every configured channel, in order."""
    if len(window) < registry.min_series_length:
        raise ContractError(
            f"window of {len(window)} samples is shorter than the registry "
            f"minimum {registry.min_series_length}"
        )
    channels = _window_channels(window)
    values = np.empty(registry.arity)
    pos = 0
    for sp in registry.specs:
        d = _FEATURE_DEFS[sp.name]
        params = sp.params_dict
        width = len(d.outputs(params))
        for ch in sp.channels:
            try:
                out = d.compute(channels[ch], params)
            except ParameterError as exc:
                raise ParameterError(f"{sp.name} on channel {ch}: {exc}") from None
            values[pos : pos + width] = out
            pos += width
    replaced = ()
    bad = ~np.isfinite(values)
    if bad.any():
        replaced = tuple(np.asarray(registry.feature_names)[bad])
        log.warning("non-finite feature values replaced by 0: %s", ", ".join(replaced))
        values[bad] = 0.0
    return FeatureVector(values=values, fingerprint=registry.fingerprint, replaced=replaced)


def extract_matrix(
    windows: list[Window], registry: FeatureRegistry, workers: int = 1
) -> np.ndarray:
    """Feature matrix, one row per window; invariant to the worker count."""
    if workers <= 1:
        rows = [extract_features(w, registry).values for w in windows]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda w: extract_features(w, registry).values, windows))
    if not rows:
        return np.empty((0, registry.arity))
    return np.vstack(rows)
