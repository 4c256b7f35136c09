"""Dataset ingestion adapters.

Adapters are registered by id and turn an on-disk layout into labeled
TriaxialRecording objects. The generic adapter reads delimited text (one
sample per line, x,y,z with an optional leading timestamp column, `#`
comments); per-dataset adapters know the public datasets' file layouts.
Directory ingestion walks files sorted by path so output order is
deterministic.
"""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .errors import IngestError, UnknownAdapterError
from .signals import Label, RecordingMeta, TriaxialRecording

log = logging.getLogger(__name__)

Adapter = Callable[..., list[TriaxialRecording]]

_ADAPTERS: dict[str, Adapter] = {}


def register_adapter(name: str):
    def deco(fn: Adapter) -> Adapter:
        _ADAPTERS[name] = fn
        return fn

    return deco


def adapter_ids() -> list[str]:
    return sorted(_ADAPTERS)


def ingest(path, adapter: str, **options) -> list[TriaxialRecording]:
    """Read recordings from `path` using the named adapter."""
    if adapter not in _ADAPTERS:
        raise UnknownAdapterError(
            f"unknown adapter {adapter!r}; registered: {', '.join(adapter_ids())}"
        )
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file or directory")
    return _ADAPTERS[adapter](path, **options)


def _walk_files(path: Path, suffixes: tuple[str, ...]) -> Iterator[Path]:
    if path.is_file():
        yield path
        return
    for p in sorted(path.rglob("*")):
        if p.is_file() and p.suffix.lower() in suffixes:
            yield p


def _infer_label_from_path(path: Path) -> Label | None:
    parts = [p.lower() for p in path.parts]
    name = path.stem.lower()
    for token in parts + [name]:
        if token in ("fall", "falls") or token.startswith("fall_"):
            return Label.FALL
        if token in ("adl", "adls") or token.startswith("adl_"):
            return Label.ADL
    return None


def _parse_delimited(
    path: Path,
    delimiter: str,
    value_columns: slice | None = None,
) -> np.ndarray:
    """Parse one sample per line; returns (n, 3) float64.

    Column layout is fixed per file: 3 columns are x,y,z; 4 columns are
    t,x,y,z with t skipped. A row whose column count differs from the first
    data row is reported with file and line number.
    """
    rows: list[tuple[float, float, float]] = []
    ncols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip().rstrip(";")
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(delimiter)]
            if ncols is None:
                ncols = len(fields)
                if value_columns is None:
                    if ncols == 3:
                        value_columns = slice(0, 3)
                    elif ncols == 4:
                        value_columns = slice(1, 4)  # leading timestamp skipped
                    else:
                        raise IngestError(
                            f"{path}:{lineno}: expected 3 or 4 columns, got {ncols}"
                        )
            elif len(fields) != ncols:
                raise IngestError(
                    f"{path}:{lineno}: inconsistent column count "
                    f"({len(fields)} vs {ncols} in first data row)"
                )
            picked = fields[value_columns]
            if len(picked) != 3:
                raise IngestError(
                    f"{path}:{lineno}: need 3 value columns, got {len(picked)}"
                )
            try:
                rows.append((float(picked[0]), float(picked[1]), float(picked[2])))
            except ValueError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise IngestError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


@register_adapter("generic")
def ingest_generic(
    path: Path,
    delimiter: str = ",",
    sample_rate_hz: float = 50.0,
    unit: str = "g",
    dataset: str = "generic",
    label: str | None = None,
) -> list[TriaxialRecording]:
    """Delimited text: columns x,y,z (optional leading timestamp), # comments.

    Labels come from the `label` option ("fall"/"adl") or, when absent, from
    a fall/adl token in the file or directory name.
    """
    forced = {"fall": Label.FALL, "adl": Label.ADL, None: None}[label]
    recordings = []
    for p in _walk_files(path, (".csv", ".txt", ".dat")):
        lab = forced if forced is not None else _infer_label_from_path(p)
        recordings.append(
            TriaxialRecording(
                recording_id=str(p),
                samples=_parse_delimited(p, delimiter),
                sample_rate_hz=sample_rate_hz,
                meta=RecordingMeta(dataset=dataset, subject=p.parent.name, label=lab, unit=unit),
            )
        )
    if not recordings:
        raise IngestError(f"{path}: no ingestible files")
    return recordings


# SisFall trial files: "D01_SA01_R01.txt" (ADL) / "F01_SA01_R01.txt" (fall),
# 9 comma-separated integer columns; the first three are the ADXL345 counts.
_SISFALL_NAME = re.compile(r"^([DF])(\d+)_(S[AE]\d+)_R(\d+)$", re.IGNORECASE)
# counts -> g for a +/-16 g, 13-bit part
_SISFALL_SCALE = 2.0 * 16.0 / 2.0**13


@register_adapter("sisfall")
def ingest_sisfall(path: Path, sample_rate_hz: float = 200.0) -> list[TriaxialRecording]:
    recordings = []
    for p in _walk_files(path, (".txt",)):
        m = _SISFALL_NAME.match(p.stem)
        if not m:
            log.debug("skipping non-trial file %s", p)
            continue
        kind, code, subject, trial = m.groups()
        raw = _parse_delimited(p, ",", value_columns=slice(0, 3))
        recordings.append(
            TriaxialRecording(
                recording_id=str(p),
                samples=raw * _SISFALL_SCALE,
                sample_rate_hz=sample_rate_hz,
                meta=RecordingMeta(
                    dataset="sisfall",
                    subject=subject.upper(),
                    device="adxl345",
                    activity=f"{kind.upper()}{code}",
                    label=Label.FALL if kind.upper() == "F" else Label.ADL,
                    unit="g",
                ),
            )
        )
    if not recordings:
        raise IngestError(f"{path}: no SisFall trial files found")
    return recordings


# MobiAct v2 annotated CSVs carry a header with acc_x/acc_y/acc_z columns
# (m/s^2); the activity code leads the file name, e.g. "FOL_1_1_annotated.csv".
_MOBIACT_FALL_CODES = {"FOL", "FKL", "BSC", "SDL"}


@register_adapter("mobiact")
def ingest_mobiact(path: Path, sample_rate_hz: float = 200.0) -> list[TriaxialRecording]:
    recordings = []
    for p in _walk_files(path, (".csv", ".txt")):
        with open(p, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            cols = {name.strip().lower(): i for i, name in enumerate(header)}
            needed = ("acc_x", "acc_y", "acc_z")
            if not all(c in cols for c in needed):
                log.debug("skipping %s: no acc_x/acc_y/acc_z header", p)
                continue
            idx = [cols[c] for c in needed]
            rows = []
            for lineno, raw in enumerate(fh, start=2):
                line = raw.strip()
                if not line:
                    continue
                fields = line.split(",")
                if len(fields) != len(header):
                    raise IngestError(
                        f"{p}:{lineno}: inconsistent column count "
                        f"({len(fields)} vs {len(header)} in header)"
                    )
                try:
                    rows.append(tuple(float(fields[i]) for i in idx))
                except ValueError as exc:
                    raise IngestError(f"{p}:{lineno}: {exc}") from None
        if not rows:
            raise IngestError(f"{p}: no data rows")
        code = p.stem.split("_")[0].upper()
        parts = p.stem.split("_")
        subject = parts[1] if len(parts) > 1 else ""
        recordings.append(
            TriaxialRecording(
                recording_id=str(p),
                samples=np.asarray(rows, dtype=np.float64),
                sample_rate_hz=sample_rate_hz,
                meta=RecordingMeta(
                    dataset="mobiact",
                    subject=subject,
                    device="smartphone",
                    activity=code,
                    label=Label.FALL if code in _MOBIACT_FALL_CODES else Label.ADL,
                    unit="m/s2",
                ),
            )
        )
    if not recordings:
        raise IngestError(f"{path}: no MobiAct files found")
    return recordings


# The MMsys/Cogent capture exports delimited text per trial with a FALL/ADL
# token in the path; acceleration columns default to t,x,y,z order.
@register_adapter("mmsys")
def ingest_mmsys(
    path: Path,
    delimiter: str = ",",
    sample_rate_hz: float = 100.0,
    unit: str = "g",
) -> list[TriaxialRecording]:
    recordings = []
    for p in _walk_files(path, (".csv", ".txt", ".dat")):
        lab = _infer_label_from_path(p)
        if lab is None:
            log.debug("skipping %s: no FALL/ADL token in path", p)
            continue
        recordings.append(
            TriaxialRecording(
                recording_id=str(p),
                samples=_parse_delimited(p, delimiter),
                sample_rate_hz=sample_rate_hz,
                meta=RecordingMeta(
                    dataset="mmsys",
                    subject=p.parent.name,
                    label=lab,
                    unit=unit,
                ),
            )
        )
    if not recordings:
        raise IngestError(f"{path}: no MMsys files found")
    return recordings


@register_adapter("synthetic")
def ingest_synthetic(path: Path) -> list[TriaxialRecording]:
    """Seeded generator driven by a JSON spec file; repeatable across runs."""
    from .synthetic import GeneratorSpec, generate_recordings

    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"{path}: not a generator spec: {exc}") from None
    spec = GeneratorSpec(**payload)
    falls, adls = generate_recordings(spec)
    return falls + adls
