"""Metrics, stratified cross-validation, PCA ablation, cross-device runs.

Falls are the positive class. Fold aggregation pools confusion counts across
folds before computing ratios (single numbers per dataset, not averaged
per-fold ratios). Zero-denominator metrics come back as 0 with a degenerate
flag so aggregation stays total.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CannotEvaluateError, ContractError
from .features import extract_matrix
from .pca import PcaProjection, pca_apply, pca_fit  # evalkit surface
from .pipeline import FallPipeline, PipelineConfig
from .signals import Label, Window

log = logging.getLogger(__name__)

__all__ = [
    "ConfusionCounts",
    "MetricValues",
    "MetricsReport",
    "confusion",
    "metrics",
    "stratified_folds",
    "subject_folds",
    "kfold_evaluate",
    "pca_fit",
    "pca_apply",
    "PcaProjection",
    "pca_ablation",
    "cross_device_eval",
]


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


def _as01(values) -> np.ndarray:
    return np.asarray(
        [1 if v is Label.FALL or v == 1 else 0 for v in values], dtype=np.int8
    )


def confusion(labels, predictions) -> ConfusionCounts:
    """Standard counts with FALL as the positive class."""
    y = _as01(labels)
    p = _as01(predictions)
    if y.shape != p.shape:
        raise ContractError(f"length mismatch: {y.shape[0]} labels, {p.shape[0]} predictions")
    return ConfusionCounts(
        tp=int(((y == 1) & (p == 1)).sum()),
        fp=int(((y == 0) & (p == 1)).sum()),
        tn=int(((y == 0) & (p == 0)).sum()),
        fn=int(((y == 1) & (p == 0)).sum()),
    )


@dataclass
class MetricValues:
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    degenerate: tuple[str, ...] = ()


def metrics(c: ConfusionCounts) -> MetricValues:
    """sensitivity TP/(TP+FN), specificity TN/(TN+FP), precision TP/(TP+FP),
    f1 = 2*precision*sensitivity/(precision+sensitivity)."""
    degenerate = []

    def ratio(num: int, denom: int, name: str) -> float:
        if denom == 0:
            degenerate.append(name)
            return 0.0
        return num / denom

    sensitivity = ratio(c.tp, c.tp + c.fn, "sensitivity")
    specificity = ratio(c.tn, c.tn + c.fp, "specificity")
    precision = ratio(c.tp, c.tp + c.fp, "precision")
    if precision + sensitivity == 0:
        degenerate.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    return MetricValues(sensitivity, specificity, precision, f1, tuple(degenerate))


@dataclass
class FoldResult:
    fold: int
    counts: ConfusionCounts
    values: MetricValues


@dataclass
class MetricsReport:
    dataset_id: str
    counts: ConfusionCounts
    values: MetricValues
    per_fold: list[FoldResult] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "sensitivity": self.values.sensitivity,
            "specificity": self.values.specificity,
            "precision": self.values.precision,
            "f1": self.values.f1,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "tn": self.counts.tn,
            "fn": self.counts.fn,
            "degenerate": list(self.values.degenerate),
            "per_fold": [
                {
                    "fold": fr.fold,
                    "tp": fr.counts.tp,
                    "fp": fr.counts.fp,
                    "tn": fr.counts.tn,
                    "fn": fr.counts.fn,
                    "sensitivity": fr.values.sensitivity,
                    "specificity": fr.values.specificity,
                    "precision": fr.values.precision,
                    "f1": fr.values.f1,
                }
                for fr in self.per_fold
            ],
            "config": self.config,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"dataset: {self.dataset_id or '(unnamed)'}",
            f"windows: {self.counts.total}  "
            f"(tp={self.counts.tp} fp={self.counts.fp} tn={self.counts.tn} fn={self.counts.fn})",
            f"sensitivity: {self.values.sensitivity:8.4%}",
            f"specificity: {self.values.specificity:8.4%}",
            f"precision:   {self.values.precision:8.4%}",
            f"f1-score:    {self.values.f1:8.4%}",
        ]
        if self.values.degenerate:
            lines.append(f"degenerate:  {', '.join(self.values.degenerate)}")
        if self.per_fold:
            lines.append("fold  tp   fp   tn    fn   sens     spec")
            for fr in self.per_fold:
                lines.append(
                    f"{fr.fold:>4} {fr.counts.tp:>4} {fr.counts.fp:>4} "
                    f"{fr.counts.tn:>5} {fr.counts.fn:>4} "
                    f"{fr.values.sensitivity:8.4f} {fr.values.specificity:8.4f}"
                )
        return "\n".join(lines) + "\n"


def stratified_folds(y01: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Shuffled stratified split; every index lands in exactly one test fold.

    Each class is dealt round-robin starting at a class-dependent fold so
    remainders spread instead of piling onto fold 0.
    """
    y01 = np.asarray(y01)
    if k < 2:
        raise CannotEvaluateError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.nonzero(y01 == cls)[0]
        if idx.size < k:
            raise CannotEvaluateError(
                f"class {cls} has {idx.size} windows, fewer than k={k}; "
                "every fold must contain both classes"
            )
        for i, ix in enumerate(rng.permutation(idx)):
            folds[(i + cls) % k].append(int(ix))
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def subject_folds(
    y01: np.ndarray, subjects: list[str], k: int, seed: int
) -> list[np.ndarray]:
    """Split by subject: all of one subject's windows share a fold.

    Subjects are assigned greedily (largest first) to the fold currently
    lightest in falls, then in windows; seed shuffles equal-sized subjects.
    """
    if k < 2:
        raise CannotEvaluateError("k must be >= 2")
    y01 = np.asarray(y01)
    by_subject: dict[str, list[int]] = {}
    for i, s in enumerate(subjects):
        by_subject.setdefault(s, []).append(i)
    if len(by_subject) < k:
        raise CannotEvaluateError(
            f"{len(by_subject)} subjects cannot fill k={k} folds"
        )
    rng = np.random.default_rng(seed)
    names = sorted(by_subject)
    rng.shuffle(names)
    names.sort(key=lambda s: -len(by_subject[s]))
    fold_falls = [0] * k
    fold_sizes = [0] * k
    folds: list[list[int]] = [[] for _ in range(k)]
    for name in names:
        idx = by_subject[name]
        falls = int(y01[idx].sum())
        f = min(range(k), key=lambda j: (fold_falls[j], fold_sizes[j], j))
        folds[f].extend(idx)
        fold_falls[f] += falls
        fold_sizes[f] += len(idx)
    result = [np.asarray(sorted(f), dtype=np.int64) for f in folds]
    for f, test_idx in enumerate(result):
        if test_idx.size == 0 or len(set(y01[test_idx])) < 2:
            log.warning("subject fold %d lacks one class; metrics may degenerate", f)
    return result


def kfold_evaluate(
    windows: list[Window],
    k: int = 10,
    config: PipelineConfig | None = None,
    seed: int = 7,
    split_by: str = "window",
    dataset_id: str = "",
) -> MetricsReport:
    """Stratified k-fold: fit threshold + model on train folds only, classify
    the held-out fold, pool confusion counts, then compute metrics."""
    config = config or PipelineConfig()
    if any(w.label is None for w in windows):
        raise CannotEvaluateError("evaluation windows must all be labeled")
    y = _as01([w.label for w in windows])
    if y.sum() == 0 or y.sum() == y.size:
        raise CannotEvaluateError("evaluation needs both classes present")
    features = extract_matrix(windows, config.registry, config.extract_workers)
    if split_by == "subject":
        folds = subject_folds(y, [w.origin.subject for w in windows], k, seed)
    else:
        folds = stratified_folds(y, k, seed)
    pooled = ConfusionCounts()
    per_fold = []
    all_idx = np.arange(len(windows))
    for f, test_idx in enumerate(folds):
        train_mask = np.ones(len(windows), dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        pipe = FallPipeline(config).fit(
            [windows[i] for i in train_idx], features[train_idx]
        )
        pred, _ = pipe.predict([windows[i] for i in test_idx], features[test_idx])
        counts = confusion(y[test_idx], pred)
        per_fold.append(FoldResult(f, counts, metrics(counts)))
        pooled = pooled + counts
        log.info("fold %d/%d: %s", f + 1, k, per_fold[-1].values)
    return MetricsReport(
        dataset_id=dataset_id,
        counts=pooled,
        values=metrics(pooled),
        per_fold=per_fold,
        config=dict(config.snapshot(), k=k, split_by=split_by),
        seed=seed,
    )


def pca_ablation(
    windows: list[Window],
    config: PipelineConfig | None = None,
    variance_fraction: float = 0.95,
    k: int = 10,
    seed: int = 7,
    dataset_id: str = "",
) -> tuple[MetricsReport, MetricsReport]:
    """Identical pipeline with and without the projection (fit on train folds
    only); returns (without, with) reports side by side."""
    config = config or PipelineConfig()
    plain_cfg = replace(config, pca_variance=None)
    pca_cfg = replace(config, pca_variance=variance_fraction)
    without = kfold_evaluate(windows, k, plain_cfg, seed, dataset_id=dataset_id)
    with_pca = kfold_evaluate(windows, k, pca_cfg, seed, dataset_id=f"{dataset_id}+pca")
    return without, with_pca


def cross_device_eval(
    train_windows: list[Window],
    test_windows: list[Window],
    config: PipelineConfig | None = None,
    dataset_id: str = "",
) -> MetricsReport:
    """Train on source-device windows only, evaluate on the target device."""
    config = config or PipelineConfig()
    pipe = FallPipeline(config).fit(train_windows)
    pred, _ = pipe.predict(test_windows)
    y = _as01([w.label for w in test_windows])
    counts = confusion(y, pred)
    return MetricsReport(
        dataset_id=dataset_id,
        counts=counts,
        values=metrics(counts),
        config=dict(
            config.snapshot(),
            train_windows=len(train_windows),
            test_windows=len(test_windows),
        ),
    )
