"""The composed detector: threshold gate, feature extraction, tree ensemble.

FallPipeline owns everything fitted from training windows (threshold, the
optional projection, the model), so evaluation code cannot leak test data
into training by construction. Prediction runs the same three stages the
deployed system runs: a window whose peak magnitude stays below the gate is
an ADL without ever reaching the model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .boosting import FedtModel, FedtParams, TrainingSet, classify, classify_matrix, train
from .errors import CannotTrainError
from .features import FeatureRegistry, default_registry, extract_features, extract_matrix
from .gate import Threshold, fit_threshold
from .pca import PcaProjection, pca_apply, pca_fit
from .signals import Label, Window, peak_rms

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    params: FedtParams = field(default_factory=FedtParams)
    registry: FeatureRegistry = field(default_factory=default_registry)
    safety_factor: float = 0.9
    use_gate: bool = True
    pca_variance: float | None = None
    extract_workers: int = 1

    def snapshot(self) -> dict:
        from dataclasses import asdict

        return {
            "params": asdict(self.params),
            "registry_fingerprint": self.registry.fingerprint,
            "registry_arity": self.registry.arity,
            "safety_factor": self.safety_factor,
            "use_gate": self.use_gate,
            "pca_variance": self.pca_variance,
        }


class FallPipeline:
    def __init__(self, config: PipelineConfig | None = None):
        self.config = config or PipelineConfig()
        self.threshold: Threshold | None = None
        self.projection: PcaProjection | None = None
        self.model: FedtModel | None = None

    def fit(
        self,
        windows: list[Window],
        features: np.ndarray | None = None,
        objective_log: list | None = None,
    ) -> "FallPipeline":
        """Fit threshold, optional projection and model from training windows.

        `features` may carry a precomputed extraction of exactly these
        windows (extraction has no training statistics, so sharing it across
        folds leaks nothing).
        """
        cfg = self.config
        if any(w.label is None for w in windows):
            raise CannotTrainError("training windows must all be labeled")
        falls = [w for w in windows if w.label is Label.FALL]
        if not falls or len(falls) == len(windows):
            raise CannotTrainError("training windows must contain both classes")
        self.threshold = fit_threshold(falls, cfg.safety_factor)
        if features is None:
            features = extract_matrix(windows, cfg.registry, cfg.extract_workers)
        y = np.asarray([1.0 if w.label is Label.FALL else 0.0 for w in windows])
        fingerprint = cfg.registry.fingerprint
        if cfg.pca_variance is not None:
            self.projection = pca_fit(features, cfg.pca_variance, fingerprint)
            features = pca_apply(self.projection, features)
            fingerprint = self.projection.fingerprint
            log.info(
                "projection keeps %d of %d dimensions (%.4f of variance)",
                self.projection.output_dim,
                cfg.registry.arity,
                self.projection.retained_variance,
            )
        self.model = train(
            TrainingSet(features, y, fingerprint), cfg.params, objective_log
        )
        return self

    def _require_fitted(self):
        if self.model is None or self.threshold is None:
            raise CannotTrainError("pipeline is not fitted")

    def predict(
        self, windows: list[Window], features: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """(0/1 predictions, fall probabilities) per window, gate included."""
        self._require_fitted()
        cfg = self.config
        if features is None:
            features = extract_matrix(windows, cfg.registry, cfg.extract_workers)
        fingerprint = cfg.registry.fingerprint
        if self.projection is not None:
            features = pca_apply(self.projection, features)
            fingerprint = self.projection.fingerprint
        labels, probs = classify_matrix(self.model, features, fingerprint)
        if cfg.use_gate:
            stays_mobile = np.asarray([peak_rms(w) for w in windows]) < self.threshold.tau
            labels = np.where(stays_mobile, np.int8(0), labels)
            probs = np.where(stays_mobile, 0.0, probs)
        return labels, probs

    def classify_window(self, window: Window) -> tuple[Label, float]:
        """Single-window path, identical staging to predict()."""
        self._require_fitted()
        if self.config.use_gate and peak_rms(window) < self.threshold.tau:
            return Label.ADL, 0.0
        fv = extract_features(window, self.config.registry)
        if self.projection is not None:
            reduced = pca_apply(self.projection, fv.values)
            return classify(self.model, reduced)
        return classify(self.model, fv)
