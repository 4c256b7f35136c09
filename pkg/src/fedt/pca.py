"""Principal-component projection with a retained-variance budget.

Features are z-scored with training statistics before the eigendecomposition
(raw feature scales differ by orders of magnitude, energy terms would
otherwise dominate); zero-variance columns are dropped with a flag. The
projection keeps the smallest number of leading components whose eigenvalue
mass reaches the requested fraction.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

log = logging.getLogger(__name__)


@dataclass
class PcaProjection:
    mean: np.ndarray  # per kept column
    scale: np.ndarray  # stds of kept columns
    components: np.ndarray  # (output_dim, n_kept), orthonormal rows
    kept_columns: np.ndarray  # indices into the original arity
    retained_variance: float
    requested_fraction: float
    source_fingerprint: str = ""

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.source_fingerprint.encode())
        h.update(np.asarray(self.kept_columns, dtype=np.int64).tobytes())
        for arr in (self.mean, self.scale, self.components):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


def pca_fit(
    X: np.ndarray, variance_fraction: float, source_fingerprint: str = ""
) -> PcaProjection:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ContractError("pca_fit needs a (n >= 2, arity) matrix")
    if not (0.0 < variance_fraction <= 1.0):
        raise ContractError("variance_fraction must be in (0, 1]")
    std = X.std(axis=0)
    kept = np.nonzero(std > 0.0)[0]
    if kept.size == 0:
        raise ContractError("all feature columns are constant; nothing to project")
    if kept.size < X.shape[1]:
        log.warning(
            "dropping %d zero-variance feature columns before the eigendecomposition",
            X.shape[1] - kept.size,
        )
    mean = X[:, kept].mean(axis=0)
    scale = std[kept]
    Z = (X[:, kept] - mean) / scale
    cov = Z.T @ Z / (X.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    total = float(eigenvalues.sum())
    cumulative = np.cumsum(eigenvalues)
    meets = np.nonzero(cumulative >= variance_fraction * total)[0]
    d = int(meets[0]) + 1 if meets.size else eigenvalues.size
    return PcaProjection(
        mean=mean,
        scale=scale,
        components=eigenvectors[:, order[:d]].T.copy(),
        kept_columns=kept,
        retained_variance=float(cumulative[d - 1] / total) if total > 0 else 1.0,
        requested_fraction=variance_fraction,
        source_fingerprint=source_fingerprint,
    )


def pca_apply(proj: PcaProjection, x: np.ndarray) -> np.ndarray:
    """Project one vector or a matrix of rows onto the retained components."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = x[None, :] if single else x
    if rows.shape[1] < proj.kept_columns.max() + 1:
        raise ContractError(
            f"vector arity {rows.shape[1]} is smaller than the projection's source arity"
        )
    Z = (rows[:, proj.kept_columns] - proj.mean) / proj.scale
    out = Z @ proj.components.T
    return out[0] if single else out
