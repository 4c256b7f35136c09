"""Regularized additive tree ensemble: training, prediction, objective.

The ensemble prediction is the base score plus the learning-rate-scaled sum
of tree scores. Training minimizes binary logistic loss plus a complexity
penalty of alpha per leaf and beta times the squared leaf weight; note the
penalty is beta * w^2 (not beta/2 * w^2), so closed forms carry 2*beta:
leaf weight -G/(H + 2*beta), gain terms G^2/(H + 2*beta). Trees grow by
greedy exact split search over midpoints of consecutive distinct feature
values; value == threshold routes right; gain ties resolve to the lowest
feature index, then the lowest threshold. Training is deterministic for a
fixed training set and parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    CannotTrainError,
    ContractError,
    DegenerateLeafError,
    DegenerateSplitError,
    FingerprintMismatchError,
)
from .features import FeatureVector
from .signals import Label

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FedtParams:
    n_rounds: int = 100  # number of trees
    learning_rate: float = 0.3
    alpha: float = 0.0  # per-leaf penalty
    beta: float = 1.0  # squared-leaf-weight penalty
    max_depth: int = 6
    min_child_hessian: float = 1.0
    scale_pos_weight: float | None = None  # None: n_negative / n_positive
    cutoff: float = 0.5

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ContractError("n_rounds must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ContractError("alpha and beta must be non-negative")
        if self.max_depth < 1:
            raise ContractError("max_depth must be >= 1")


@dataclass
class RegressionTree:
    """Flat binary tree; feature[i] == -1 marks node i as a leaf."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64, defined for internal nodes
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    weight: np.ndarray  # float64, defined for leaves

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    @property
    def leaf_weights(self) -> np.ndarray:
        return self.weight[self.feature < 0]

    @property
    def max_feature(self) -> int:
        internal = self.feature[self.feature >= 0]
        return int(internal.max()) if internal.size else -1


@dataclass
class TrainingSet:
    features: np.ndarray  # (n, arity) float64
    labels: np.ndarray  # (n,) float64 in {0, 1}; 1 = FALL
    fingerprint: str = ""

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ContractError("features must be (n, arity) with n matching labels")

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector], labels) -> "TrainingSet":
        if not vectors:
            raise ContractError("empty training set")
        fp = vectors[0].fingerprint
        if any(v.fingerprint != fp for v in vectors):
            raise FingerprintMismatchError("mixed registry fingerprints in training set")
        y = np.asarray(
            [1.0 if lab is Label.FALL or lab == 1 else 0.0 for lab in labels]
        )
        return cls(np.vstack([v.values for v in vectors]), y, fp)


@dataclass
class FedtModel:
    trees: list[RegressionTree]
    params: FedtParams
    base_score: float
    fingerprint: str
    model_id: str = "fedt"

    def __post_init__(self):
        if len(self.trees) < 1:
            raise ContractError("a model must contain at least one tree")

    @property
    def total_leaves(self) -> int:
        return sum(t.n_leaves for t in self.trees)

    @property
    def sum_squared_leaf_weights(self) -> float:
        return float(sum((t.leaf_weights**2).sum() for t in self.trees))


def leaf_weight(g_sum: float, h_sum: float, beta: float) -> float:
    """Minimizer -G / (H + 2*beta) of the penalized leaf objective
    G*w + H*w^2/2 + beta*w^2."""
    denom = h_sum + 2.0 * beta
    if denom <= 0.0:
        raise DegenerateLeafError(f"leaf objective has no minimizer (H + 2*beta = {denom})")
    return -g_sum / denom


def split_gain(
    g_sum: float,
    h_sum: float,
    g_left: float,
    h_left: float,
    alpha: float,
    beta: float,
) -> float:
    """Objective improvement of splitting a node, minus the alpha leaf cost."""
    g_right = g_sum - g_left
    h_right = h_sum - h_left
    two_beta = 2.0 * beta
    dl, dr, dp = h_left + two_beta, h_right + two_beta, h_sum + two_beta
    if dl <= 0.0 or dr <= 0.0 or dp <= 0.0:
        raise DegenerateSplitError(
            f"split gain undefined: denominators ({dl}, {dr}, {dp}) must be positive"
        )
    return 0.5 * (g_left * g_left / dl + g_right * g_right / dr - g_sum * g_sum / dp) - alpha


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def predict_tree(tree: RegressionTree, x: np.ndarray) -> float:
    """Route one vector to a leaf; value == threshold goes right."""
    node = 0
    while tree.feature[node] >= 0:
        if tree.feature[node] >= x.shape[0]:
            raise ContractError(
                f"tree expects feature {tree.feature[node]}, vector has {x.shape[0]}"
            )
        if x[tree.feature[node]] < tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return float(tree.weight[node])


def _tree_predict_matrix(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = tree.feature[node]
        active = np.nonzero(feat >= 0)[0]
        if active.size == 0:
            break
        cur = node[active]
        goes_left = X[active, tree.feature[cur]] < tree.threshold[cur]
        node[active] = np.where(goes_left, tree.left[cur], tree.right[cur])
    return tree.weight[node]


def _check_fingerprint(model: FedtModel, fingerprint: str | None):
    if fingerprint is not None and fingerprint != model.fingerprint:
        raise FingerprintMismatchError(
            f"feature fingerprint {fingerprint[:12]}... does not match the "
            f"model's {model.fingerprint[:12]}..."
        )


def predict_margin(model: FedtModel, x: FeatureVector | np.ndarray) -> float:
    """base score + learning_rate * sum of tree scores; exactly additive."""
    if isinstance(x, FeatureVector):
        _check_fingerprint(model, x.fingerprint)
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    s = 0.0
    for tree in model.trees:
        s += predict_tree(tree, x)
    return model.base_score + model.params.learning_rate * s


def predict_margin_matrix(
    model: FedtModel, X: np.ndarray, fingerprint: str | None = None
) -> np.ndarray:
    _check_fingerprint(model, fingerprint)
    X = np.ascontiguousarray(X, dtype=np.float64)
    acc = np.zeros(X.shape[0])
    for tree in model.trees:
        acc += _tree_predict_matrix(tree, X)
    return model.base_score + model.params.learning_rate * acc


def classify(model: FedtModel, x: FeatureVector | np.ndarray) -> tuple[Label, float]:
    """Logistic probability of a fall and the cutoff decision."""
    p = sigmoid(predict_margin(model, x))
    return (Label.FALL if p >= model.params.cutoff else Label.ADL), p


def classify_matrix(
    model: FedtModel, X: np.ndarray, fingerprint: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(labels as 0/1 ints, probabilities) for each row."""
    p = sigmoid(predict_margin_matrix(model, X, fingerprint))
    return (p >= model.params.cutoff).astype(np.int8), p


def logistic_loss(margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-example binary cross entropy at margin values."""
    return np.logaddexp(0.0, margins) - labels * margins


def objective(
    model: FedtModel,
    data: TrainingSet,
    alpha: float | None = None,
    beta: float | None = None,
) -> float:
    """Total loss: sum of logistic losses plus the per-tree complexity
    penalty alpha*K + beta*sum(w^2)."""
    alpha = model.params.alpha if alpha is None else alpha
    beta = model.params.beta if beta is None else beta
    margins = predict_margin_matrix(model, data.features)
    loss = float(logistic_loss(margins, data.labels).sum())
    penalty = sum(
        alpha * t.n_leaves + beta * float((t.leaf_weights**2).sum()) for t in model.trees
    )
    return loss + penalty


def _best_split(X, g, h, orders, alpha, two_beta, min_child_hessian, total_g, total_h):
    """Scan all features; ties resolve to the lowest feature index, then the
    lowest threshold (the kernel keeps the first maximum)."""
    best = None
    for j in range(orders.shape[0]):
        o = orders[j]
        res = kernels.scan_sorted_split(
            np.ascontiguousarray(X[o, j]),
            np.ascontiguousarray(g[o]),
            np.ascontiguousarray(h[o]),
            total_g,
            total_h,
            alpha,
            two_beta,
            min_child_hessian,
        )
        if res is None:
            continue
        if best is None or res[0] > best[0]:
            best = (res[0], j, res[1])
    return best


def _grow_tree(X, g, h, params: FedtParams) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    weight: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        return len(feature) - 1

    two_beta = 2.0 * params.beta
    # Columns are sorted once per tree; partitions below keep each row of
    # `orders` sorted (stable, ties by original index), so no node re-sorts.
    root_orders = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    goes_left_global = np.zeros(X.shape[0], dtype=bool)
    stack = [(np.arange(X.shape[0]), root_orders, 0, new_node())]
    while stack:
        idx, orders, depth, node = stack.pop()
        g_node = np.ascontiguousarray(g[idx])
        h_node = np.ascontiguousarray(h[idx])
        total_g = kernels.sequential_sum(g_node)
        total_h = kernels.sequential_sum(h_node)
        best = None
        if depth < params.max_depth and idx.size >= 2:
            best = _best_split(
                X, g, h, orders, params.alpha, two_beta,
                params.min_child_hessian, total_g, total_h,
            )
        if best is None or best[0] <= 0.0:
            denom = total_h + two_beta
            weight[node] = -total_g / denom if denom > 0.0 else 0.0
            continue
        _, j, thr = best
        goes_left = X[idx, j] < thr
        left_idx = idx[goes_left]
        right_idx = idx[~goes_left]
        goes_left_global[left_idx] = True
        picked = goes_left_global[orders]
        left_orders = orders[picked].reshape(orders.shape[0], left_idx.size)
        right_orders = orders[~picked].reshape(orders.shape[0], right_idx.size)
        goes_left_global[left_idx] = False
        feature[node] = j
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right_idx, right_orders, depth + 1, right[node]))
        stack.append((left_idx, left_orders, depth + 1, left[node]))
    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        weight=np.asarray(weight),
    )


def train(
    data: TrainingSet,
    params: FedtParams | None = None,
    objective_log: list | None = None,
) -> FedtModel:
    """Second-order boosting: per round, grow one tree on the logistic
    gradients/hessians at the current margins and add it scaled by the
    learning rate. Deterministic for fixed data order and parameters."""
    params = params or FedtParams()
    X, y = data.features, data.labels
    if not np.isfinite(X).all():
        raise ContractError("training features must be finite")
    n_pos = int((y == 1.0).sum())
    n_neg = int((y == 0.0).sum())
    if n_pos == 0 or n_neg == 0:
        raise CannotTrainError(
            f"training needs both classes (got {n_pos} falls, {n_neg} ADLs)"
        )
    pos_weight = (
        params.scale_pos_weight if params.scale_pos_weight is not None else n_neg / n_pos
    )
    sample_weight = np.where(y == 1.0, pos_weight, 1.0)
    prevalence = n_pos / (n_pos + n_neg)
    base_score = math.log(prevalence / (1.0 - prevalence))
    margins = np.full(X.shape[0], base_score)
    trees: list[RegressionTree] = []
    penalty = 0.0
    for _ in range(params.n_rounds):
        p = sigmoid(margins)
        grad = (p - y) * sample_weight
        hess = p * (1.0 - p) * sample_weight
        tree = _grow_tree(X, grad, hess, params)
        trees.append(tree)
        margins = margins + params.learning_rate * _tree_predict_matrix(tree, X)
        if objective_log is not None:
            penalty += params.alpha * tree.n_leaves + params.beta * float(
                (tree.leaf_weights**2).sum()
            )
            objective_log.append(float(logistic_loss(margins, y).sum()) + penalty)
    return FedtModel(
        trees=trees,
        params=params,
        base_score=base_score,
        fingerprint=data.fingerprint,
    )
