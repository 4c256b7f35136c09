import math

import numpy as np
import pytest

import oracles
from fedt.boosting import (
    FedtModel,
    FedtParams,
    RegressionTree,
    TrainingSet,
    classify,
    classify_matrix,
    leaf_weight,
    objective,
    predict_margin,
    predict_margin_matrix,
    predict_tree,
    sigmoid,
    split_gain,
    train,
)
from fedt.errors import (
    CannotTrainError,
    ContractError,
    DegenerateLeafError,
    DegenerateSplitError,
    FingerprintMismatchError,
)
from fedt.features import FeatureVector
from fedt.signals import Label


def single_leaf_tree(w):
    return RegressionTree(
        feature=np.array([-1], dtype=np.int32),
        threshold=np.array([0.0]),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        weight=np.array([w]),
    )


def stump(feature, threshold, w_left, w_right):
    return RegressionTree(
        feature=np.array([feature, -1, -1], dtype=np.int32),
        threshold=np.array([threshold, 0.0, 0.0]),
        left=np.array([1, -1, -1], dtype=np.int32),
        right=np.array([2, -1, -1], dtype=np.int32),
        weight=np.array([0.0, w_left, w_right]),
    )


class TestLeafWeight:
    def test_closed_form(self):
        assert leaf_weight(2.0, 1.0, 0.5) == pytest.approx(-1.0)

    def test_zero_gradient(self):
        assert leaf_weight(0.0, 3.0, 1.0) == 0.0

    def test_large_beta_shrinks_to_zero(self):
        assert abs(leaf_weight(4.0, 2.0, 1e9)) < 1e-8

    def test_degenerate(self):
        with pytest.raises(DegenerateLeafError):
            leaf_weight(1.0, 0.0, 0.0)
        with pytest.raises(DegenerateLeafError):
            leaf_weight(1.0, -3.0, 1.0)

    def test_grid_search_argmin(self):
        rng = np.random.default_rng(30)
        for _ in range(100):
            g = float(rng.uniform(-3, 3))
            h = float(rng.uniform(0.1, 3))
            beta = float(rng.uniform(0.05, 3))
            want = oracles.leaf_objective_grid_argmin(g, h, beta)
            assert abs(leaf_weight(g, h, beta) - want) <= 1e-3


class TestSplitGain:
    def test_empty_right_child_costs_alpha(self):
        # all mass on the left: gain reduces to the new-leaf penalty
        assert split_gain(2.0, 3.0, 2.0, 3.0, alpha=0.7, beta=1.0) == pytest.approx(-0.7)

    def test_empty_child_rejected_without_beta(self):
        with pytest.raises(DegenerateSplitError):
            split_gain(2.0, 3.0, 2.0, 3.0, alpha=0.0, beta=0.0)

    def test_symmetric_case_positive_for_small_alpha(self):
        # G = 0 split into opposite halves: compare 1-leaf vs 2-leaf objective
        g_l, h_l, h = 1.5, 2.0, 4.0
        beta = 0.5
        gain = split_gain(0.0, h, g_l, h_l, alpha=0.01, beta=beta)
        explicit = (
            g_l**2 / (h_l + 2 * beta) / 2 + g_l**2 / (h - h_l + 2 * beta) / 2 - 0.01
        )
        assert gain == pytest.approx(explicit, rel=1e-12)
        assert gain > 0

    def test_one_vs_two_leaf_objective_difference(self):
        # the gain must equal the drop in the quadratic leaf objective
        rng = np.random.default_rng(31)
        for _ in range(100):
            g_l, g_r = rng.normal(0, 2, 2)
            h_l, h_r = rng.uniform(0.1, 2, 2)
            alpha, beta = float(rng.uniform(0, 0.3)), float(rng.uniform(0.05, 2))

            def leaf_obj(g, h):
                w = -g / (h + 2 * beta)
                return g * w + 0.5 * h * w * w + beta * w * w

            parent = leaf_obj(g_l + g_r, h_l + h_r)
            children = leaf_obj(g_l, h_l) + leaf_obj(g_r, h_r)
            want = parent - children - alpha
            got = split_gain(g_l + g_r, h_l + h_r, g_l, h_l, alpha, beta)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


class TestPrediction:
    def test_single_leaf(self):
        tree = single_leaf_tree(0.7)
        for x in (np.zeros(3), np.ones(3), np.array([-5.0, 2.0, 9.0])):
            assert predict_tree(tree, x) == 0.7

    def test_stump_routing(self):
        tree = stump(0, 1.0, -1.0, 1.0)
        assert predict_tree(tree, np.array([0.5])) == -1.0
        assert predict_tree(tree, np.array([1.5])) == 1.0

    def test_boundary_goes_right(self):
        tree = stump(0, 1.0, -1.0, 1.0)
        assert predict_tree(tree, np.array([1.0])) == 1.0

    def test_margin_additivity(self):
        model = FedtModel(
            trees=[single_leaf_tree(0.2), single_leaf_tree(0.3)],
            params=FedtParams(n_rounds=2, learning_rate=1.0),
            base_score=0.0,
            fingerprint="fp",
        )
        assert predict_margin(model, np.zeros(1)) == pytest.approx(0.5)

    def test_margin_equals_tree_sum_loop(self, small_model, small_features):
        rng = np.random.default_rng(32)
        rows = rng.choice(len(small_features), 100, replace=True)
        for i in rows:
            x = small_features[i]
            acc = 0.0
            for tree in small_model.trees:
                acc += predict_tree(tree, x)
            want = small_model.base_score + small_model.params.learning_rate * acc
            assert predict_margin(small_model, x) == want  # bit-exact

    def test_matrix_matches_single(self, small_model, small_features):
        margins = predict_margin_matrix(small_model, small_features[:50])
        for i in range(50):
            assert margins[i] == predict_margin(small_model, small_features[i])

    def test_fingerprint_checked(self, small_model):
        x = FeatureVector(np.zeros(112), fingerprint="wrong")
        with pytest.raises(FingerprintMismatchError):
            predict_margin(small_model, x)

    def test_arity_mismatch(self, small_model):
        with pytest.raises(ContractError):
            predict_tree(small_model.trees[0], np.zeros(2))

    def test_model_requires_trees(self):
        with pytest.raises(ContractError):
            FedtModel(trees=[], params=FedtParams(), base_score=0.0, fingerprint="")


class TestClassify:
    def test_zero_margin_is_half(self):
        model = FedtModel(
            trees=[single_leaf_tree(0.0)],
            params=FedtParams(n_rounds=1),
            base_score=0.0,
            fingerprint="fp",
        )
        label, p = classify(model, np.zeros(4))
        assert p == 0.5
        assert label is Label.FALL  # p >= cutoff

    def test_large_margin_saturates(self):
        model = FedtModel(
            trees=[single_leaf_tree(50.0)],
            params=FedtParams(n_rounds=1, learning_rate=1.0),
            base_score=0.0,
            fingerprint="fp",
        )
        label, p = classify(model, np.zeros(2))
        assert p > 0.999999 and label is Label.FALL

    def test_cutoff_sweep_monotone(self, small_model, small_features, small_labels):
        from dataclasses import replace

        sens, spec = [], []
        for cutoff in np.linspace(0.1, 0.9, 9):
            model = FedtModel(
                trees=small_model.trees,
                params=replace(small_model.params, cutoff=float(cutoff)),
                base_score=small_model.base_score,
                fingerprint=small_model.fingerprint,
            )
            pred, _ = classify_matrix(model, small_features)
            tp = int(((small_labels == 1) & (pred == 1)).sum())
            fn = int(((small_labels == 1) & (pred == 0)).sum())
            tn = int(((small_labels == 0) & (pred == 0)).sum())
            fp = int(((small_labels == 0) & (pred == 1)).sum())
            sens.append(tp / (tp + fn))
            spec.append(tn / (tn + fp))
        assert all(a >= b - 1e-12 for a, b in zip(sens, sens[1:]))  # non-increasing
        assert all(a <= b + 1e-12 for a, b in zip(spec, spec[1:]))  # non-decreasing


class TestObjective:
    def test_single_example_log2(self):
        model = FedtModel(
            trees=[single_leaf_tree(0.0)],
            params=FedtParams(n_rounds=1, alpha=0.25, beta=1.0),
            base_score=0.0,
            fingerprint="fp",
        )
        data = TrainingSet(np.zeros((1, 1)), np.array([1.0]), "fp")
        assert objective(model, data) == pytest.approx(math.log(2) + 0.25)

    def test_extra_zero_weight_leaf_costs_alpha(self):
        a = FedtModel([single_leaf_tree(0.0)], FedtParams(n_rounds=1), 0.0, "fp")
        b = FedtModel([stump(0, 0.5, 0.0, 0.0)], FedtParams(n_rounds=1), 0.0, "fp")
        data = TrainingSet(np.zeros((3, 1)), np.array([1.0, 0.0, 1.0]), "fp")
        alpha = 0.4
        got_a = objective(a, data, alpha=alpha, beta=2.0)
        got_b = objective(b, data, alpha=alpha, beta=2.0)
        assert got_b - got_a == pytest.approx(alpha)

    def test_matches_straight_line_recomputation(self, small_model, small_training_set):
        want = oracles.ensemble_objective(
            small_model,
            small_training_set.features.tolist(),
            small_training_set.labels.tolist(),
            alpha=0.3,
            beta=1.7,
        )
        got = objective(small_model, small_training_set, alpha=0.3, beta=1.7)
        assert got == pytest.approx(want, rel=1e-9)


class TestTraining:
    def separable_1d(self, n=60, seed=33):
        rng = np.random.default_rng(seed)
        x = np.concatenate([rng.uniform(-2, -0.2, n // 2), rng.uniform(0.2, 2, n // 2)])
        y = (x > 0).astype(float)
        return TrainingSet(x[:, None], y, "fp")

    def test_separable_reaches_full_accuracy(self):
        data = self.separable_1d()
        model = train(data, FedtParams(n_rounds=5, learning_rate=0.3, alpha=0.0, beta=1.0))
        pred, _ = classify_matrix(model, data.features)
        assert (pred == data.labels).all()

    def test_huge_alpha_gives_single_leaf_trees(self):
        data = self.separable_1d()
        model = train(data, FedtParams(n_rounds=4, alpha=1e6))
        assert all(t.n_leaves == 1 for t in model.trees)
        margins = predict_margin_matrix(model, data.features)
        assert np.ptp(margins) == 0.0  # constant margin

    def test_objective_decreases_per_round(self, small_training_set):
        for eta in (0.1, 0.3):
            log = []
            train(
                small_training_set,
                FedtParams(n_rounds=12, learning_rate=eta, scale_pos_weight=1.0),
                objective_log=log,
            )
            assert all(b <= a + 1e-9 for a, b in zip(log, log[1:]))

    def test_deterministic(self, small_training_set):
        a = train(small_training_set, FedtParams(n_rounds=3, max_depth=3))
        b = train(small_training_set, FedtParams(n_rounds=3, max_depth=3))
        for ta, tb in zip(a.trees, b.trees):
            np.testing.assert_array_equal(ta.feature, tb.feature)
            np.testing.assert_array_equal(ta.threshold, tb.threshold)
            np.testing.assert_array_equal(ta.weight, tb.weight)

    def test_single_class_rejected(self):
        with pytest.raises(CannotTrainError):
            train(TrainingSet(np.ones((4, 2)), np.ones(4), "fp"))

    def test_training_set_from_vectors(self):
        vectors = [
            FeatureVector(np.array([1.0, 2.0]), fingerprint="fp"),
            FeatureVector(np.array([3.0, 4.0]), fingerprint="fp"),
        ]
        data = TrainingSet.from_vectors(vectors, [Label.FALL, Label.ADL])
        np.testing.assert_array_equal(data.features, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(data.labels, [1.0, 0.0])
        assert data.fingerprint == "fp"

    def test_training_set_rejects_mixed_fingerprints(self):
        vectors = [
            FeatureVector(np.array([1.0]), fingerprint="a"),
            FeatureVector(np.array([2.0]), fingerprint="b"),
        ]
        with pytest.raises(FingerprintMismatchError):
            TrainingSet.from_vectors(vectors, [Label.FALL, Label.ADL])

    def test_non_finite_rejected(self):
        X = np.ones((4, 2))
        X[1, 1] = np.nan
        with pytest.raises(ContractError):
            train(TrainingSet(X, np.array([0.0, 1.0, 0.0, 1.0]), "fp"))

    def test_alpha_ladder_monotone_leaves(self, small_training_set):
        totals = []
        for alpha in (0.0, 0.5, 10.0, 1e6):
            model = train(small_training_set, FedtParams(n_rounds=6, max_depth=4, alpha=alpha))
            totals.append(model.total_leaves)
        assert all(a >= b for a, b in zip(totals, totals[1:]))

    def test_beta_ladder_monotone_weights(self, small_training_set):
        sums = []
        for beta in (0.0, 1.0, 16.0, 1e3):
            model = train(small_training_set, FedtParams(n_rounds=6, max_depth=4, beta=beta))
            sums.append(model.sum_squared_leaf_weights)
        assert all(a >= b - 1e-12 for a, b in zip(sums, sums[1:]))

    def test_rank_preserving_transform_keeps_predictions(self, small_training_set):
        params = FedtParams(n_rounds=4, max_depth=3)
        base = train(small_training_set, params)
        base_margins = predict_margin_matrix(base, small_training_set.features)
        for transform in (lambda X: X * 0.5, np.arctan):
            mapped = TrainingSet(
                transform(small_training_set.features),
                small_training_set.labels,
                small_training_set.fingerprint,
            )
            other = train(mapped, params)
            # identical partitions -> identical gradients -> identical weights
            np.testing.assert_array_equal(
                base_margins, predict_margin_matrix(other, mapped.features)
            )

    def test_depth_limit_respected(self, small_training_set):
        model = train(small_training_set, FedtParams(n_rounds=2, max_depth=2))
        for tree in model.trees:
            assert tree.n_leaves <= 4


class TestSigmoid:
    def test_extremes_stable(self):
        assert sigmoid(1000.0) == 1.0
        assert sigmoid(-1000.0) == 0.0
        assert sigmoid(0.0) == 0.5

    def test_vector(self):
        x = np.array([-3.0, 0.0, 3.0])
        out = sigmoid(x)
        np.testing.assert_allclose(out, 1 / (1 + np.exp(-x)), rtol=1e-12)
