from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from conftest import blob_matrix, make_matrix
from fairaudit.errors import ColumnMismatch, ConfigError, EmptyCell, SingleClassTrainSet
from fairaudit.learners import (
    Intervention,
    TrainedModel,
    TreeNode,
    make_spec,
    postprocess_group_thresholds,
    predict,
    reweigh,
    score,
    train,
)
from fairaudit.metrics import accuracy, group_rates


def train_accuracy(model, matrix) -> float:
    return accuracy(predict(model, matrix), matrix.y)


def postprocess_oracle(scores, y, groups, target):
    """Exhaustive threshold-pair search over observed scores: returns the
    optimal (t_priv, t_prot, objective) under the documented tie chain."""
    cands = sorted(set(scores.tolist()))
    best = None
    n = len(y)
    for tp in cands:
        for tu in cands:
            preds = np.where(groups == 1, scores >= tp, scores >= tu).astype(int)
            rate_p = preds[groups == 1].mean()
            rate_u = preds[groups == 0].mean()
            obj = abs((rate_p - rate_u) - target)
            acc = (preds == y).sum()
            key = (-obj, acc, tp, tu)  # maximize
            if best is None or key > best[0]:
                best = (key, tp, tu, obj)
    return best[1], best[2], best[3]


def xor_matrix():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 25, dtype=float)
    y = np.array([0, 1, 1, 0] * 25)
    groups = np.array([0, 1, 0, 1] * 25)
    return make_matrix(X, y, groups)


def best_stump_accuracy(matrix) -> float:
    """Enumerate every depth-1 split (plus the majority leaf) by brute force."""
    X, y = matrix.X, matrix.y
    best = max(np.mean(y == 0), np.mean(y == 1))
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for thr in (vals[:-1] + vals[1:]) / 2:
            left = X[:, j] < thr
            for pl in (0, 1):
                preds = np.where(left, pl, 1 - pl)
                best = max(best, np.mean(preds == y))
    return float(best)


class TestSpecs:
    def test_canonical_id_stable(self):
        a = make_spec("logistic_regression", {"credit"}, {"learning_rate": 0.1}, seed=3)
        b = make_spec("logistic_regression", {"credit"}, {"learning_rate": 0.1}, seed=3)
        assert a.canonical_id() == b.canonical_id()

    def test_hyperparam_range_enforced(self):
        with pytest.raises(ConfigError):
            make_spec("decision_tree", hyperparams={"max_depth": 0})

    def test_unknown_hyperparam_rejected(self):
        with pytest.raises(ConfigError):
            make_spec("decision_tree", hyperparams={"learning_rate": 0.1})

    def test_intervention_validation(self):
        with pytest.raises(ConfigError):
            Intervention("reweigh", 1.5)
        with pytest.raises(ConfigError):
            Intervention("group_threshold_postprocess", None)


class TestTrain:
    def test_logistic_separable(self):
        m = blob_matrix(200)
        model = train(make_spec("logistic_regression"), m)
        assert train_accuracy(model, m) >= 0.95

    def test_svm_separable(self):
        m = blob_matrix(200)
        model = train(make_spec("linear_svm"), m)
        assert train_accuracy(model, m) >= 0.95

    def test_depth1_tree_cannot_learn_xor(self):
        m = xor_matrix()
        model = train(make_spec("decision_tree", hyperparams={"max_depth": 1}), m)
        acc = train_accuracy(model, m)
        assert acc <= best_stump_accuracy(m) <= 0.75

    def test_deeper_tree_learns_xor(self):
        m = xor_matrix()
        model = train(make_spec("decision_tree", hyperparams={"max_depth": 2}), m)
        assert train_accuracy(model, m) == 1.0

    def test_deterministic_parameters(self):
        m = blob_matrix(120, seed=9)
        spec = make_spec("logistic_regression", hyperparams={"iterations": 50})
        a, b = train(spec, m), train(spec, m)
        assert np.array_equal(a.params["weights"], b.params["weights"])
        assert a.params["bias"] == b.params["bias"]

    def test_forest_deterministic_for_seed(self):
        m = blob_matrix(120, seed=9)
        spec = make_spec("bagged_forest", hyperparams={"tree_count": 5, "max_depth": 3}, seed=11)
        assert np.array_equal(predict(train(spec, m), m), predict(train(spec, m), m))

    def test_single_class_rejected(self):
        m = make_matrix(np.zeros((4, 1)), [1, 1, 1, 1], [0, 1, 0, 1])
        with pytest.raises(SingleClassTrainSet):
            train(make_spec("decision_tree"), m)

    def test_weighted_training_shifts_model(self):
        m = blob_matrix(100, margin=0.8, seed=4)
        spec = make_spec("logistic_regression", hyperparams={"iterations": 100})
        plain = train(spec, m)
        w = np.where(m.y == 1, 5.0, 1.0)
        weighted = train(spec, m, w)
        assert not np.array_equal(plain.params["weights"], weighted.params["weights"])


class TestScorePredict:
    def test_zero_weight_logistic_scores_half(self):
        m = blob_matrix(10)
        model = TrainedModel(
            spec=make_spec("logistic_regression"),
            column_names=m.feature_names,
            params={"weights": np.zeros(2), "bias": 0.0},
        )
        assert np.all(score(model, m) == 0.5)

    def test_forest_vote_fraction(self):
        m = make_matrix(np.zeros((1, 1)), [1], [1])
        leaf = lambda s: [TreeNode(score=s)]
        model = TrainedModel(
            spec=make_spec("bagged_forest"),
            column_names=m.feature_names,
            params={"trees": [leaf(1.0), leaf(0.9), leaf(0.2)]},
        )
        assert score(model, m)[0] == pytest.approx(2 / 3)

    def test_scores_reproduce_training_time_scores(self):
        m = blob_matrix(60)
        model = train(make_spec("linear_svm", hyperparams={"iterations": 40}), m)
        assert np.array_equal(score(model, m), model.train_scores)

    def test_scores_within_unit_interval(self):
        m = blob_matrix(80, seed=2)
        for fam in ("logistic_regression", "decision_tree", "bagged_forest", "linear_svm"):
            hp = {"tree_count": 3} if fam == "bagged_forest" else {}
            s = score(train(make_spec(fam, hyperparams=hp), m), m)
            assert np.all((s >= 0) & (s <= 1))

    def test_column_mismatch(self):
        m = blob_matrix(20)
        model = train(make_spec("logistic_regression", hyperparams={"iterations": 10}), m)
        other = make_matrix(np.zeros((3, 3)), [0, 1, 0], [1, 0, 1])
        with pytest.raises(ColumnMismatch):
            score(model, other)

    def test_global_threshold(self):
        m = make_matrix(np.zeros((2, 1)), [0, 1], [1, 0])
        model = TrainedModel(
            spec=make_spec("logistic_regression"), column_names=m.feature_names,
            params={"weights": np.zeros(1), "bias": 0.0},
        )
        fake = dataclasses.replace(model)
        s = np.array([0.4, 0.6])
        assert ((s >= fake.threshold).astype(int) == [0, 1]).all()
        preds = predict(model, m)  # scores are exactly 0.5: tie counts positive
        assert preds.tolist() == [1, 1]

    def test_per_group_thresholds(self):
        m = make_matrix(np.zeros((2, 1)), [0, 1], [1, 0])
        model = TrainedModel(
            spec=make_spec("logistic_regression"), column_names=m.feature_names,
            params={"weights": np.zeros(1), "bias": 0.0},
            group_thresholds=(0.6, 0.4),
        )
        assert predict(model, m).tolist() == [0, 1]

    def test_monotone_threshold_property(self):
        m = blob_matrix(150, margin=1.0, seed=8)
        model = train(make_spec("logistic_regression", hyperparams={"iterations": 80}), m)
        prev_rates = (1.1, 1.1)
        for t in np.linspace(0.0, 1.0, 21):
            withg = dataclasses.replace(model, group_thresholds=(t, t))
            r = group_rates(predict(withg, m), m.groups)
            assert r.privileged_rate <= prev_rates[0] + 1e-12
            assert r.protected_rate <= prev_rates[1] + 1e-12
            prev_rates = (r.privileged_rate, r.protected_rate)


class TestPostprocess:
    def biased(self, n=200, seed=6):
        rng = np.random.default_rng(seed)
        groups = rng.integers(0, 2, n)
        X = rng.normal(size=(n, 2)) + groups[:, None] * 1.6
        logit = X[:, 0] + X[:, 1] - 1.6
        y = (rng.random(n) < 1 / (1 + np.exp(-2 * logit))).astype(int)
        return make_matrix(X, y, groups)

    def test_reduces_disparity_to_target(self):
        m = self.biased()
        model = train(make_spec("logistic_regression"), m)
        raw = group_rates(predict(model, m), m.groups)
        assert raw.privileged_rate - raw.protected_rate >= 0.25
        post = postprocess_group_thresholds(model, m, 0.0)
        r = group_rates(predict(post, m), m.groups)
        assert abs(r.privileged_rate - r.protected_rate) <= 0.02

    def test_matches_exhaustive_oracle(self):
        m = self.biased(160, seed=12)
        model = train(make_spec("logistic_regression"), m)
        post = postprocess_group_thresholds(model, m, 0.0)
        tp, tu, obj = postprocess_oracle(score(model, m), m.y, m.groups, 0.0)
        assert post.group_thresholds == (tp, tu)
        r = group_rates(predict(post, m), m.groups)
        assert abs(abs(r.privileged_rate - r.protected_rate) - obj) <= 1e-9

    def test_target_equal_to_current_disparity_is_noop(self):
        m = self.biased(180, seed=3)
        model = train(make_spec("logistic_regression"), m)
        raw = group_rates(predict(model, m), m.groups)
        current = raw.privileged_rate - raw.protected_rate
        post = postprocess_group_thresholds(model, m, current)
        r = group_rates(predict(post, m), m.groups)
        assert r.privileged_rate - r.protected_rate == pytest.approx(current, abs=1e-12)

    def test_constant_scores_degenerate(self):
        m = make_matrix(np.zeros((8, 1)), [0, 1] * 4, [0, 0, 1, 1] * 2)
        model = TrainedModel(
            spec=make_spec("logistic_regression"), column_names=m.feature_names,
            params={"weights": np.zeros(1), "bias": 0.0},
        )
        post = postprocess_group_thresholds(model, m, 0.0)
        assert post.group_thresholds == (0.5, 0.5)
        r = group_rates(predict(post, m), m.groups)
        assert r.privileged_rate - r.protected_rate == 0.0

    def test_scores_byte_identical_after_postprocess(self):
        m = self.biased(120, seed=1)
        model = train(make_spec("logistic_regression"), m)
        post = postprocess_group_thresholds(model, m, 0.0)
        assert score(model, m).tobytes() == score(post, m).tobytes()
        assert post.params is model.params


class TestReweigh:
    def test_strength_zero_is_uniform(self):
        m = self.cell_matrix(80, 50, 45)
        assert np.all(reweigh(m, 0.0) == 1.0)

    def test_balanced_cells_unit_weights(self):
        y = np.array([0, 1] * 10)
        g = np.array([0, 0, 1, 1] * 5)
        m = make_matrix(np.zeros((20, 1)), y, g)
        assert reweigh(m, 1.0) == pytest.approx(np.ones(20))

    def test_formula_case(self):
        m = self.cell_matrix(n_priv=80, n_pos=50, n_priv_pos=45)
        w = reweigh(m, 1.0)
        cell = (m.groups == 1) & (m.y == 1)
        assert w[cell] == pytest.approx((80 * 50) / (100 * 45))
        assert w[cell][0] == pytest.approx(0.888888888, abs=1e-6)

    def test_empty_cell(self):
        y = np.array([1] * 10 + [0] * 10)
        g = np.array([1] * 10 + [0] * 10)  # no (priv, 0) cell
        m = make_matrix(np.zeros((20, 1)), y, g)
        with pytest.raises(EmptyCell):
            reweigh(m, 1.0)

    def test_weights_strictly_positive(self):
        m = self.cell_matrix(70, 30, 10)
        for s in (0.0, 0.3, 0.7, 1.0):
            assert np.all(reweigh(m, s) > 0)

    @staticmethod
    def cell_matrix(n_priv: int, n_pos: int, n_priv_pos: int, n: int = 100):
        groups = np.array([1] * n_priv + [0] * (n - n_priv))
        y = np.zeros(n, dtype=int)
        y[:n_priv_pos] = 1  # privileged positives
        y[n_priv : n_priv + (n_pos - n_priv_pos)] = 1  # protected positives
        return make_matrix(np.zeros((n, 1)), y, groups)
