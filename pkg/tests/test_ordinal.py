import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statebag import ordinal
from statebag.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidProbability,
    LabelOutOfRange,
    SingleClassTraining,
)
from statebag.ordinal import (
    ConstantClassifier,
    OrdinalLabels,
    binarize_labels,
    combine_probabilities,
    fit_logistic,
    fit_rbf_logistic,
    kernel_logistic_objective,
    logistic_objective,
    predict,
    predict_batch,
    train_ordinal,
)


def finite_difference_gradient(fun, theta, h=1e-5):
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        up[i] += h
        down = theta.copy()
        down[i] -= h
        grad[i] = (fun(up)[0] - fun(down)[0]) / (2 * h)
    return grad


class TestBinarize:
    def test_rule_application(self):
        labels = OrdinalLabels(4, [0, 1, 2, 3])
        assert binarize_labels(labels, 1).tolist() == [1, 1, 0, 0]

    def test_lowest_threshold(self):
        labels = OrdinalLabels(4, [0, 2, 0, 3])
        assert binarize_labels(labels, 0).tolist() == [1, 0, 1, 0]

    def test_top_threshold_all_max(self):
        labels = OrdinalLabels(4, [3, 3, 3])
        assert binarize_labels(labels, 2).tolist() == [0, 0, 0]

    def test_index_out_of_range(self):
        labels = OrdinalLabels(3, [0, 1, 2])
        with pytest.raises(IndexOutOfRange):
            binarize_labels(labels, 2)

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            OrdinalLabels(3, [0, 1, 3])

    @settings(deadline=None, max_examples=50)
    @given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 3))
    def test_order_consistency(self, a, b, i):
        # lower levels can only raise the binary indicator
        lo, hi = min(a, b), max(a, b)
        labels = OrdinalLabels(5, [lo, hi])
        binary = binarize_labels(labels, i)
        assert binary[0] >= binary[1]


class TestLogistic:
    def test_separable_data_perfect_training_accuracy(self, rng):
        # a separating weight exists; the regularized optimum still separates
        x = np.concatenate([rng.normal(-3, 0.3, 20), rng.normal(3, 0.3, 20)])[:, None]
        y = np.array([0] * 20 + [1] * 20)
        assert np.all(x[y == 0] < 0) and np.all(x[y == 1] > 0)
        model = fit_logistic(x, y, lam=1.0)
        assert np.mean((model.predict_proba(x) >= 0.5) == y) == 1.0

    def test_label_flip_negates_parameters(self, rng):
        x = rng.normal(size=(30, 3))
        x = np.vstack([x, -x])  # mirrored design, no bias shift needed
        y = np.array([1] * 30 + [0] * 30)
        a = fit_logistic(x, y, lam=0.5)
        b = fit_logistic(x, 1 - y, lam=0.5)
        np.testing.assert_allclose(b.weights, -a.weights, atol=1e-5)
        assert b.bias == pytest.approx(-a.bias, abs=1e-5)

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(50):
            n, d = int(rng.integers(4, 20)), int(rng.integers(1, 6))
            x = rng.normal(size=(n, d))
            y = rng.integers(0, 2, n).astype(float)
            lam = float(rng.uniform(0.0, 2.0))
            theta = rng.normal(size=d + 1)
            fun = logistic_objective(x, y, lam)
            _, analytic = fun(theta)
            numeric = finite_difference_gradient(fun, theta)
            err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
            assert err <= 1e-5

    def test_single_class_rejected(self, rng):
        x = rng.normal(size=(10, 2))
        with pytest.raises(SingleClassTraining):
            fit_logistic(x, np.ones(10))

    def test_deterministic(self, rng):
        x = rng.normal(size=(40, 3))
        y = (x[:, 0] > 0).astype(int)
        a = fit_logistic(x, y, lam=0.3)
        b = fit_logistic(x, y, lam=0.3)
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


class TestKernelLogistic:
    def xor_fixture(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([0, 0, 1, 1])
        return x, y

    def test_xor_beats_linear(self):
        x, y = self.xor_fixture()
        rbf = fit_rbf_logistic(x, y, lam=0.01, gamma=1.0)
        rbf_acc = np.mean((rbf.predict_proba(x) >= 0.5) == y)
        linear = fit_logistic(x, y, lam=0.01)
        linear_acc = np.mean((linear.predict_proba(x) >= 0.5) == y)
        assert rbf_acc == 1.0
        assert linear_acc <= 0.75

    def test_gamma_to_zero_limit_gives_constant_predictions(self, rng):
        x = rng.normal(size=(20, 3))
        y = rng.integers(0, 2, 20)
        y[0], y[1] = 0, 1
        model = fit_rbf_logistic(x, y, lam=1.0, gamma=1e-12)
        probe = rng.normal(size=(10, 3)) * 5
        p = model.predict_proba(probe)
        assert np.all(np.abs(p - p[0]) < 1e-6)

    def test_gram_symmetric_unit_diagonal(self, rng):
        from statebag import kernels

        x = rng.normal(size=(15, 4))
        g = kernels.rbf_gram(x, x, 0.1)
        assert np.array_equal(g, g.T)
        assert np.all(g.diagonal() == 1.0)

    def test_gradient_matches_finite_differences(self, rng):
        from statebag import kernels

        for _ in range(50):
            n = int(rng.integers(4, 15))
            x = rng.normal(size=(n, 3))
            y = rng.integers(0, 2, n).astype(float)
            lam = float(rng.uniform(0.0, 2.0))
            gram = kernels.rbf_gram(x, x, 0.5)
            theta = rng.normal(size=n + 1) * 0.5
            fun = kernel_logistic_objective(gram, y, lam)
            _, analytic = fun(theta)
            numeric = finite_difference_gradient(fun, theta)
            err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
            assert err <= 1e-5

    def test_bad_gamma(self, rng):
        x = rng.normal(size=(6, 2))
        y = np.array([0, 1, 0, 1, 0, 1])
        with pytest.raises(ValueError):
            fit_rbf_logistic(x, y, gamma=0.0)


class TestCombine:
    def test_direct_evaluation(self):
        probs, level = combine_probabilities([0.9, 0.6, 0.2])
        np.testing.assert_allclose(probs, [0.1, 0.3, 0.4, 0.2], atol=1e-12)
        assert level == 2

    def test_one_hot_recovery(self):
        for target in range(4):
            p_gt = np.array([1.0 if target > i else 0.0 for i in range(3)])
            probs, level = combine_probabilities(p_gt)
            assert level == target
            np.testing.assert_allclose(probs, np.eye(4)[target], atol=1e-12)

    def test_non_monotone_clamped_and_renormalized(self):
        probs, level = combine_probabilities([0.2, 0.6])
        np.testing.assert_allclose(probs, [0.8 / 1.4, 0.0, 0.6 / 1.4], atol=1e-12)
        assert level == 0

    def test_monotone_inputs_need_no_clamping(self, rng):
        for _ in range(200):
            p_gt = np.sort(rng.random(4))[::-1]
            raw = np.concatenate([[1 - p_gt[0]], p_gt[:-1] - p_gt[1:], [p_gt[-1]]])
            assert np.all(raw >= 0)
            assert raw.sum() == pytest.approx(1.0, abs=1e-12)
            probs, _ = combine_probabilities(p_gt)
            np.testing.assert_allclose(probs, raw, atol=1e-12)

    def test_sum_to_one_over_random_inputs(self, rng):
        for _ in range(10_000):
            p_gt = rng.random(int(rng.integers(1, 6)))
            probs, _ = combine_probabilities(p_gt)
            assert abs(probs.sum() - 1.0) <= 1e-9
            assert np.all(probs >= 0.0)

    def test_invalid_probability(self):
        with pytest.raises(InvalidProbability):
            combine_probabilities([0.5, 1.2])
        with pytest.raises(InvalidProbability):
            combine_probabilities([np.nan])

    @settings(deadline=None, max_examples=200)
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6))
    def test_output_is_distribution(self, p_gt):
        probs, level = combine_probabilities(p_gt)
        assert probs.shape == (len(p_gt) + 1,)
        assert abs(probs.sum() - 1.0) <= 1e-9
        assert 0 <= level <= len(p_gt)


def blob_data(rng, centers, n_per=20, scale=0.3):
    x = np.concatenate([rng.normal(c, scale, size=(n_per, len(c))) for c in centers])
    y = np.concatenate([np.full(n_per, i) for i in range(len(centers))])
    return x, y.astype(int)


class TestTrainPredict:
    def test_binary_gets_single_classifier(self, rng):
        x, y = blob_data(rng, [(-2, 0), (2, 0)])
        model = train_ordinal(x, OrdinalLabels(2, y), backend="linear", lam=0.1)
        assert len(model.classifiers) == 1
        assert model.num_levels == 2

    def test_four_levels_get_three_classifiers(self, rng):
        x, y = blob_data(rng, [(-6, 0), (-2, 0), (2, 0), (6, 0)])
        model = train_ordinal(x, OrdinalLabels(4, y), backend="linear", lam=0.1)
        assert len(model.classifiers) == 3

    def test_deterministic_given_seed(self, rng):
        x, y = blob_data(rng, [(-2, 0), (2, 0), (6, 0)])
        probe = rng.normal(size=(30, 2)) * 4
        a = train_ordinal(x, OrdinalLabels(3, y), backend="rbf", lam=1.0, gamma=0.1, seed=5)
        b = train_ordinal(x, OrdinalLabels(3, y), backend="rbf", lam=1.0, gamma=0.1, seed=5)
        pa, la = predict_batch(a, probe)
        pb, lb = predict_batch(b, probe)
        assert np.array_equal(pa, pb) and np.array_equal(la, lb)

    def test_degenerate_threshold_uses_constant_prior(self, rng, caplog):
        x, y = blob_data(rng, [(-4, 0), (0, 0), (4, 0)])
        y[y == 0] = 1  # level 0 absent: threshold 0 sees one class
        with caplog.at_level(logging.WARNING):
            model = train_ordinal(x, OrdinalLabels(3, y), backend="linear", lam=0.1)
        assert isinstance(model.classifiers[0], ConstantClassifier)
        assert model.classifiers[0].p == 0.0
        assert any("single class" in r.message for r in caplog.records)
        probs, _ = predict_batch(model, x)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_ordered_blobs_recover_levels(self, rng):
        x, y = blob_data(rng, [(-6, 0), (-2, 0), (2, 0), (6, 0)], scale=0.2)
        model = train_ordinal(x, OrdinalLabels(4, y), backend="rbf", lam=0.1, gamma=0.5)
        _, levels = predict_batch(model, x)
        assert np.mean(levels == y) >= 0.95

    def test_reversed_levels_reverse_predictions(self, rng):
        x, y = blob_data(rng, [(-4, 0), (0, 0), (4, 0)], scale=0.2)
        probe, _ = blob_data(rng, [(-4, 0), (0, 0), (4, 0)], n_per=10, scale=0.2)
        fwd = train_ordinal(x, OrdinalLabels(3, y), backend="linear", lam=0.1)
        rev = train_ordinal(x, OrdinalLabels(3, 2 - y), backend="linear", lam=0.1)
        _, fwd_levels = predict_batch(fwd, probe)
        _, rev_levels = predict_batch(rev, probe)
        assert np.array_equal(rev_levels, 2 - fwd_levels)

    def test_predict_single_vector(self, rng):
        x, y = blob_data(rng, [(-2, 0), (2, 0)])
        model = train_ordinal(x, OrdinalLabels(2, y), backend="linear", lam=0.1)
        probs, level = predict(model, np.array([2.0, 0.0]))
        assert probs.shape == (2,)
        assert level == 1
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self, rng):
        x, y = blob_data(rng, [(-2, 0), (2, 0)])
        model = train_ordinal(x, OrdinalLabels(2, y), backend="linear", lam=0.1)
        with pytest.raises(DimensionMismatch):
            predict(model, np.zeros(5))

    def test_zero_histogram_is_legal_input(self, rng):
        x, y = blob_data(rng, [(1, 1), (3, 3)])
        model = train_ordinal(x, OrdinalLabels(2, y), backend="rbf", lam=1.0, gamma=0.01)
        probs, level = predict(model, np.zeros(2))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert level in (0, 1)

    def test_random_models_output_distributions(self, rng):
        # 4-level, 8-bin setup exercised with arbitrary classifier parameters
        for _ in range(20):
            classifiers = [
                ordinal.LinearLogistic(weights=rng.normal(size=8), bias=float(rng.normal()),
                                       lam=1.0)
                for _ in range(3)
            ]
            model = ordinal.OrdinalModel(num_levels=4, input_dim=8, backend="linear",
                                         lam=1.0, gamma=None, classifiers=classifiers)
            h = rng.integers(0, 12, size=(25, 8)).astype(float)
            probs, levels = predict_batch(model, h)
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
            assert np.all((levels >= 0) & (levels <= 3))


class TestModelIO:
    def test_round_trip(self, tmp_path, rng):
        x, y = blob_data(rng, [(-2, 0), (0, 0), (2, 0)])
        model = train_ordinal(x, OrdinalLabels(3, y), backend="rbf", lam=1.0, gamma=0.05)
        path = tmp_path / "model.json"
        ordinal.save_model(model, path, codebook_hash="abc123", normalize=True)
        loaded, meta = ordinal.load_model(path)
        assert meta == {"codebook_hash": "abc123", "normalize": True}
        probe = rng.normal(size=(10, 2))
        pa, la = predict_batch(model, probe)
        pb, lb = predict_batch(loaded, probe)
        np.testing.assert_allclose(pa, pb, atol=1e-15)
        assert np.array_equal(la, lb)
