import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.special import expit

from utils.boosting_family import (best_histogram_split, build_histograms, fit_adaboost,
                                   fit_gradient_boosting, fit_leafwise_boosting, leaf_weight,
                                   logistic_loss, stage_weight)
from utils.errors import ParameterError

SEPARABLE = sp.csr_matrix([[0.0], [0.0], [1.0], [1.0]])
SEPARABLE_LABELS = np.array([0, 0, 1, 1])


@pytest.fixture(scope='module')
def noisy_fixture():
    rng = np.random.default_rng(0)
    dense = rng.random((60, 4)) * (rng.random((60, 4)) > 0.4)
    y = ((dense[:, 0] + dense[:, 1] > 0.6) ^ (rng.random(60) < 0.1)).astype(int)
    return sp.csr_matrix(dense), y


def _loss_per_round(model, X, y):
    score = np.full(X.shape[0], model.base_score)
    losses = [logistic_loss(score, y)]
    for weight, tree in zip(model.stage_weights, model.stages):
        score = score + weight * tree.predict(X)
        losses.append(logistic_loss(score, y))
    return np.array(losses)


def test_stage_weight_formula():
    assert stage_weight(0.25) == pytest.approx(0.5 * math.log(3), abs=1e-6)
    assert stage_weight(0.25) == pytest.approx(0.549306, abs=1e-6)
    assert math.isfinite(stage_weight(0.0))


def test_adaboost_separable():
    model = fit_adaboost(SEPARABLE, SEPARABLE_LABELS, rounds=10, seed=0)
    assert len(model.stages) == 1
    assert model.stage_weights[0] == pytest.approx(stage_weight(0.0))
    np.testing.assert_array_equal(model.predict_proba(SEPARABLE) > 0.5, SEPARABLE_LABELS == 1)


def test_adaboost_stage_errors_below_half(noisy_fixture):
    X, y = noisy_fixture
    model = fit_adaboost(X, y, rounds=8, seed=0)
    assert 1 <= len(model.stages) <= 8
    assert all(weight > 0 for weight in model.stage_weights)


def test_adaboost_rejects_zero_rounds():
    with pytest.raises(ParameterError):
        fit_adaboost(SEPARABLE, SEPARABLE_LABELS, rounds=0)


def test_leaf_weight():
    assert leaf_weight(-2.0, 4.0, 1.0) == pytest.approx(0.4)


@pytest.mark.parametrize('kind', ['gbm', 'xgb_style'])
def test_zero_rounds_predicts_base_rate(kind):
    y = np.array([0, 0, 0, 1])
    X = sp.csr_matrix(np.eye(4))
    model = fit_gradient_boosting(kind, X, y, rounds=0)
    np.testing.assert_allclose(model.predict_proba(X), 0.25)


@pytest.mark.parametrize('kind', ['gbm', 'xgb_style'])
def test_zero_learning_rate_equals_zero_rounds(noisy_fixture, kind):
    X, y = noisy_fixture
    frozen = fit_gradient_boosting(kind, X, y, rounds=5, learning_rate=0.0)
    prior = fit_gradient_boosting(kind, X, y, rounds=0)
    np.testing.assert_array_equal(frozen.predict_proba(X), prior.predict_proba(X))


def test_histogram_bins_with_zero_bin():
    binned = build_histograms(sp.csr_matrix([[0.0], [0.1], [0.5], [1.0]]), max_bins=2)
    np.testing.assert_allclose(binned.cuts[0], [0.05, 0.3])
    assert binned.bin_index(0, [0.0, 0.1, 0.5, 1.0]).tolist() == [0, 1, 2, 2]


def test_constant_feature_has_single_bin():
    binned = build_histograms(sp.csr_matrix([[0.7], [0.7], [0.7]]), max_bins=16)
    assert binned.n_bins.tolist() == [1]


@pytest.mark.parametrize('max_bins', [1, 256])
def test_max_bins_range(max_bins):
    with pytest.raises(ParameterError):
        build_histograms(SEPARABLE, max_bins=max_bins)


def _exact_second_order_gain(dense, grad, hess, reg_lambda):
    def score(g, h):
        return g * g / (h + reg_lambda)

    best = 0.0
    for feature in range(dense.shape[1]):
        values = dense[:, feature]
        for threshold in np.unique(values)[:-1]:
            left = values <= threshold
            best = max(best, score(grad[left].sum(), hess[left].sum())
                       + score(grad[~left].sum(), hess[~left].sum())
                       - score(grad.sum(), hess.sum()))
    return best


def test_histogram_gain_matches_exact_gain(noisy_fixture):
    X, y = noisy_fixture
    p = np.full(len(y), y.mean())
    grad, hess = p - y, p * (1 - p)
    binned = build_histograms(X, max_bins=None)
    split = best_histogram_split(binned, np.arange(len(y)), grad, hess, reg_lambda=1.0)
    assert split.gain == pytest.approx(_exact_second_order_gain(X.toarray(), grad, hess, 1.0))


@pytest.mark.parametrize('kind', ['gbm', 'xgb_style'])
def test_training_loss_never_increases(noisy_fixture, kind):
    X, y = noisy_fixture
    model = fit_gradient_boosting(kind, X, y, rounds=15, learning_rate=0.5, max_depth=3)
    assert np.all(np.diff(_loss_per_round(model, X, y)) <= 1e-9)


def test_leafwise_training_loss_never_increases(noisy_fixture):
    X, y = noisy_fixture
    model = fit_leafwise_boosting(X, y, rounds=15, learning_rate=0.5, max_leaves=6, min_child=3)
    assert np.all(np.diff(_loss_per_round(model, X, y)) <= 1e-9)


def test_two_leaves_equals_depth_one(noisy_fixture):
    X, y = noisy_fixture
    leafwise = fit_leafwise_boosting(X, y, rounds=5, learning_rate=0.3, max_leaves=2,
                                     min_child=2, reg_lambda=1.0, max_bins=255)
    depthwise = fit_gradient_boosting('xgb_style', X, y, rounds=5, learning_rate=0.3,
                                      max_depth=1, reg_lambda=1.0, min_child=2, max_bins=255)
    np.testing.assert_allclose(leafwise.decision_function(X), depthwise.decision_function(X),
                               atol=1e-12)


def test_large_min_child_keeps_base_score(noisy_fixture):
    X, y = noisy_fixture
    model = fit_leafwise_boosting(X, y, rounds=3, min_child=len(y) + 1)
    assert all(stage.n_leaves == 1 for stage in model.stages)
    # cada folha única só dá passos de Newton iguais para todas as amostras
    probabilities = model.predict_proba(X)
    assert np.ptp(probabilities) == pytest.approx(0.0, abs=1e-12)
    assert probabilities[0] == pytest.approx(expit(model.base_score), abs=1e-6)


def test_leafwise_growth_picks_largest_gain(noisy_fixture):
    X, y = noisy_fixture
    model = fit_leafwise_boosting(X, y, rounds=3, max_leaves=5, min_child=3, record_trace=True)
    for stage, stage_trace in zip(model.stages, model.trace):
        for expected_leaves, step in enumerate(stage_trace, start=1):
            assert step['leaves_before'] == expected_leaves
            assert step['gain'] == max(step['open_gains'].values())
        assert stage.n_leaves == len(stage_trace) + 1


def test_leafwise_is_deterministic(noisy_fixture):
    X, y = noisy_fixture
    first = fit_leafwise_boosting(X, y, rounds=4, max_leaves=4, min_child=3)
    second = fit_leafwise_boosting(X, y, rounds=4, max_leaves=4, min_child=3)
    assert first.to_payload() == second.to_payload()


def test_leafwise_rejects_single_leaf():
    with pytest.raises(ParameterError):
        fit_leafwise_boosting(SEPARABLE, SEPARABLE_LABELS, max_leaves=1)
