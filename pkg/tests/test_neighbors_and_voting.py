import numpy as np
import pytest
import scipy.sparse as sp

from utils.errors import CompatibilityError, ParameterError, SpecError
from utils.featurizer import FeatureSpace
from utils.model_api import (BASE_KINDS, ClassifierSpec, ConstantModel, TrainedModel, fit_model,
                             predict_proba)
from utils.neighbors_and_voting import (VotingModel, fit_knn, knn_predict_proba,
                                        pairwise_distances, voting_predict_proba)

STORED = sp.csr_matrix([[1.0, 0.0], [1.0, 0.1], [1.0, 0.2], [0.0, 1.0]])
STORED_LABELS = np.array([1, 1, 0, 0])


def _constant_member(probability, space):
    return TrainedModel(ClassifierSpec('multinomial_nb'), ConstantModel(probability), space, 0, 1)


def test_self_match_with_one_neighbour():
    model = fit_knn(STORED, STORED_LABELS, k=1)
    assert knn_predict_proba(model, sp.csr_matrix([[1.0, 0.0]]))[0] == 1.0


def test_three_neighbours_fraction():
    model = fit_knn(STORED, STORED_LABELS, k=3)
    assert knn_predict_proba(model, sp.csr_matrix([[1.0, 0.0]]))[0] == pytest.approx(2 / 3)


def test_zero_query_uses_index_order():
    model = fit_knn(STORED, STORED_LABELS, k=3)
    assert model.neighbours(sp.csr_matrix([[0.0, 0.0]])).tolist() == [[0, 1, 2]]
    np.testing.assert_allclose(pairwise_distances(sp.csr_matrix([[0.0, 0.0]]), STORED), 1.0)


def test_all_neighbours_give_base_rate():
    model = fit_knn(STORED, STORED_LABELS, k=4)
    queries = sp.csr_matrix([[0.3, 0.7], [5.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(knn_predict_proba(model, queries), [0.5, 0.5, 0.5])


def test_euclidean_metric():
    model = fit_knn(STORED, STORED_LABELS, k=1, metric='euclidean')
    assert knn_predict_proba(model, sp.csr_matrix([[0.0, 0.9]]))[0] == 0.0
    assert pairwise_distances(sp.csr_matrix([[0.0, 0.0]]), STORED[3], 'euclidean')[0, 0] == 1.0


@pytest.mark.parametrize('k', [0, 5])
def test_k_out_of_range(k):
    with pytest.raises(ParameterError):
        fit_knn(STORED, STORED_LABELS, k=k)


def test_voting_mean_of_two_members():
    space = FeatureSpace.synthetic(2)
    model = VotingModel.from_members([_constant_member(0.6, space), _constant_member(0.8, space)])
    assert model.predict_proba(STORED)[0] == pytest.approx(0.7)


def test_voting_unanimity():
    space = FeatureSpace.synthetic(2)
    model = VotingModel.from_members([_constant_member(1.0, space)] * 3)
    np.testing.assert_array_equal(model.predict_proba(STORED), 1.0)


def test_voting_is_permutation_invariant_and_bounded():
    space = FeatureSpace.synthetic(2)
    members = [_constant_member(p, space) for p in (0.1, 0.7, 0.3, 0.95)]
    forward = VotingModel.from_members(members).predict_proba(STORED)
    backward = VotingModel.from_members(members[::-1]).predict_proba(STORED)
    shuffled = VotingModel.from_members([members[i] for i in (2, 0, 3, 1)]).predict_proba(STORED)
    np.testing.assert_array_equal(forward, backward)
    np.testing.assert_array_equal(forward, shuffled)
    assert np.all((forward >= 0.1) & (forward <= 0.95))


def test_voting_rejects_mixed_spaces():
    members = [_constant_member(0.5, FeatureSpace.synthetic(2)),
               _constant_member(0.5, FeatureSpace.synthetic(3))]
    with pytest.raises(CompatibilityError):
        VotingModel.from_members(members)


def test_voting_rejects_nested_and_empty():
    space = FeatureSpace.synthetic(2)
    inner = TrainedModel(ClassifierSpec('voting'), VotingModel.from_members(
        [_constant_member(0.5, space)]), space, 0, 1)
    with pytest.raises(SpecError):
        VotingModel.from_members([inner])
    with pytest.raises(SpecError):
        VotingModel.from_members([])


def test_voting_checks_query_space():
    space = FeatureSpace.synthetic(2)
    model = VotingModel.from_members([_constant_member(0.5, space)])
    with pytest.raises(CompatibilityError):
        voting_predict_proba(model, FeatureSpace.synthetic(1).wrap(np.ones((1, 1))))


def test_knn_through_api(small_features):
    _, X, y = small_features
    model = fit_model(ClassifierSpec('knn', {'k': 1}), X, y)
    present = X.values.getnnz(axis=1) > 0
    assert np.mean(predict_proba(model, X)[present] == y[present]) >= 0.9


@pytest.mark.slow
def test_full_ensemble_is_member_average(small_features):
    _, X, y = small_features
    model = fit_model(ClassifierSpec('voting'), X, y, seed=21)
    members = model.estimator.members
    assert [member.kind for member in members] == list(BASE_KINDS)
    expected = np.mean([predict_proba(member, X) for member in members], axis=0)
    np.testing.assert_allclose(predict_proba(model, X), expected, rtol=0, atol=1e-12)
