import json

import numpy as np
import pytest
import scipy.sparse as sp

from utils.discriminant_family import densify_topk, fit_discriminant, spd_cholesky, topk_indices
from utils.errors import DataError, ParameterError, ShapeError
from utils.featurizer import FeatureSpace
from utils.model_api import ClassifierSpec, ConstantModel, fit_model


def test_topk_keeps_most_frequent_terms():
    assert topk_indices(np.array([5, 2, 4]), 2).tolist() == [0, 2]


def test_topk_ties_prefer_lower_index():
    assert topk_indices(np.array([3, 3, 3, 1]), 2).tolist() == [0, 1]


def test_topk_identity_when_k_exceeds_vocabulary():
    assert topk_indices(np.array([1, 9, 3]), 10).tolist() == [0, 1, 2]


def test_topk_rejects_k():
    with pytest.raises(ParameterError):
        topk_indices(np.array([1, 2]), 0)


def test_densify_empty_matrix():
    space = FeatureSpace.synthetic(3)
    dense, projection = densify_topk(sp.csr_matrix((0, 3)), space.vocabulary, 2)
    assert dense.shape == (0, 2)
    assert projection.indices.tolist() == [0, 1]


def test_lda_symmetric_fixture_scores_half_at_origin():
    # rótulo 1 é o espelho do rótulo 0 em x -> -x
    X = np.array([[-2.0, 1.0], [0.0, -1.0], [2.0, 1.0], [0.0, -1.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_discriminant('lda', X, y, regularization=0.0)
    assert model.predict_proba(np.zeros((1, 2)))[0] == pytest.approx(0.5)
    assert model.predict_proba(np.array([[1.0, 0.0]]))[0] > 0.5


def test_qda_with_equal_covariances_matches_lda():
    label_0 = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 1.0]])
    X = np.vstack([label_0, label_0 + [3.0, 1.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    lda = fit_discriminant('lda', X, y, regularization=0.0)
    qda = fit_discriminant('qda', X, y, regularization=0.0)
    queries = np.vstack([X, [[-5.0, -5.0], [10.0, 10.0], [4.0, 0.0]]])
    lda_labels = (lda.predict_proba(queries) > 0.5).astype(int)
    qda_labels = (qda.predict_proba(queries) > 0.5).astype(int)
    np.testing.assert_array_equal(lda_labels, qda_labels)
    np.testing.assert_array_equal(lda_labels[:6], y)


def test_lda_rejects_shrinkage():
    with pytest.raises(ParameterError):
        fit_discriminant('lda', np.eye(2), np.array([0, 1]), regularization=1.5)


def test_cholesky_reconstructs_spd_matrix():
    matrix = np.array([[4.0, 2.0], [2.0, 3.0]])
    factor = spd_cholesky(matrix)
    np.testing.assert_allclose(factor @ factor.T, matrix)


def test_cholesky_adds_jitter_to_singular_matrix():
    factor = spd_cholesky(np.ones((2, 2)))
    assert np.all(np.isfinite(factor))


def test_cholesky_rejects_non_finite():
    with pytest.raises(DataError):
        spd_cholesky(np.array([[1.0, np.nan], [np.nan, 1.0]]))


@pytest.mark.parametrize('kind', ['lda', 'qda', 'gaussian_nb'])
def test_single_label_is_constant(make_matrix, kind):
    X = make_matrix([[1.0, 0.0], [0.0, 1.0]])
    model = fit_model(ClassifierSpec(kind), X, [0, 0])
    assert isinstance(model.estimator, ConstantModel)


@pytest.mark.parametrize('kind', ['lda', 'qda'])
def test_discriminants_on_corpus_projection(small_features, kind):
    _, X, y = small_features
    model = fit_model(ClassifierSpec(kind, {'top_k': 25}), X, y, seed=0)
    assert len(model.estimator.projection.indices) == min(25, X.shape[1])
    probabilities = model.estimator.predict_proba(X.values)
    assert np.all((probabilities >= 0) & (probabilities <= 1))
    assert np.mean((probabilities > 0.5) == y) > 0.6


def test_lda_labels_ignore_feature_scale():
    rng = np.random.default_rng(12)
    X = np.vstack([rng.normal([0.0, 0.0, 1.0], 1.0, size=(25, 3)),
                   rng.normal([1.5, -1.0, 1.0], 1.0, size=(25, 3))])
    y = np.array([0] * 25 + [1] * 25)
    scaled = X.copy()
    scaled[:, 1] *= 2.0
    original = fit_discriminant('lda', X, y, regularization=0.0).predict_proba(X)
    rescaled = fit_discriminant('lda', scaled, y, regularization=0.0).predict_proba(scaled)
    # nenhum documento em cima da fronteira
    assert np.min(np.abs(original - 0.5)) > 1e-6
    np.testing.assert_array_equal(original > 0.5, rescaled > 0.5)
    np.testing.assert_allclose(original, rescaled, rtol=1e-9, atol=1e-12)


def test_qda_payload_keeps_lower_triangles():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 4))
    y = np.array([0, 1] * 15)
    model = fit_discriminant('qda', X, y, regularization=1e-3)
    payload = model.to_payload()
    assert [len(packed) for packed in payload['cholesky']] == [10, 10]
    restored = type(model).from_payload(json.loads(json.dumps(payload)))
    np.testing.assert_array_equal(restored.cholesky, model.cholesky)
    np.testing.assert_array_equal(restored.predict_proba(X), model.predict_proba(X))


def test_qda_payload_rejects_wrong_triangle():
    model = fit_discriminant('qda', np.eye(3), np.array([0, 1, 1]), regularization=1e-3)
    payload = model.to_payload()
    payload['cholesky'] = [packed[:-1] for packed in payload['cholesky']]
    with pytest.raises(ShapeError):
        type(model).from_payload(payload)
