"""
LDA e QDA regularizadas sobre uma projeção densa dos termos mais
frequentes do vocabulário.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.special import expit

from utils.errors import DataError, ParameterError, ShapeError
from utils.featurizer import FeatureMatrix, Vocabulary

logger = logging.getLogger(__name__)

COVARIANCE_FLOOR = 1e-6
_MAX_JITTER_TRIES = 8


@dataclass(frozen=True, eq=False)
class DenseProjection:
    """Índices retidos (top-k por frequência de documento), em ordem crescente"""
    indices: np.ndarray
    k: int

    def apply(self, X) -> np.ndarray:
        """Colunas retidas como matriz densa"""
        if sp.issparse(X):
            return X.tocsc()[:, self.indices].toarray()
        return np.asarray(X, dtype=np.float64)[:, self.indices]

    def to_payload(self) -> Dict[str, Any]:
        return {'indices': self.indices.tolist(), 'k': self.k}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> 'DenseProjection':
        return cls(np.asarray(payload['indices'], dtype=np.int64), int(payload['k']))


def topk_indices(df: np.ndarray, k: int) -> np.ndarray:
    """Maiores df (empate: menor índice), devolvidos em ordem crescente"""
    if k < 1:
        raise ParameterError(f"k deve ser >= 1, recebido {k}")
    df = np.asarray(df)
    order = np.lexsort((np.arange(len(df)), -df))
    return np.sort(order[:min(k, len(df))]).astype(np.int64)


def densify_topk(X, vocab: Vocabulary, k: int = 2000) -> Tuple[np.ndarray, DenseProjection]:
    """Projeção densa nas k colunas de maior frequência de documento"""
    if X.shape[1] != len(vocab):
        raise ShapeError(f"Matriz com {X.shape[1]} colunas para vocabulário de {len(vocab)}")
    projection = DenseProjection(topk_indices(vocab.df_array, k), int(k))
    return projection.apply(X), projection


def spd_cholesky(matrix: np.ndarray) -> np.ndarray:
    """Fator de Cholesky (inferior); soma jitter crescente na diagonal se preciso"""
    if not np.isfinite(matrix).all():
        raise DataError("Covariância com valores não finitos")
    size = matrix.shape[0]
    if size == 0:
        return np.zeros((0, 0))
    jitter = 0.0
    for attempt in range(_MAX_JITTER_TRIES):
        try:
            return linalg.cholesky(matrix + jitter * np.eye(size), lower=True)
        except linalg.LinAlgError:
            jitter = COVARIANCE_FLOOR * (10.0 ** attempt)
            logger.debug("Covariância não definida positiva; jitter %.1e", jitter)
    raise DataError("Covariância não pôde ser fatorada mesmo com regularização")


def _floor_diagonal(matrix: np.ndarray) -> np.ndarray:
    diagonal = np.diag(matrix).copy()
    np.fill_diagonal(matrix, np.maximum(diagonal, COVARIANCE_FLOOR))
    return matrix


def _log_priors(y: np.ndarray) -> np.ndarray:
    counts = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=np.float64)
    with np.errstate(divide='ignore'):
        return np.log(counts / counts.sum())


@dataclass(frozen=True, eq=False)
class LdaModel:
    """Discriminante linear com covariância compartilhada"""
    coef: np.ndarray
    intercept: float
    projection: DenseProjection
    tag: str = 'lda'

    def decision_function(self, dense: np.ndarray) -> np.ndarray:
        return dense @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(self.projection.apply(X)))

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'coef': self.coef.tolist(),
                'intercept': float(self.intercept), 'projection': self.projection.to_payload()}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'LdaModel':
        return cls(np.asarray(payload['coef'], dtype=np.float64), float(payload['intercept']),
                   DenseProjection.from_payload(payload['projection']))


@dataclass(frozen=True, eq=False)
class QdaModel:
    """Discriminantes quadráticos com uma covariância por rótulo"""
    means: np.ndarray
    cholesky: np.ndarray
    log_priors: np.ndarray
    projection: DenseProjection
    tag: str = 'qda'

    def discriminants(self, dense: np.ndarray) -> np.ndarray:
        scores = np.empty((dense.shape[0], 2))
        for label in (0, 1):
            factor = self.cholesky[label]
            centered = dense - self.means[label]
            # Distância de Mahalanobis via L^-1 (x - mu)
            solved = linalg.solve_triangular(factor, centered.T, lower=True)
            log_det = 2.0 * np.sum(np.log(np.diag(factor)))
            scores[:, label] = -0.5 * log_det - 0.5 * np.sum(solved ** 2, axis=0) \
                + self.log_priors[label]
        return scores

    def predict_proba(self, X) -> np.ndarray:
        scores = self.discriminants(self.projection.apply(X))
        return expit(scores[:, 1] - scores[:, 0])

    def to_payload(self) -> Dict[str, Any]:
        # Só o triângulo inferior de cada fator, linha a linha
        rows, cols = np.tril_indices(self.means.shape[1])
        return {'estimator': self.tag, 'means': self.means.tolist(),
                'cholesky': [factor[rows, cols].tolist() for factor in self.cholesky],
                'log_priors': self.log_priors.tolist(),
                'projection': self.projection.to_payload()}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'QdaModel':
        means = np.asarray(payload['means'], dtype=np.float64)
        size = means.shape[1]
        packed = np.asarray(payload['cholesky'], dtype=np.float64)
        if packed.shape != (2, size * (size + 1) // 2):
            raise ShapeError(f"Fatores de Cholesky {packed.shape} para dimensão {size}")
        rows, cols = np.tril_indices(size)
        factors = np.zeros((2, size, size))
        factors[:, rows, cols] = packed
        return cls(means, factors, np.asarray(payload['log_priors'], dtype=np.float64),
                   DenseProjection.from_payload(payload['projection']))


def fit_discriminant(kind: str, X_dense: np.ndarray, y: np.ndarray, regularization: float,
                     projection: DenseProjection = None):
    """Ajusta LDA (regularization = encolhimento δ) ou QDA (regularization = ridge λ)"""
    X_dense = np.asarray(X_dense, dtype=np.float64)
    y = np.asarray(y)
    if projection is None:
        projection = DenseProjection(np.arange(X_dense.shape[1], dtype=np.int64), X_dense.shape[1])
    if kind == 'lda' and not 0.0 <= regularization <= 1.0:
        raise ParameterError(f"shrinkage deve estar em [0, 1], recebido {regularization}")
    if kind == 'qda' and regularization < 0:
        raise ParameterError(f"ridge deve ser >= 0, recebido {regularization}")

    n_features = X_dense.shape[1]
    means = np.vstack([X_dense[y == label].mean(axis=0) if np.any(y == label)
                       else np.zeros(n_features) for label in (0, 1)])
    log_priors = _log_priors(y)

    if kind == 'lda' and n_features == 0:
        return LdaModel(np.zeros(0), float(log_priors[1] - log_priors[0]), projection)
    if kind == 'lda':
        centered = X_dense - means[y]
        pooled = centered.T @ centered / max(len(y) - 2, 1)
        shrunk = (1.0 - regularization) * pooled + regularization * np.diag(np.diag(pooled))
        factor = spd_cholesky(_floor_diagonal(shrunk))
        coef = linalg.cho_solve((factor, True), means[1] - means[0])
        inverse_means = linalg.cho_solve((factor, True), means.T)
        intercept = -0.5 * (means[1] @ inverse_means[:, 1] - means[0] @ inverse_means[:, 0]) \
            + log_priors[1] - log_priors[0]
        return LdaModel(coef, float(intercept), projection)

    if kind == 'qda':
        factors = []
        for label in (0, 1):
            members = X_dense[y == label]
            if len(members) < 2 or n_features == 0:
                covariance = COVARIANCE_FLOOR * np.eye(n_features)
            else:
                covariance = np.atleast_2d(np.cov(members, rowvar=False, ddof=1))
            covariance = _floor_diagonal(covariance + regularization * np.eye(n_features))
            factors.append(spd_cholesky(covariance))
        return QdaModel(means, np.stack(factors), log_priors, projection)

    raise ParameterError(f"Discriminante desconhecido: {kind!r}")


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    dense, projection = densify_topk(X.values, X.space.vocabulary, int(params['top_k']))
    regularization = params['shrinkage'] if kind == 'lda' else params['ridge']
    return fit_discriminant(kind, dense, y, float(regularization), projection)


ESTIMATORS = (LdaModel, QdaModel)
