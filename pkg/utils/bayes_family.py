"""
Naive Bayes gaussiano, multinomial e de Bernoulli com um núcleo comum de
log-verossimilhança conjunta.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from utils.discriminant_family import DenseProjection, densify_topk
from utils.errors import DataError, ParameterError, ShapeError
from utils.featurizer import FeatureMatrix

logger = logging.getLogger(__name__)

VARIANTS = ('gaussian', 'multinomial', 'bernoulli')


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Priors em log e tabelas por variante (probabilidades ou média/variância)"""
    variant: str
    log_priors: np.ndarray
    feature_log_prob: Optional[np.ndarray] = None
    means: Optional[np.ndarray] = None
    variances: Optional[np.ndarray] = None
    smoothing: float = 1.0
    projection: Optional[DenseProjection] = None
    tag: str = 'naive_bayes'

    @property
    def n_features(self) -> int:
        table = self.feature_log_prob if self.variant != 'gaussian' else self.means
        return table.shape[1]

    def predict_proba(self, X) -> np.ndarray:
        if self.projection is not None:
            X = self.projection.apply(X)
        joint = nb_log_joint(self, X)
        return expit(joint[:, 1] - joint[:, 0])

    def to_payload(self) -> Dict[str, Any]:
        payload = {'estimator': self.tag, 'variant': self.variant,
                   'log_priors': self.log_priors.tolist(), 'smoothing': float(self.smoothing)}
        if self.variant == 'gaussian':
            payload['means'] = self.means.tolist()
            payload['variances'] = self.variances.tolist()
        else:
            payload['feature_log_prob'] = self.feature_log_prob.tolist()
        if self.projection is not None:
            payload['projection'] = self.projection.to_payload()
        return payload

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'NaiveBayesModel':
        def table(name):
            return np.asarray(payload[name], dtype=np.float64) if name in payload else None

        projection = DenseProjection.from_payload(payload['projection']) \
            if 'projection' in payload else None
        return cls(payload['variant'], table('log_priors'), table('feature_log_prob'),
                   table('means'), table('variances'), float(payload['smoothing']), projection)


def _class_log_priors(y: np.ndarray) -> np.ndarray:
    counts = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=np.float64)
    with np.errstate(divide='ignore'):
        return np.log(counts / counts.sum())


def fit_naive_bayes(variant: str, X, y: np.ndarray, smoothing: float = 1.0) -> NaiveBayesModel:
    """Ajusta a variante pedida; smoothing é α (multinomial/bernoulli) ou fator ε (gaussiano)"""
    if variant not in VARIANTS:
        raise ParameterError(f"Variante de Naive Bayes desconhecida: {variant!r}")
    if smoothing <= 0:
        raise ParameterError(f"Suavização deve ser > 0, recebido {smoothing}")
    y = np.asarray(y)
    log_priors = _class_log_priors(y)

    if variant == 'gaussian':
        dense = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
        overall = dense.var(axis=0).max() if dense.size else 0.0
        floor = smoothing * (overall if overall > 0 else 1.0)
        means = np.vstack([dense[y == label].mean(axis=0) for label in (0, 1)])
        variances = np.vstack([dense[y == label].var(axis=0) for label in (0, 1)])
        return NaiveBayesModel(variant, log_priors, means=means,
                               variances=np.maximum(variances, floor), smoothing=smoothing)

    X = sp.csr_matrix(X, dtype=np.float64)
    if X.nnz and X.data.min() < 0:
        raise DataError(f"Naive Bayes {variant} exige atributos não negativos")
    if variant == 'bernoulli':
        X = (X > 0).astype(np.float64)

    rows = []
    for label in (0, 1):
        members = X[y == label]
        totals = np.asarray(members.sum(axis=0)).ravel()
        if variant == 'multinomial':
            # (contagem + α) / (total + αV)
            rows.append((totals + smoothing) / (totals.sum() + smoothing * X.shape[1]))
        else:
            rows.append((totals + smoothing) / (members.shape[0] + 2.0 * smoothing))
    feature_log_prob = np.log(np.vstack(rows))
    logger.debug("Naive Bayes %s: %d atributos", variant, X.shape[1])
    return NaiveBayesModel(variant, log_priors, feature_log_prob=feature_log_prob,
                           smoothing=smoothing)


def nb_log_joint(model: NaiveBayesModel, X) -> np.ndarray:
    """Log prior + soma das log-verossimilhanças; uma linha por documento, uma coluna por rótulo"""
    single = not sp.issparse(X) and np.ndim(X) == 1
    if single:
        X = np.asarray(X, dtype=np.float64)[None, :]
    if X.shape[1] != model.n_features:
        raise ShapeError(f"Documento com {X.shape[1]} atributos; modelo tem {model.n_features}")

    if model.variant == 'gaussian':
        dense = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
        joint = np.empty((dense.shape[0], 2))
        for label in (0, 1):
            variance = model.variances[label]
            joint[:, label] = model.log_priors[label] \
                - 0.5 * np.sum(np.log(2.0 * np.pi * variance)) \
                - 0.5 * np.sum((dense - model.means[label]) ** 2 / variance, axis=1)
    elif model.variant == 'multinomial':
        joint = np.asarray(sp.csr_matrix(X) @ model.feature_log_prob.T) + model.log_priors
    else:
        present = (sp.csr_matrix(X) > 0).astype(np.float64)
        log_p = model.feature_log_prob
        log_absent = np.log1p(-np.exp(log_p))
        joint = np.asarray(present @ (log_p - log_absent).T) + log_absent.sum(axis=1) \
            + model.log_priors
    return joint[0] if single else joint


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    if kind == 'gaussian_nb':
        dense, projection = densify_topk(X.values, X.space.vocabulary, int(params['top_k']))
        model = fit_naive_bayes('gaussian', dense, y, float(params['var_smoothing']))
        return NaiveBayesModel(model.variant, model.log_priors, means=model.means,
                               variances=model.variances, smoothing=model.smoothing,
                               projection=projection)
    variant = 'multinomial' if kind == 'multinomial_nb' else 'bernoulli'
    return fit_naive_bayes(variant, X.values, y, float(params['alpha']))


ESTIMATORS = (NaiveBayesModel,)
