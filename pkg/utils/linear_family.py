"""
Modelos lineares treinados por SGD (regressão logística, perceptron, SVC
linear e SGD com perda configurável) e SVM com kernel via SMO.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from utils.errors import ParameterError, ShapeError
from utils.featurizer import FeatureMatrix
from utils.model_api import csr_from_payload, csr_to_payload

logger = logging.getLogger(__name__)

LOSSES = ('logistic', 'hinge', 'perceptron')
KERNELS = ('linear', 'rbf')
SUPPORT_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Pesos sobre o vocabulário + viés; probabilidade = sigmoide do escore"""
    weights: np.ndarray
    bias: float
    loss: str
    l2: float
    epochs: int
    eta0: float = 0.1
    averaged: bool = False
    objective_history: Tuple[float, ...] = ()
    tag: str = 'linear'

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_payload(self) -> Dict[str, Any]:
        return {
            'estimator': self.tag, 'weights': self.weights.tolist(), 'bias': float(self.bias),
            'loss': self.loss, 'l2': float(self.l2), 'epochs': int(self.epochs),
            'eta0': float(self.eta0), 'averaged': bool(self.averaged),
            'objective_history': [float(v) for v in self.objective_history],
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'LinearModel':
        return cls(np.asarray(payload['weights'], dtype=np.float64), float(payload['bias']),
                   payload['loss'], float(payload['l2']), int(payload['epochs']),
                   float(payload['eta0']), bool(payload['averaged']),
                   tuple(payload['objective_history']))


def _signed(y: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(y) == 1, 1.0, -1.0)


def training_objective(loss: str, weights: np.ndarray, bias: float, X, y: np.ndarray,
                       l2: float) -> float:
    """Perda média no treino + (λ/2)||w||²"""
    margins = np.asarray(X @ weights).ravel() + bias
    if loss == 'logistic':
        value = np.mean(np.logaddexp(0.0, margins) - y * margins)
    elif loss == 'hinge':
        value = np.mean(np.maximum(0.0, 1.0 - _signed(y) * margins))
    else:
        value = np.mean(np.maximum(0.0, -_signed(y) * margins))
        l2 = 0.0
    return float(value + 0.5 * l2 * weights @ weights)


def logistic_loss_grad(weights: np.ndarray, bias: float, X, y: np.ndarray,
                       l2: float) -> Tuple[float, np.ndarray]:
    """Entropia cruzada média + (λ/2)||w||² e seu gradiente (último elemento = viés)"""
    weights = np.asarray(weights, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = np.asarray(X @ weights).ravel() + bias
    loss = float(np.mean(np.logaddexp(0.0, margins) - y * margins) + 0.5 * l2 * weights @ weights)
    residual = (expit(margins) - y) / len(y)
    grad_w = np.asarray(X.T @ residual).ravel() + l2 * weights
    return loss, np.append(grad_w, residual.sum())


def fit_linear(loss: str, X, y: np.ndarray, l2: float = 1e-4, epochs: int = 20, seed: int = 0,
               eta0: float = 0.1, average: bool = False) -> LinearModel:
    """SGD amostra a amostra com ordem embaralhada por época"""
    if loss not in LOSSES:
        raise ParameterError(f"Perda desconhecida: {loss!r}")
    if epochs < 1:
        raise ParameterError(f"epochs deve ser >= 1, recebido {epochs}")
    if l2 < 0 or eta0 <= 0:
        raise ParameterError(f"Requer l2 >= 0 e eta0 > 0 (l2={l2}, eta0={eta0})")

    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y)
    signed = _signed(y)
    n_samples, n_features = X.shape
    indptr, indices, data = X.indptr, X.indices, X.data

    rng = np.random.default_rng(seed)
    weights = np.zeros(n_features)
    bias = 0.0
    avg_weights = np.zeros(n_features)
    avg_bias = 0.0
    step = 0
    history = []
    for epoch in range(epochs):
        for i in rng.permutation(n_samples):
            cols = indices[indptr[i]:indptr[i + 1]]
            vals = data[indptr[i]:indptr[i + 1]]
            margin = weights[cols] @ vals + bias
            if loss == 'perceptron':
                # Atualização clássica guiada por erro; λ ignorado
                if signed[i] * margin <= 0:
                    weights[cols] += signed[i] * vals
                    bias += signed[i]
            else:
                eta = eta0 / (1.0 + eta0 * l2 * step)
                weights *= 1.0 - eta * l2
                if loss == 'logistic':
                    gradient = expit(margin) - y[i]
                    weights[cols] -= eta * gradient * vals
                    bias -= eta * gradient
                elif signed[i] * margin < 1.0:
                    weights[cols] += eta * signed[i] * vals
                    bias += eta * signed[i]
            step += 1
            if average:
                avg_weights += (weights - avg_weights) / step
                avg_bias += (bias - avg_bias) / step

        current_w, current_b = (avg_weights, avg_bias) if average else (weights, bias)
        history.append(training_objective(loss, current_w, current_b, X, y, l2))
        logger.debug("SGD %s época %d: objetivo %.6f", loss, epoch + 1, history[-1])

    final_w, final_b = (avg_weights, avg_bias) if average else (weights, bias)
    return LinearModel(final_w.copy(), float(final_b), loss, float(l2), int(epochs),
                       float(eta0), bool(average), tuple(history))


# --- SVM com kernel -------------------------------------------------------

def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    """Matriz de kernel densa entre as linhas de A e B"""
    gram = (A @ B.T).toarray() if sp.issparse(A) else np.asarray(A @ B.T)
    if kernel == 'linear':
        return gram
    sq_a = np.asarray(A.multiply(A).sum(axis=1)).ravel() if sp.issparse(A) else np.sum(A ** 2, axis=1)
    sq_b = np.asarray(B.multiply(B).sum(axis=1)).ravel() if sp.issparse(B) else np.sum(B ** 2, axis=1)
    distances = np.maximum(sq_a[:, None] + sq_b[None, :] - 2.0 * gram, 0.0)
    return np.exp(-gamma * distances)


def default_gamma(X) -> float:
    """γ = 1 / (V * variância média das entradas); 1.0 se a variância for nula"""
    n_samples, n_features = X.shape
    if n_samples == 0 or n_features == 0:
        return 1.0
    total = float(n_samples * n_features)
    mean = X.sum() / total
    variance = X.multiply(X).sum() / total - mean ** 2 if sp.issparse(X) else float(np.var(X))
    return 1.0 / (n_features * variance) if variance > 0 else 1.0


@dataclass(frozen=True, eq=False)
class SmoModel:
    """Vetores de suporte, coeficientes duais α_i y_i e viés"""
    support_vectors: sp.csr_matrix
    dual_coef: np.ndarray
    bias: float
    kernel: str
    gamma: float
    C: float
    converged: bool = True
    iterations: int = 0
    tag: str = 'smo'

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision_function(self, X) -> np.ndarray:
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        kernel = kernel_matrix(sp.csr_matrix(X), self.support_vectors, self.kernel, self.gamma)
        return kernel @ self.dual_coef + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_payload(self) -> Dict[str, Any]:
        return {
            'estimator': self.tag, 'support_vectors': csr_to_payload(self.support_vectors),
            'dual_coef': self.dual_coef.tolist(), 'bias': float(self.bias),
            'kernel': self.kernel, 'gamma': float(self.gamma), 'C': float(self.C),
            'converged': bool(self.converged), 'iterations': int(self.iterations),
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'SmoModel':
        return cls(csr_from_payload(payload['support_vectors']),
                   np.asarray(payload['dual_coef'], dtype=np.float64), float(payload['bias']),
                   payload['kernel'], float(payload['gamma']), float(payload['C']),
                   bool(payload['converged']), int(payload['iterations']))


def fit_svm_smo(X, y: np.ndarray, C: float = 1.0, kernel: str = 'rbf', seed: int = 0,
                gamma: Optional[float] = None, tol: float = 1e-3,
                max_passes: int = 1000) -> SmoModel:
    """SMO com seleção do par de máxima violação das condições KKT"""
    if kernel not in KERNELS:
        raise ParameterError(f"Kernel desconhecido: {kernel!r}")
    if C <= 0 or tol <= 0 or max_passes < 1:
        raise ParameterError(f"Requer C > 0, tol > 0 e max_passes >= 1 (C={C}, tol={tol})")
    X = sp.csr_matrix(X, dtype=np.float64)
    signed = _signed(y)
    n_samples = X.shape[0]
    if len(signed) != n_samples:
        raise ShapeError(f"{n_samples} linhas para {len(signed)} rótulos")
    gamma = default_gamma(X) if gamma is None else float(gamma)
    K = kernel_matrix(X, X, kernel, gamma)

    # Ordem semeada de varredura decide empates entre violações iguais
    order = np.random.default_rng(seed).permutation(n_samples)
    y_sorted = signed[order]
    K = K[np.ix_(order, order)]

    alpha = np.zeros(n_samples)
    gradient = np.ones(n_samples)
    lower = np.where(y_sorted > 0, 0.0, -C)
    upper = np.where(y_sorted > 0, C, 0.0)
    converged = False
    iteration = 0
    max_iterations = max_passes * max(n_samples, 1)
    crit_i = crit_j = 0.0
    while iteration < max_iterations:
        criterion = y_sorted * gradient
        scaled = y_sorted * alpha
        up = scaled < upper
        low = scaled > lower
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(criterion[up])])
        j = int(np.flatnonzero(low)[np.argmin(criterion[low])])
        crit_i, crit_j = criterion[i], criterion[j]
        if crit_i - crit_j <= tol:
            converged = True
            break
        curvature = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        step = min(upper[i] - scaled[i], scaled[j] - lower[j], (crit_i - crit_j) / curvature)
        gradient += step * y_sorted * (K[j] - K[i])
        alpha[i] += y_sorted[i] * step
        alpha[j] -= y_sorted[j] * step
        alpha[[i, j]] = np.clip(alpha[[i, j]], 0.0, C)
        iteration += 1
        if iteration % 1000 == 0:
            logger.debug("SMO: %d iterações, violação %.2e", iteration, crit_i - crit_j)

    if not converged:
        logger.warning("SMO não convergiu após %d iterações (tol=%g)", iteration, tol)

    free = (alpha > SUPPORT_THRESHOLD) & (alpha < C - SUPPORT_THRESHOLD)
    criterion = y_sorted * gradient
    bias = float(np.mean(criterion[free])) if free.any() else float((crit_i + crit_j) / 2.0)

    support = alpha > SUPPORT_THRESHOLD
    original_rows = order[support]
    by_row = np.argsort(original_rows, kind='stable')
    vectors = X[original_rows[by_row]]
    dual_coef = (alpha[support] * y_sorted[support])[by_row]
    logger.info("SMO: %d vetores de suporte de %d, %d iterações", len(dual_coef), n_samples,
                iteration)
    return SmoModel(vectors, dual_coef, bias, kernel, float(gamma), float(C), converged, iteration)


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    values = X.values
    if kind == 'svm':
        return fit_svm_smo(values, y, float(params['C']), params['kernel'], seed,
                           params['gamma'], float(params['tol']), int(params['max_passes']))
    if kind == 'perceptron':
        return fit_linear('perceptron', values, y, 0.0, int(params['epochs']), seed)
    loss = {'logistic_regression': 'logistic', 'linear_svc': 'hinge'}.get(kind, params.get('loss'))
    return fit_linear(loss, values, y, float(params['l2']), int(params['epochs']), seed,
                      float(params['eta0']), bool(params['average']))


ESTIMATORS = (LinearModel, SmoModel)
