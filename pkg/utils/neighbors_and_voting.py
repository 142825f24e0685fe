"""
k vizinhos mais próximos e votação suave sobre os demais modelos base.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from utils.errors import CompatibilityError, ParameterError, SpecError
from utils.featurizer import FeatureMatrix
from utils.model_api import (BASE_KINDS, ClassifierSpec, TrainedModel, csr_from_payload,
                             csr_to_payload, estimator_loaders, fit_model, member_seed)

logger = logging.getLogger(__name__)

METRICS = ('cosine', 'euclidean')
_QUERY_CHUNK = 512


def pairwise_distances(queries, stored, metric: str = 'cosine') -> np.ndarray:
    """Distâncias (consultas x armazenados); vetor nulo tem distância cosseno 1 a todos"""
    queries = sp.csr_matrix(queries, dtype=np.float64)
    stored = sp.csr_matrix(stored, dtype=np.float64)
    dots = (queries @ stored.T).toarray()
    sq_q = np.asarray(queries.multiply(queries).sum(axis=1)).ravel()
    sq_s = np.asarray(stored.multiply(stored).sum(axis=1)).ravel()
    if metric == 'euclidean':
        return np.sqrt(np.maximum(sq_q[:, None] + sq_s[None, :] - 2.0 * dots, 0.0))
    norms = np.sqrt(sq_q)[:, None] * np.sqrt(sq_s)[None, :]
    with np.errstate(invalid='ignore', divide='ignore'):
        similarity = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    return np.clip(1.0 - similarity, 0.0, 2.0)


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Matriz de treino, rótulos, k e métrica"""
    train: sp.csr_matrix
    labels: np.ndarray
    k: int
    metric: str = 'cosine'
    tag: str = 'knn'

    def neighbours(self, X) -> np.ndarray:
        """Índices dos k vizinhos; empate na distância favorece o menor índice de treino"""
        X = sp.csr_matrix(X)
        result = np.empty((X.shape[0], self.k), dtype=np.int64)
        for start in range(0, X.shape[0], _QUERY_CHUNK):
            distances = pairwise_distances(X[start:start + _QUERY_CHUNK], self.train, self.metric)
            result[start:start + _QUERY_CHUNK] = np.argsort(distances, axis=1, kind='stable')[:, :self.k]
        return result

    def predict_proba(self, X) -> np.ndarray:
        return self.labels[self.neighbours(X)].sum(axis=1) / self.k

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'train': csr_to_payload(self.train),
                'labels': self.labels.tolist(), 'k': int(self.k), 'metric': self.metric}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'KnnModel':
        return cls(csr_from_payload(payload['train']),
                   np.asarray(payload['labels'], dtype=np.int64), int(payload['k']),
                   payload['metric'])


def fit_knn(X, y: np.ndarray, k: int = 5, metric: str = 'cosine') -> KnnModel:
    """Guarda o treino; k deve estar em [1, n_train]"""
    if metric not in METRICS:
        raise ParameterError(f"Métrica desconhecida: {metric!r}")
    train = sp.csr_matrix(X, dtype=np.float64)
    if not 1 <= k <= train.shape[0]:
        raise ParameterError(f"k={k} fora de [1, {train.shape[0]}] (tamanho do treino)")
    return KnnModel(train, np.asarray(y, dtype=np.int64), int(k), metric)


def knn_predict_proba(model: KnnModel, x) -> np.ndarray:
    """Fração de positivos entre os k vizinhos de cada linha"""
    return model.predict_proba(x)


@dataclass(frozen=True, eq=False)
class VotingModel:
    """Média simples das probabilidades dos membros"""
    members: Tuple[TrainedModel, ...]
    tag: str = 'voting'

    @classmethod
    def from_members(cls, members: Sequence[TrainedModel]) -> 'VotingModel':
        members = tuple(members)
        if not members:
            raise SpecError("Votação exige ao menos um membro")
        if any(member.kind == 'voting' for member in members):
            raise SpecError("Votação não pode conter outra votação")
        fingerprints = {member.fingerprint for member in members}
        if len(fingerprints) != 1:
            raise CompatibilityError(
                f"Membros da votação vêm de {len(fingerprints)} espaços de atributos diferentes")
        return cls(members)

    def member_probabilities(self, X) -> np.ndarray:
        """Uma linha por membro, na ordem dos membros"""
        return np.vstack([np.clip(member.estimator.predict_proba(X), 0.0, 1.0)
                          for member in self.members])

    def predict_proba(self, X) -> np.ndarray:
        probabilities = self.member_probabilities(X)
        # soma em ordem crescente torna o resultado independente da ordem dos membros
        mean = np.sort(probabilities, axis=0).sum(axis=0) / len(self.members)
        return np.clip(mean, probabilities.min(axis=0), probabilities.max(axis=0))

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'members': [
            {'kind': member.kind, 'hyperparameters': dict(member.spec.hyperparameters),
             'seed': member.seed, 'n_train': member.n_train, 'payload': member.payload}
            for member in self.members]}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'VotingModel':
        loaders = estimator_loaders()
        members = []
        for entry in payload['members']:
            estimator = loaders[entry['payload']['estimator']](entry['payload'], space)
            members.append(TrainedModel(ClassifierSpec(entry['kind'], entry['hyperparameters']),
                                        estimator, space, int(entry['seed']), int(entry['n_train'])))
        return cls(tuple(members))


def voting_predict_proba(model: VotingModel, X) -> np.ndarray:
    values = X.values if isinstance(X, FeatureMatrix) else X
    if isinstance(X, FeatureMatrix):
        for member in model.members:
            if member.fingerprint != X.fingerprint:
                raise CompatibilityError("Matriz gerada por outro vocabulário que o dos membros")
    return model.predict_proba(values)


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    if kind == 'knn':
        return fit_knn(X.values, y, int(params['k']), params['metric'])
    members = [fit_model(ClassifierSpec(base_kind), X, y, member_seed(seed, base_kind))
               for base_kind in BASE_KINDS]
    logger.info("Votação com %d membros", len(members))
    return VotingModel.from_members(members)


ESTIMATORS = (KnnModel, VotingModel)
