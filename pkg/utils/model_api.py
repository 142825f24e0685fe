"""
Contrato comum dos dezenove classificadores: ajuste, probabilidades,
rótulos, sementes determinísticas e persistência versionada em JSON.
"""
import hashlib
import importlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Protocol, Tuple, Union

import numpy as np
import scipy.sparse as sp

from utils.errors import (CompatibilityError, DataError, IntegrityError,
                          MigrationError, SpecError)
from utils.featurizer import FeatureMatrix, FeatureSpace

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MASK64 = (1 << 64) - 1

# Nomes exatos usados na CLI e nos arquivos de modelo
KINDS: Tuple[str, ...] = (
    'gaussian_nb', 'multinomial_nb', 'bernoulli_nb', 'decision_tree', 'extra_trees',
    'lda', 'qda', 'adaboost', 'gbm', 'random_forest', 'logistic_regression',
    'perceptron', 'linear_svc', 'xgb_style', 'knn', 'svm', 'sgd', 'lgbm_style', 'voting',
)
BASE_KINDS: Tuple[str, ...] = tuple(kind for kind in KINDS if kind != 'voting')

_TREE_DEFAULTS = {'max_depth': None, 'min_samples_split': 2, 'min_samples_leaf': 1}

DEFAULT_HYPERPARAMETERS: Dict[str, Dict[str, Any]] = {
    'gaussian_nb': {'top_k': 2000, 'var_smoothing': 1e-9},
    'multinomial_nb': {'alpha': 1.0},
    'bernoulli_nb': {'alpha': 1.0},
    'decision_tree': {**_TREE_DEFAULTS, 'max_features': None},
    'random_forest': {**_TREE_DEFAULTS, 'n_estimators': 100, 'max_features': 'sqrt',
                      'bootstrap': True, 'n_jobs': 1},
    'extra_trees': {**_TREE_DEFAULTS, 'n_estimators': 100, 'max_features': 'sqrt',
                    'bootstrap': False, 'n_jobs': 1},
    'lda': {'top_k': 2000, 'shrinkage': 0.1},
    'qda': {'top_k': 2000, 'ridge': 1e-3},
    'adaboost': {'rounds': 50},
    'gbm': {'rounds': 100, 'learning_rate': 0.1, 'max_depth': 3, 'min_child': 1},
    'xgb_style': {'rounds': 50, 'learning_rate': 0.3, 'max_depth': 3, 'reg_lambda': 1.0,
                  'min_child': 1, 'max_bins': None},
    'lgbm_style': {'rounds': 100, 'learning_rate': 0.1, 'max_leaves': 31, 'min_child': 20,
                   'reg_lambda': 1.0, 'max_bins': 255},
    'logistic_regression': {'l2': 1e-4, 'epochs': 20, 'eta0': 0.1, 'average': False},
    'perceptron': {'epochs': 20},
    'linear_svc': {'l2': 1e-4, 'epochs': 20, 'eta0': 0.1, 'average': False},
    'sgd': {'loss': 'hinge', 'l2': 1e-4, 'epochs': 20, 'eta0': 0.1, 'average': False},
    'svm': {'C': 1.0, 'kernel': 'rbf', 'gamma': None, 'tol': 1e-3, 'max_passes': 1000},
    'knn': {'k': 5, 'metric': 'cosine'},
    'voting': {},
}

_CHOICES = {
    'loss': ('logistic', 'hinge', 'perceptron'),
    'kernel': ('linear', 'rbf'),
    'metric': ('cosine', 'euclidean'),
}

# Módulo de cada família; importados sob demanda (votação depende deste módulo)
_FAMILY_MODULES = {
    'gaussian_nb': 'utils.bayes_family', 'multinomial_nb': 'utils.bayes_family',
    'bernoulli_nb': 'utils.bayes_family',
    'decision_tree': 'utils.tree_family', 'random_forest': 'utils.tree_family',
    'extra_trees': 'utils.tree_family',
    'lda': 'utils.discriminant_family', 'qda': 'utils.discriminant_family',
    'adaboost': 'utils.boosting_family', 'gbm': 'utils.boosting_family',
    'xgb_style': 'utils.boosting_family', 'lgbm_style': 'utils.boosting_family',
    'logistic_regression': 'utils.linear_family', 'perceptron': 'utils.linear_family',
    'linear_svc': 'utils.linear_family', 'sgd': 'utils.linear_family',
    'svm': 'utils.linear_family',
    'knn': 'utils.neighbors_and_voting', 'voting': 'utils.neighbors_and_voting',
}


@dataclass(frozen=True)
class ClassifierSpec:
    """Tipo de modelo + hiperparâmetros completos"""
    kind: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DEFAULT_HYPERPARAMETERS:
            raise SpecError(f"Tipo de modelo desconhecido: {self.kind!r}")
        defaults = DEFAULT_HYPERPARAMETERS[self.kind]
        unknown = sorted(set(self.hyperparameters) - set(defaults))
        if unknown:
            raise SpecError(
                f"Hiperparâmetros desconhecidos para {self.kind}: {', '.join(unknown)}")
        merged = {**defaults, **self.hyperparameters}
        for name, allowed in _CHOICES.items():
            if name in merged and merged[name] not in allowed:
                raise SpecError(f"{name}={merged[name]!r} inválido; opções: {allowed}")
        object.__setattr__(self, 'hyperparameters', merged)

    @classmethod
    def create(cls, kind: str, **overrides) -> 'ClassifierSpec':
        return cls(kind, overrides)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'hyperparameters': dict(self.hyperparameters)}

    def __hash__(self):
        return hash((self.kind, canonical_json(dict(self.hyperparameters))))


class Estimator(Protocol):
    """Interface interna de cada família"""
    tag: str

    def predict_proba(self, X: sp.csr_matrix) -> np.ndarray: ...

    def to_payload(self) -> Dict[str, Any]: ...


@dataclass(frozen=True)
class ConstantModel:
    """Preditor constante para treino com um único rótulo"""
    probability: float
    tag: str = 'constant'

    def predict_proba(self, X: sp.csr_matrix) -> np.ndarray:
        return np.full(X.shape[0], self.probability)

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'probability': float(self.probability)}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space: FeatureSpace) -> 'ConstantModel':
        return cls(float(payload['probability']))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Modelo ajustado, imutável, ligado ao espaço de atributos do treino"""
    spec: ClassifierSpec
    estimator: Any
    space: FeatureSpace
    seed: int
    n_train: int

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def fingerprint(self) -> str:
        return self.space.fingerprint

    @property
    def payload(self) -> Dict[str, Any]:
        return self.estimator.to_payload()


# --- sementes -------------------------------------------------------------

def splitmix64(state: int) -> int:
    """Um passo do gerador splitmix64"""
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Semente do i-ésimo componente derivada da semente mestre"""
    return splitmix64((int(master) ^ splitmix64(int(index))) & MASK64)


def member_seed(seed: int, kind: str) -> int:
    """Semente de cada modelo base (benchmark e votação usam a mesma)"""
    return derive_seed(seed, KINDS.index(kind))


# --- serialização ---------------------------------------------------------

def _to_builtin(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"Tipo não serializável: {type(obj).__name__}")


def canonical_json(obj) -> str:
    """JSON canônico (chaves ordenadas, sem espaços) usado nos checksums"""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), ensure_ascii=False,
                      default=_to_builtin)


def sha256_hex(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()


def csr_to_payload(matrix: sp.csr_matrix) -> Dict[str, Any]:
    return {
        'shape': [int(matrix.shape[0]), int(matrix.shape[1])],
        'data': matrix.data.tolist(),
        'indices': matrix.indices.tolist(),
        'indptr': matrix.indptr.tolist(),
    }


def csr_from_payload(payload: Dict[str, Any]) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.asarray(payload['data'], dtype=np.float64),
         np.asarray(payload['indices'], dtype=np.int64),
         np.asarray(payload['indptr'], dtype=np.int64)),
        shape=tuple(payload['shape']))


# --- registro das famílias ------------------------------------------------

def _family(kind: str):
    return importlib.import_module(_FAMILY_MODULES[kind])


def estimator_loaders() -> Dict[str, Callable[[Dict[str, Any], FeatureSpace], Any]]:
    """Tag do payload -> construtor do estimador"""
    loaders: Dict[str, Callable] = {ConstantModel.tag: ConstantModel.from_payload}
    for module_name in sorted(set(_FAMILY_MODULES.values())):
        module = importlib.import_module(module_name)
        for estimator_cls in module.ESTIMATORS:
            loaders[estimator_cls.tag] = estimator_cls.from_payload
    return loaders


def validate_labels(y, n_rows: int) -> np.ndarray:
    labels = np.asarray(y)
    if labels.ndim != 1 or len(labels) != n_rows:
        raise DataError(f"Esperados {n_rows} rótulos, recebidos {labels.shape}")
    if not np.isin(labels, (0, 1)).all():
        raise DataError("Rótulos devem ser 0 ou 1")
    return labels.astype(np.int64)


# --- operações ------------------------------------------------------------

def fit_model(spec: ClassifierSpec, X: FeatureMatrix, y, seed: int = 42) -> TrainedModel:
    """Ajusta o classificador descrito por spec"""
    if not isinstance(spec, ClassifierSpec):
        raise SpecError(f"Especificação inválida: {spec!r}")
    labels = validate_labels(y, X.shape[0])
    if X.values.nnz and not np.isfinite(X.values.data).all():
        raise DataError("Matriz de atributos contém valores não finitos")

    started = time.perf_counter()
    present = np.unique(labels)
    if len(present) == 1:
        # Degenerado: prevê sempre o único rótulo visto
        estimator = ConstantModel(float(present[0]))
    elif len(present) == 0:
        raise DataError("Nenhum documento de treino")
    else:
        estimator = _family(spec.kind).fit_from_spec(
            spec.kind, X, labels, dict(spec.hyperparameters), int(seed))
    logger.info("Modelo %s ajustado em %.2fs (%d documentos)", spec.kind,
                time.perf_counter() - started, len(labels))
    return TrainedModel(spec, estimator, X.space, int(seed), len(labels))


def _check_compatible(model: TrainedModel, X: FeatureMatrix):
    if X.fingerprint != model.fingerprint:
        raise CompatibilityError(
            f"Matriz gerada por outro vocabulário ({X.fingerprint[:12]} != {model.fingerprint[:12]})")


def predict_proba(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    """Probabilidade do rótulo 1 para cada linha"""
    _check_compatible(model, X)
    probabilities = np.asarray(model.estimator.predict_proba(X.values), dtype=np.float64)
    return np.clip(probabilities, 0.0, 1.0)


def threshold_labels(probabilities: np.ndarray) -> np.ndarray:
    """Rótulo 1 somente quando a probabilidade passa de 0.5"""
    return (np.asarray(probabilities) > 0.5).astype(np.int64)


def predict_labels(model: TrainedModel, X: FeatureMatrix) -> np.ndarray:
    return threshold_labels(predict_proba(model, X))


def model_to_envelope(model: TrainedModel) -> Dict[str, Any]:
    payload = json.loads(canonical_json(model.payload))
    return {
        'format_version': FORMAT_VERSION,
        'kind': model.kind,
        'hyperparameters': dict(model.spec.hyperparameters),
        'vocabulary': model.space.to_dict(),
        'fingerprint': model.fingerprint,
        'payload': payload,
        'checksum': sha256_hex(payload),
        'training': {'seed': model.seed, 'n_train': model.n_train},
    }


def model_from_envelope(envelope: Dict[str, Any]) -> TrainedModel:
    version = envelope.get('format_version')
    if version != FORMAT_VERSION:
        raise MigrationError(version, FORMAT_VERSION)
    try:
        payload = envelope['payload']
        if sha256_hex(payload) != envelope['checksum']:
            raise IntegrityError("Checksum do payload não confere; arquivo corrompido")
        space = FeatureSpace.from_dict(envelope['vocabulary'])
        if space.fingerprint != envelope['fingerprint']:
            raise IntegrityError("Fingerprint do vocabulário não confere")
        spec = ClassifierSpec(envelope['kind'], envelope['hyperparameters'])
        loader = estimator_loaders().get(payload.get('estimator'))
        if loader is None:
            raise IntegrityError(f"Estimador desconhecido: {payload.get('estimator')!r}")
        estimator = loader(payload, space)
        training = envelope['training']
    except (KeyError, TypeError) as exc:
        raise IntegrityError(f"Arquivo de modelo incompleto: {exc}") from exc
    return TrainedModel(spec, estimator, space, int(training['seed']), int(training['n_train']))


def save_model(model: TrainedModel, path: Union[str, Path]) -> None:
    """Grava o modelo como envelope JSON versionado"""
    path = Path(path)
    path.write_text(json.dumps(model_to_envelope(model), ensure_ascii=False,
                               default=_to_builtin), encoding='utf-8')
    logger.info("Modelo %s salvo em %s", model.kind, path)


def load_model(path: Union[str, Path]) -> TrainedModel:
    """Lê um envelope JSON e reconstrói o modelo"""
    path = Path(path)
    try:
        envelope = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"Arquivo de modelo {path} não é JSON válido: {exc}") from exc
    if not isinstance(envelope, dict):
        raise IntegrityError(f"Arquivo de modelo {path} mal formado")
    return model_from_envelope(envelope)


def resolve_spec(kind: str, overrides: Optional[Mapping[str, Any]] = None) -> ClassifierSpec:
    return ClassifierSpec(kind, dict(overrides or {}))
