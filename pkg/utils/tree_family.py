"""
Árvore CART (Gini), random forest e extra trees sobre TF-IDF esparso.
Zeros implícitos participam dos cortes como um balde próprio por atributo.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed

from utils.errors import ParameterError
from utils.featurizer import FeatureMatrix
from utils.model_api import derive_seed

logger = logging.getLogger(__name__)

TREE_KINDS = ('decision_tree', 'random_forest', 'extra_trees')
# Ganhos a menos disto do melhor contam como empate
GAIN_TOLERANCE = 1e-12
LEAF = -1


class SplitDecision(NamedTuple):
    feature: int
    threshold: float
    gain: float


@dataclass(frozen=True, eq=False)
class TreeArrays:
    """Árvore em vetores paralelos; feature == -1 marca folha"""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if self.n_nodes else 0

    def apply(self, X) -> np.ndarray:
        """Folha alcançada por cada linha (x <= limiar vai para a esquerda)"""
        X = sp.csr_matrix(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            current = node[active]
            values = np.asarray(X[active, self.feature[current]]).ravel()
            node[active] = np.where(values <= self.threshold[current],
                                    self.left[current], self.right[current])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_payload(self) -> Dict[str, list]:
        return {name: getattr(self, name).tolist()
                for name in ('feature', 'threshold', 'left', 'right', 'value', 'weight')}

    @classmethod
    def from_payload(cls, payload: Dict[str, list]) -> 'TreeArrays':
        ints = {name: np.asarray(payload[name], dtype=np.int64)
                for name in ('feature', 'left', 'right')}
        floats = {name: np.asarray(payload[name], dtype=np.float64)
                  for name in ('threshold', 'value', 'weight')}
        return cls(**ints, **floats)


class TreeBuilder:
    """Acumula nós em ordem de criação"""

    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.weight: List[float] = []

    def add_leaf(self, value: float, weight: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(value))
        self.weight.append(float(weight))
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float, left: int, right: int):
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)
        self.left[node] = left
        self.right[node] = right

    def build(self) -> TreeArrays:
        return TreeArrays(np.asarray(self.feature, dtype=np.int64),
                          np.asarray(self.threshold, dtype=np.float64),
                          np.asarray(self.left, dtype=np.int64),
                          np.asarray(self.right, dtype=np.int64),
                          np.asarray(self.value, dtype=np.float64),
                          np.asarray(self.weight, dtype=np.float64))


def gini_impurity(positive, total):
    """Gini binário 2p(1-p); zero para nós sem peso"""
    positive = np.asarray(positive, dtype=np.float64)
    total = np.asarray(total, dtype=np.float64)
    with np.errstate(invalid='ignore', divide='ignore'):
        p = np.where(total > 0, positive / total, 0.0)
    return 2.0 * p * (1.0 - p)


def feature_groups(columns: sp.csc_matrix, feature: int, stats: np.ndarray,
                   totals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Valores distintos do atributo e soma das estatísticas por valor, zero incluso"""
    start, end = columns.indptr[feature], columns.indptr[feature + 1]
    rows = columns.indices[start:end]
    values = columns.data[start:end]
    row_stats = stats[rows]
    if len(rows) < columns.shape[0]:
        zero_stats = np.maximum(totals - row_stats.sum(axis=0), 0.0)
        values = np.concatenate([[0.0], values])
        row_stats = np.vstack([zero_stats, row_stats])
    distinct, inverse = np.unique(values, return_inverse=True)
    grouped = np.zeros((len(distinct), stats.shape[1]))
    np.add.at(grouped, inverse, row_stats)
    return distinct, grouped


def _split_gains(left: np.ndarray, totals: np.ndarray, min_samples_leaf: float) -> np.ndarray:
    """Redução ponderada de Gini; colunas de stats: peso, peso positivo, contagem"""
    right = totals - left
    weight = totals[0]
    gains = gini_impurity(totals[1], weight) \
        - left[:, 0] / weight * gini_impurity(left[:, 1], left[:, 0]) \
        - right[:, 0] / weight * gini_impurity(right[:, 1], right[:, 0])
    valid = (left[:, 2] >= min_samples_leaf) & (right[:, 2] >= min_samples_leaf) \
        & (left[:, 0] > 0) & (right[:, 0] > 0)
    return np.where(valid, gains, -np.inf)


def _node_stats(y: np.ndarray, sample_weights: np.ndarray, sample_counts: np.ndarray) -> np.ndarray:
    return np.column_stack([sample_weights, sample_weights * y, sample_counts]).astype(np.float64)


def best_gini_split(columns, y: np.ndarray, sample_weights: np.ndarray,
                    candidate_features: Sequence[int], min_samples_leaf: float = 1,
                    sample_counts: Optional[np.ndarray] = None,
                    allow_zero_gain: bool = False) -> Optional[SplitDecision]:
    """Melhor (atributo, limiar) por redução de Gini; empates: menor atributo, menor limiar"""
    columns = sp.csc_matrix(columns)
    counts = sample_weights if sample_counts is None else sample_counts
    stats = _node_stats(np.asarray(y), np.asarray(sample_weights, dtype=np.float64),
                        np.asarray(counts, dtype=np.float64))
    totals = stats.sum(axis=0)
    floor = -GAIN_TOLERANCE if allow_zero_gain else GAIN_TOLERANCE
    best: Optional[SplitDecision] = None
    for feature in sorted(int(f) for f in candidate_features):
        distinct, grouped = feature_groups(columns, feature, stats, totals)
        if len(distinct) < 2:
            continue
        gains = _split_gains(np.cumsum(grouped, axis=0)[:-1], totals, min_samples_leaf)
        top = gains.max()
        if not np.isfinite(top) or top <= floor:
            continue
        # primeiro limiar dentro da tolerância do melhor ganho
        position = int(np.flatnonzero(gains >= top - GAIN_TOLERANCE)[0])
        if best is None or top > best.gain + GAIN_TOLERANCE:
            threshold = (distinct[position] + distinct[position + 1]) / 2.0
            best = SplitDecision(feature, float(threshold), float(max(top, 0.0)))
    return best


def random_threshold_split(columns, y: np.ndarray, sample_weights: np.ndarray,
                           candidate_features: Sequence[int], rng: np.random.Generator,
                           min_samples_leaf: float = 1,
                           sample_counts: Optional[np.ndarray] = None,
                           allow_zero_gain: bool = False) -> Optional[SplitDecision]:
    """Um limiar uniforme entre mínimo e máximo do atributo no nó, por candidato"""
    columns = sp.csc_matrix(columns)
    counts = sample_weights if sample_counts is None else sample_counts
    stats = _node_stats(np.asarray(y), np.asarray(sample_weights, dtype=np.float64),
                        np.asarray(counts, dtype=np.float64))
    totals = stats.sum(axis=0)
    floor = -GAIN_TOLERANCE if allow_zero_gain else GAIN_TOLERANCE
    best: Optional[SplitDecision] = None
    for feature in sorted(int(f) for f in candidate_features):
        distinct, grouped = feature_groups(columns, feature, stats, totals)
        if len(distinct) < 2:
            continue
        threshold = float(rng.uniform(distinct[0], distinct[-1]))
        left = grouped[distinct <= threshold].sum(axis=0)
        gain = _split_gains(left[None, :], totals, min_samples_leaf)[0]
        if gain > floor and (best is None or gain > best.gain + GAIN_TOLERANCE):
            best = SplitDecision(feature, threshold, float(max(gain, 0.0)))
    return best


def resolve_max_features(max_features, n_features: int) -> Optional[int]:
    """Quantidade de candidatos por nó (None = todos)"""
    if max_features is None:
        return None
    if max_features == 'sqrt':
        return max(1, int(math.sqrt(n_features)))
    if max_features == 'log2':
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if isinstance(max_features, float) and 0.0 < max_features <= 1.0:
        return max(1, int(max_features * n_features))
    if isinstance(max_features, int) and max_features >= 1:
        return max_features
    raise ParameterError(f"max_features inválido: {max_features!r}")


def grow_tree(X, y: np.ndarray, sample_weights: Optional[np.ndarray] = None,
              sample_counts: Optional[np.ndarray] = None, max_depth: Optional[int] = None,
              min_samples_split: float = 2, min_samples_leaf: float = 1,
              max_features: Optional[int] = None, rng: Optional[np.random.Generator] = None,
              random_thresholds: bool = False) -> TreeArrays:
    """Cresce uma árvore de classificação em profundidade; folha = fração positiva ponderada"""
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    weights = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    counts = weights if sample_counts is None else np.asarray(sample_counts, dtype=np.float64)
    rng = rng if rng is not None else np.random.default_rng(0)

    builder = TreeBuilder()
    rows = np.flatnonzero(weights > 0)

    def leaf_for(members):
        total = weights[members].sum()
        value = (weights[members] @ y[members]) / total if total > 0 else 0.0
        return builder.add_leaf(value, total)

    stack = [(leaf_for(rows), rows, 0)]
    while stack:
        node, members, depth = stack.pop()
        member_weights = weights[members]
        positive = member_weights @ y[members]
        impure = 0.0 < positive < member_weights.sum()
        if not impure or counts[members].sum() < min_samples_split \
                or (max_depth is not None and depth >= max_depth):
            continue

        columns = X[members].tocsc()
        present = np.flatnonzero(np.diff(columns.indptr))
        if max_features is not None and max_features < len(present):
            present = np.sort(rng.choice(present, size=max_features, replace=False))
        split_args = (columns, y[members], member_weights, present)
        if random_thresholds:
            split_args += (rng,)
        finder = random_threshold_split if random_thresholds else best_gini_split
        options = {'min_samples_leaf': min_samples_leaf, 'sample_counts': counts[members]}
        decision = finder(*split_args, **options)
        if decision is None:
            # Nó impuro sem ganho positivo ainda aceita um corte válido
            decision = finder(*split_args, allow_zero_gain=True, **options)
        if decision is None:
            continue

        values = np.asarray(columns[:, decision.feature].todense()).ravel()
        go_left = values <= decision.threshold
        left_members, right_members = members[go_left], members[~go_left]
        left, right = leaf_for(left_members), leaf_for(right_members)
        builder.make_split(node, decision.feature, decision.threshold, left, right)
        stack.append((right, right_members, depth + 1))
        stack.append((left, left_members, depth + 1))
    return builder.build()


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Conjunto de árvores; probabilidade = média das folhas"""
    kind: str
    trees: Tuple[TreeArrays, ...]
    seeds: Tuple[int, ...]
    max_features: Optional[int]
    bootstrap: bool
    tag: str = 'forest'

    def tree_predictions(self, X) -> np.ndarray:
        return np.vstack([tree.predict(X) for tree in self.trees])

    def predict_proba(self, X) -> np.ndarray:
        return np.mean(self.tree_predictions(X), axis=0)

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'kind': self.kind,
                'trees': [tree.to_payload() for tree in self.trees],
                'seeds': [int(s) for s in self.seeds], 'max_features': self.max_features,
                'bootstrap': bool(self.bootstrap)}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'ForestModel':
        return cls(payload['kind'], tuple(TreeArrays.from_payload(t) for t in payload['trees']),
                   tuple(int(s) for s in payload['seeds']), payload['max_features'],
                   bool(payload['bootstrap']))


def _build_member(X, y, params: Dict[str, Any], max_features: Optional[int], bootstrap: bool,
                  random_thresholds: bool, seed: int) -> TreeArrays:
    rng = np.random.default_rng(seed)
    n_samples = len(y)
    weights = np.bincount(rng.integers(0, n_samples, n_samples), minlength=n_samples) \
        .astype(np.float64) if bootstrap else np.ones(n_samples)
    return grow_tree(X, y, weights, None, params['max_depth'], params['min_samples_split'],
                     params['min_samples_leaf'], max_features, rng, random_thresholds)


def fit_tree_ensemble(kind: str, X, y: np.ndarray, params: Dict[str, Any], seed: int,
                      n_jobs: int = 1) -> ForestModel:
    """CART (uma árvore), random forest (bootstrap) ou extra trees (limiares aleatórios)"""
    if kind not in TREE_KINDS:
        raise ParameterError(f"Tipo de árvore desconhecido: {kind!r}")
    n_estimators = 1 if kind == 'decision_tree' else int(params.get('n_estimators', 100))
    if n_estimators < 1:
        raise ParameterError(f"n_estimators deve ser >= 1, recebido {n_estimators}")
    if params.get('max_depth') is not None and params['max_depth'] < 1:
        raise ParameterError(f"max_depth deve ser >= 1, recebido {params['max_depth']}")
    if params['min_samples_split'] < 2 or params['min_samples_leaf'] < 1:
        raise ParameterError("Requer min_samples_split >= 2 e min_samples_leaf >= 1")

    X = sp.csr_matrix(X, dtype=np.float64)
    max_features = resolve_max_features(params.get('max_features'), X.shape[1])
    bootstrap = bool(params.get('bootstrap', False)) and kind != 'decision_tree'
    seeds = tuple(derive_seed(seed, i) for i in range(n_estimators))
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_build_member)(X, y, params, max_features, bootstrap, kind == 'extra_trees', s)
        for s in seeds)
    logger.info("%s: %d árvore(s), %d folhas na primeira", kind, len(trees), trees[0].n_leaves)
    return ForestModel(kind, tuple(trees), seeds, max_features, bootstrap)


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    return fit_tree_ensemble(kind, X.values, y, params, seed, n_jobs=int(params.get('n_jobs', 1)))


ESTIMATORS = (ForestModel,)
