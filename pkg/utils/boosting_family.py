"""
AdaBoost com tocos de Gini, gradient boosting com perda logística
(gbm e variante de segunda ordem regularizada) e boosting por folhas
sobre histogramas.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from utils.errors import ParameterError
from utils.featurizer import FeatureMatrix
from utils.tree_family import GAIN_TOLERANCE, TreeArrays, TreeBuilder, grow_tree

logger = logging.getLogger(__name__)

BOOSTING_KINDS = ('adaboost', 'gbm', 'xgb_style', 'lgbm_style')
MAX_BINS_LIMIT = 255
HESSIAN_FLOOR = 1e-16
ERROR_CLAMP = 1e-10
_MAX_HALVINGS = 60


# --- histogramas ----------------------------------------------------------

def feature_cuts(values: np.ndarray, has_zero: bool, max_bins: Optional[int]) -> np.ndarray:
    """Limites de bin de um atributo: quantis dos valores não nulos + bin exclusivo do zero"""
    distinct = np.unique(values[values != 0])
    m = len(distinct)
    if max_bins is None or m <= max_bins:
        cuts = (distinct[:-1] + distinct[1:]) / 2.0
    else:
        positions = np.unique((np.arange(1, max_bins) * m) // max_bins)
        positions = positions[positions > 0]
        cuts = (distinct[positions - 1] + distinct[positions]) / 2.0
    if has_zero and m:
        negative, positive = distinct[distinct < 0], distinct[distinct > 0]
        low = negative.max() if negative.size else 0.0
        high = positive.min() if positive.size else 0.0
        # Zero fica sozinho entre o maior negativo e o menor positivo
        cuts = cuts[(cuts <= low) | (cuts >= high)]
        extra = ([low / 2.0] if negative.size else []) + ([high / 2.0] if positive.size else [])
        cuts = np.concatenate([cuts, extra])
    return np.unique(cuts)


@dataclass(frozen=True, eq=False)
class BinnedDataset:
    """Limites por atributo e bin de cada entrada não nula (zero tem bin próprio)"""
    cuts: Tuple[np.ndarray, ...]
    columns: sp.csc_matrix
    entry_bins: np.ndarray
    zero_bins: np.ndarray
    max_bins: Optional[int]
    entry_features: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_bins = np.array([len(c) + 1 for c in self.cuts], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(n_bins)[:-1]]).astype(np.int64)
        object.__setattr__(self, 'offsets', offsets)
        object.__setattr__(self, 'entry_features', np.repeat(
            np.arange(len(self.cuts), dtype=np.int64), np.diff(self.columns.indptr)))

    @property
    def n_samples(self) -> int:
        return self.columns.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.cuts)

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([len(c) + 1 for c in self.cuts], dtype=np.int64)

    @property
    def total_bins(self) -> int:
        return int(self.n_bins.sum())

    def bin_index(self, feature: int, values) -> np.ndarray:
        """bin b contém cuts[b-1] < v <= cuts[b]"""
        return np.searchsorted(self.cuts[feature], np.asarray(values, dtype=np.float64), side='left')

    def member_bins(self, feature: int, members: np.ndarray) -> np.ndarray:
        start, end = self.columns.indptr[feature], self.columns.indptr[feature + 1]
        bins = np.full(self.n_samples, self.zero_bins[feature], dtype=np.int64)
        bins[self.columns.indices[start:end]] = self.entry_bins[start:end]
        return bins[members]

    def histograms(self, members: np.ndarray, *stats: np.ndarray) -> List[np.ndarray]:
        """Soma de cada estatística por bin, para as amostras do nó"""
        in_node = np.zeros(self.n_samples)
        in_node[members] = 1.0
        rows = self.columns.indices
        keys = self.offsets[self.entry_features] + self.entry_bins
        zero_keys = self.offsets + self.zero_bins
        node_entries = in_node[rows]
        zero_count = len(members) - np.bincount(self.entry_features, weights=node_entries,
                                                minlength=self.n_features)
        result = []
        for stat in stats:
            values = stat[rows] * node_entries
            hist = np.bincount(keys, weights=values, minlength=self.total_bins)
            nonzero = np.bincount(self.entry_features, weights=values, minlength=self.n_features)
            zero_mass = stat[members].sum() - nonzero
            np.add.at(hist, zero_keys, np.where(zero_count > 0, zero_mass, 0.0))
            result.append(hist)
        return result


def build_histograms(X, max_bins: Optional[int] = MAX_BINS_LIMIT) -> BinnedDataset:
    """Discretiza cada atributo; max_bins=None mantém um bin por valor distinto"""
    if max_bins is not None and not 2 <= max_bins <= MAX_BINS_LIMIT:
        raise ParameterError(f"max_bins deve estar em [2, {MAX_BINS_LIMIT}], recebido {max_bins}")
    columns = sp.csc_matrix(X, dtype=np.float64)
    columns.sort_indices()
    n_samples = columns.shape[0]
    cuts, entry_bins, zero_bins = [], [], []
    for feature in range(columns.shape[1]):
        start, end = columns.indptr[feature], columns.indptr[feature + 1]
        values = columns.data[start:end]
        has_zero = (end - start) < n_samples or np.any(values == 0)
        feature_cut = feature_cuts(values, has_zero, max_bins)
        cuts.append(feature_cut)
        entry_bins.append(np.searchsorted(feature_cut, values, side='left'))
        zero_bins.append(int(np.searchsorted(feature_cut, 0.0, side='left')))
    entry_bins = np.concatenate(entry_bins).astype(np.int64) if entry_bins else np.zeros(0, np.int64)
    return BinnedDataset(tuple(cuts), columns, entry_bins,
                         np.asarray(zero_bins, dtype=np.int64), max_bins)


class HistogramSplit(NamedTuple):
    feature: int
    threshold: float
    bin: int
    gain: float


def split_score(grad_sum, second_sum, reg_lambda: float):
    """G² / (H + λ); zero quando o denominador é nulo"""
    grad_sum = np.asarray(grad_sum, dtype=np.float64)
    denominator = np.asarray(second_sum, dtype=np.float64) + reg_lambda
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(denominator > 0, grad_sum ** 2 / np.where(denominator > 0, denominator, 1.0), 0.0)


def best_histogram_split(binned: BinnedDataset, members: np.ndarray, grad: np.ndarray,
                         second: np.ndarray, reg_lambda: float,
                         min_child: int = 1) -> Optional[HistogramSplit]:
    """Maior ganho G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ); empates: menor atributo, menor limiar"""
    if binned.n_features == 0 or len(members) < 2 * min_child:
        return None
    hist_g, hist_h, hist_c = binned.histograms(members, grad, second, np.ones(binned.n_samples))
    n_bins = binned.n_bins
    segment_end = binned.offsets + n_bins

    def left_sums(hist):
        cumulative = np.cumsum(hist)
        base = np.concatenate([[0.0], cumulative])[binned.offsets]
        return cumulative - np.repeat(base, n_bins)

    def segment_totals(hist):
        return np.repeat(np.add.reduceat(hist, binned.offsets) if len(hist) else hist, n_bins)

    gl, hl, cl = left_sums(hist_g), left_sums(hist_h), left_sums(hist_c)
    g_tot, h_tot, c_tot = segment_totals(hist_g), segment_totals(hist_h), segment_totals(hist_c)
    gains = split_score(gl, hl, reg_lambda) + split_score(g_tot - gl, h_tot - hl, reg_lambda) \
        - split_score(g_tot, h_tot, reg_lambda)

    last_bin = np.zeros(binned.total_bins, dtype=bool)
    last_bin[segment_end - 1] = True
    valid = ~last_bin & (cl >= min_child) & (c_tot - cl >= min_child)
    gains = np.where(valid, gains, -np.inf)
    top = gains.max() if gains.size else -np.inf
    if not np.isfinite(top) or top <= GAIN_TOLERANCE:
        return None
    position = int(np.flatnonzero(gains >= top - GAIN_TOLERANCE)[0])
    feature = int(np.searchsorted(binned.offsets, position, side='right') - 1)
    bin_index = position - int(binned.offsets[feature])
    return HistogramSplit(feature, float(binned.cuts[feature][bin_index]), bin_index, float(top))


# --- crescimento das árvores de regressão ---------------------------------

def _split_members(binned: BinnedDataset, members: np.ndarray, split: HistogramSplit):
    go_left = binned.member_bins(split.feature, members) <= split.bin
    return members[go_left], members[~go_left]


def grow_depthwise(binned: BinnedDataset, grad: np.ndarray, second: np.ndarray, reg_lambda: float,
                   max_depth: int, min_child: int = 1) -> Tuple[TreeBuilder, List[Tuple[int, np.ndarray]]]:
    """Árvore nível a nível até max_depth; devolve as folhas e seus membros"""
    builder = TreeBuilder()
    leaves = []
    stack = [(builder.add_leaf(0.0, binned.n_samples), np.arange(binned.n_samples), 0)]
    while stack:
        node, members, depth = stack.pop()
        split = best_histogram_split(binned, members, grad, second, reg_lambda, min_child) \
            if depth < max_depth else None
        if split is None:
            leaves.append((node, members))
            continue
        left_members, right_members = _split_members(binned, members, split)
        left = builder.add_leaf(0.0, len(left_members))
        right = builder.add_leaf(0.0, len(right_members))
        builder.make_split(node, split.feature, split.threshold, left, right)
        stack.append((right, right_members, depth + 1))
        stack.append((left, left_members, depth + 1))
    return builder, leaves


def grow_leafwise(binned: BinnedDataset, grad: np.ndarray, second: np.ndarray, reg_lambda: float,
                  max_leaves: int, min_child: int = 20,
                  trace: Optional[List[Dict[str, Any]]] = None):
    """Divide sempre a folha de maior ganho global até max_leaves"""
    builder = TreeBuilder()
    root = builder.add_leaf(0.0, binned.n_samples)
    members_of = {root: np.arange(binned.n_samples)}
    candidates = {root: best_histogram_split(binned, members_of[root], grad, second,
                                             reg_lambda, min_child)}
    n_leaves = 1
    while n_leaves < max_leaves:
        open_leaves = [(split.gain, -leaf, leaf) for leaf, split in candidates.items()
                       if split is not None]
        if not open_leaves:
            break
        gain, _, leaf = max(open_leaves)
        open_gains = {candidate: value for value, _, candidate in open_leaves}
        split = candidates.pop(leaf)
        left_members, right_members = _split_members(binned, members_of.pop(leaf), split)
        left = builder.add_leaf(0.0, len(left_members))
        right = builder.add_leaf(0.0, len(right_members))
        builder.make_split(leaf, split.feature, split.threshold, left, right)
        for child, child_members in ((left, left_members), (right, right_members)):
            members_of[child] = child_members
            candidates[child] = best_histogram_split(binned, child_members, grad, second,
                                                     reg_lambda, min_child)
        if trace is not None:
            trace.append({'leaves_before': n_leaves, 'leaf': leaf, 'gain': gain,
                          'feature': split.feature, 'threshold': split.threshold,
                          'open_gains': open_gains})
        n_leaves += 1
    return builder, list(members_of.items())


# --- modelo ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoostedModel:
    """Escore = base + Σ peso_t · árvore_t(x); probabilidade = sigmoide(escala · escore)"""
    kind: str
    base_score: float
    stages: Tuple[TreeArrays, ...]
    stage_weights: Tuple[float, ...]
    learning_rate: float
    rounds: int
    output_scale: float = 1.0
    trace: Tuple[Dict[str, Any], ...] = field(default=(), compare=False)
    tag: str = 'boosted'

    def decision_function(self, X) -> np.ndarray:
        score = np.full(X.shape[0], self.base_score)
        for weight, tree in zip(self.stage_weights, self.stages):
            score += weight * tree.predict(X)
        return score

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.output_scale * self.decision_function(X))

    def to_payload(self) -> Dict[str, Any]:
        return {'estimator': self.tag, 'kind': self.kind, 'base_score': float(self.base_score),
                'stages': [tree.to_payload() for tree in self.stages],
                'stage_weights': [float(w) for w in self.stage_weights],
                'learning_rate': float(self.learning_rate), 'rounds': int(self.rounds),
                'output_scale': float(self.output_scale)}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], space=None) -> 'BoostedModel':
        return cls(payload['kind'], float(payload['base_score']),
                   tuple(TreeArrays.from_payload(t) for t in payload['stages']),
                   tuple(float(w) for w in payload['stage_weights']),
                   float(payload['learning_rate']), int(payload['rounds']),
                   float(payload['output_scale']))


def logistic_loss(score: np.ndarray, y: np.ndarray) -> float:
    """Soma da perda logística (log-verossimilhança negativa)"""
    return float(np.sum(np.logaddexp(0.0, score) - y * score))


def base_log_odds(y: np.ndarray) -> float:
    rate = np.clip(np.mean(y), 1e-12, 1.0 - 1e-12)
    return float(np.log(rate / (1.0 - rate)))


def guarded_leaf_value(value: float, score: np.ndarray, y: np.ndarray) -> float:
    """Divide o passo da folha por 2 até a perda das suas amostras não aumentar"""
    before = logistic_loss(score, y)
    for _ in range(_MAX_HALVINGS):
        if logistic_loss(score + value, y) <= before:
            return value
        value /= 2.0
    return 0.0


def leaf_weight(grad_sum: float, second_sum: float, reg_lambda: float) -> float:
    """Passo de Newton regularizado da folha: −G / (H + λ)"""
    return -float(grad_sum) / (float(second_sum) + reg_lambda)


def _gradient_stats(score: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p = expit(score)
    return p - y, np.maximum(p * (1.0 - p), HESSIAN_FLOOR)


def _finish_stage(builder: TreeBuilder, leaves, grad, hess, reg_lambda: float,
                  learning_rate: float, score: np.ndarray, y: np.ndarray) -> TreeArrays:
    for node, members in leaves:
        raw = leaf_weight(grad[members].sum(), hess[members].sum(), reg_lambda)
        value = guarded_leaf_value(learning_rate * raw, score[members], y[members])
        builder.value[node] = value
        score[members] += value
    return builder.build()


def fit_gradient_boosting(kind: str, X, y: np.ndarray, rounds: int = 100,
                          learning_rate: float = 0.1, max_depth: int = 3,
                          reg_lambda: float = 1.0, min_child: int = 1,
                          max_bins: Optional[int] = None) -> BoostedModel:
    """gbm: árvores de regressão nos gradientes, folha = passo de Newton; xgb_style: ganho de 2ª ordem"""
    if kind not in ('gbm', 'xgb_style'):
        raise ParameterError(f"Tipo de gradient boosting desconhecido: {kind!r}")
    if rounds < 0 or learning_rate < 0 or max_depth < 1 or reg_lambda < 0 or min_child < 1:
        raise ParameterError("Requer rounds >= 0, learning_rate >= 0, max_depth >= 1, "
                             "reg_lambda >= 0 e min_child >= 1")
    y = np.asarray(y, dtype=np.float64)
    binned = build_histograms(X, max_bins)
    base = base_log_odds(y)
    score = np.full(len(y), base)
    stages = []
    for round_index in range(rounds):
        grad, hess = _gradient_stats(score, y)
        if kind == 'gbm':
            # Regressão nos gradientes: h = 1, sem regularização
            builder, leaves = grow_depthwise(binned, grad, np.ones(len(y)), 0.0, max_depth, min_child)
            stages.append(_finish_stage(builder, leaves, grad, hess, 0.0, learning_rate, score, y))
        else:
            builder, leaves = grow_depthwise(binned, grad, hess, reg_lambda, max_depth, min_child)
            stages.append(_finish_stage(builder, leaves, grad, hess, reg_lambda, learning_rate,
                                        score, y))
        logger.debug("%s rodada %d: perda %.6f", kind, round_index + 1, logistic_loss(score, y))
    return BoostedModel(kind, base, tuple(stages), tuple(1.0 for _ in stages),
                        float(learning_rate), int(rounds))


def fit_leafwise_boosting(X, y: np.ndarray, rounds: int = 100, learning_rate: float = 0.1,
                          max_leaves: int = 31, min_child: int = 20, reg_lambda: float = 1.0,
                          max_bins: Optional[int] = MAX_BINS_LIMIT,
                          record_trace: bool = False) -> BoostedModel:
    """Boosting com crescimento por folhas sobre histogramas"""
    if max_leaves < 2:
        raise ParameterError(f"max_leaves deve ser >= 2, recebido {max_leaves}")
    if rounds < 0 or learning_rate < 0 or reg_lambda < 0 or min_child < 1:
        raise ParameterError("Requer rounds >= 0, learning_rate >= 0, reg_lambda >= 0 e min_child >= 1")
    y = np.asarray(y, dtype=np.float64)
    binned = build_histograms(X, max_bins)
    base = base_log_odds(y)
    score = np.full(len(y), base)
    stages, trace = [], []
    for round_index in range(rounds):
        grad, hess = _gradient_stats(score, y)
        stage_trace = [] if record_trace else None
        builder, leaves = grow_leafwise(binned, grad, hess, reg_lambda, max_leaves, min_child,
                                        stage_trace)
        stages.append(_finish_stage(builder, leaves, grad, hess, reg_lambda, learning_rate,
                                    score, y))
        if record_trace:
            trace.append(tuple(stage_trace))
        logger.debug("lgbm_style rodada %d: %d folhas", round_index + 1, len(leaves))
    return BoostedModel('lgbm_style', base, tuple(stages), tuple(1.0 for _ in stages),
                        float(learning_rate), int(rounds), trace=tuple(trace))


def stage_weight(error: float) -> float:
    """½ ln((1 − err) / err) com err limitado a [1e-10, 1 − 1e-10]"""
    error = min(max(error, ERROR_CLAMP), 1.0 - ERROR_CLAMP)
    return 0.5 * float(np.log((1.0 - error) / error))


def fit_adaboost(X, y: np.ndarray, rounds: int = 50, seed: int = 0) -> BoostedModel:
    """AdaBoost discreto com tocos de Gini ponderado"""
    if rounds < 1:
        raise ParameterError(f"rounds deve ser >= 1, recebido {rounds}")
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    signed = np.where(y == 1, 1.0, -1.0)
    weights = np.full(len(y), 1.0 / len(y))
    stages, alphas = [], []
    for round_index in range(rounds):
        stump = grow_tree(X, y, weights, np.ones(len(y)), max_depth=1)
        # folha vota +1 quando a fração positiva ponderada passa de 0.5
        votes = np.where(stump.value > 0.5, 1.0, -1.0)
        stump = TreeArrays(stump.feature, stump.threshold, stump.left, stump.right, votes,
                           stump.weight)
        predicted = stump.predict(X)
        error = float(weights[predicted != signed].sum())
        if error >= 0.5:
            logger.debug("AdaBoost: erro %.4f >= 0.5 na rodada %d; parando", error, round_index + 1)
            break
        alpha = stage_weight(error)
        stages.append(stump)
        alphas.append(alpha)
        if error == 0.0:
            break
        weights = weights * np.exp(-alpha * signed * predicted)
        weights /= weights.sum()
    return BoostedModel('adaboost', 0.0, tuple(stages), tuple(alphas), 1.0, int(rounds),
                        output_scale=2.0)


def fit_from_spec(kind: str, X: FeatureMatrix, y: np.ndarray, params: Dict[str, Any], seed: int):
    values = X.values
    if kind == 'adaboost':
        return fit_adaboost(values, y, int(params['rounds']), seed)
    if kind == 'lgbm_style':
        return fit_leafwise_boosting(values, y, int(params['rounds']), float(params['learning_rate']),
                                     int(params['max_leaves']), int(params['min_child']),
                                     float(params['reg_lambda']), params['max_bins'])
    reg_lambda = float(params.get('reg_lambda', 0.0))
    return fit_gradient_boosting(kind, values, y, int(params['rounds']),
                                 float(params['learning_rate']), int(params['max_depth']),
                                 reg_lambda, int(params['min_child']), params.get('max_bins'))


ESTIMATORS = (BoostedModel,)
