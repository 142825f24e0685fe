"""
Matriz de confusão, métricas, conferência das tabelas publicadas,
busca em grade e benchmark dos dezenove modelos.
"""
import itertools
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.corpus_io import LabeledCorpus, stratified_kfold, stratified_split_indices
from utils.errors import AssetError, DataError, ParameterError, ShapeError
from utils.featurizer import FeatureMatrix, FeatureSpace
from utils.model_api import (KINDS, ClassifierSpec, TrainedModel, fit_model, member_seed,
                             predict_labels)
from utils.turkish_normalizer import TurkishNormalizer

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ('f1', 'accuracy', 'precision', 'recall')
PAPER_TOLERANCE = 0.001

# Grades pequenas (até 6 pontos) para a otimização por modelo
DEFAULT_GRIDS: Dict[str, Dict[str, list]] = {
    'gaussian_nb': {'var_smoothing': [1e-9, 1e-6, 1e-3]},
    'multinomial_nb': {'alpha': [0.1, 0.5, 1.0]},
    'bernoulli_nb': {'alpha': [0.1, 0.5, 1.0]},
    'decision_tree': {'max_depth': [None, 10, 20]},
    'random_forest': {'n_estimators': [50, 100], 'max_depth': [None, 20]},
    'extra_trees': {'n_estimators': [50, 100], 'max_depth': [None, 20]},
    'lda': {'shrinkage': [0.1, 0.3, 0.5]},
    'qda': {'ridge': [1e-3, 1e-2, 1e-1]},
    'adaboost': {'rounds': [50, 100]},
    'gbm': {'learning_rate': [0.1, 0.3], 'max_depth': [2, 3]},
    'xgb_style': {'learning_rate': [0.1, 0.3], 'max_depth': [3, 6]},
    'lgbm_style': {'learning_rate': [0.05, 0.1], 'max_leaves': [15, 31]},
    'logistic_regression': {'l2': [1e-5, 1e-4, 1e-3]},
    'perceptron': {'epochs': [10, 20]},
    'linear_svc': {'l2': [1e-5, 1e-4, 1e-3]},
    'sgd': {'loss': ['hinge', 'logistic'], 'l2': [1e-4, 1e-3]},
    'svm': {'C': [0.1, 1.0, 10.0], 'kernel': ['rbf', 'linear']},
    'knn': {'k': [3, 5, 9]},
    'voting': {},
}


# --- métricas -------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Contagens com rótulo positivo = 1"""
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def to_dict(self) -> Dict[str, int]:
        return {'tp': self.tp, 'fn': self.fn, 'fp': self.fp, 'tn': self.tn}


@dataclass(frozen=True)
class EvalReport:
    """Métricas do rótulo positivo e médias macro"""
    accuracy: float
    precision_pos: float
    recall_pos: float
    f1_pos: float
    macro_precision: float
    macro_recall: float

    def to_dict(self) -> Dict[str, float]:
        return {'accuracy': self.accuracy, 'precision_pos': self.precision_pos,
                'recall_pos': self.recall_pos, 'f1_pos': self.f1_pos,
                'macro_precision': self.macro_precision, 'macro_recall': self.macro_recall}

    def table_metrics(self) -> Dict[str, float]:
        """Colunas no formato da tabela de resultados (precisão e recall macro)"""
        return {'f1': self.f1_pos, 'accuracy': self.accuracy,
                'precision': self.macro_precision, 'recall': self.macro_recall}


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    """Conta TP, FN, FP e TN"""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise ShapeError(f"Tamanhos diferentes: {len(y_true)} rótulos e {len(y_pred)} predições")
    if len(y_true) == 0:
        raise ShapeError("Matriz de confusão exige ao menos uma predição")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
    )


def _ratio(numerator: float, denominator: float) -> float:
    # 0/0 vale 0
    return numerator / denominator if denominator else 0.0


def summarize_metrics(cm: ConfusionMatrix) -> EvalReport:
    """Acurácia, precisão/recall/F1 do rótulo 1 e médias macro dos dois rótulos"""
    if cm.total < 1:
        raise DataError("Matriz de confusão vazia")
    precision_pos = _ratio(cm.tp, cm.tp + cm.fp)
    recall_pos = _ratio(cm.tp, cm.tp + cm.fn)
    precision_neg = _ratio(cm.tn, cm.tn + cm.fn)
    recall_neg = _ratio(cm.tn, cm.tn + cm.fp)
    return EvalReport(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision_pos=precision_pos,
        recall_pos=recall_pos,
        f1_pos=_ratio(2 * precision_pos * recall_pos, precision_pos + recall_pos),
        macro_precision=(precision_pos + precision_neg) / 2,
        macro_recall=(recall_pos + recall_neg) / 2,
    )


# --- tabelas publicadas ---------------------------------------------------

@dataclass(frozen=True)
class PaperRow:
    """Linha transcrita: contagens como impressas + métricas esperadas (×100)"""
    model: str
    kind: str
    tp: int
    fn_printed: int
    fp_printed: int
    tn: int
    expected: Dict[str, float]
    errata: Dict[str, float] = field(default_factory=dict)

    def confusion(self, reading: str = 'corrected') -> ConfusionMatrix:
        """corrected: colunas FN/FP impressas trocadas; literal: como impresso"""
        if reading == 'corrected':
            return ConfusionMatrix(self.tp, self.fp_printed, self.fn_printed, self.tn)
        if reading == 'literal':
            return ConfusionMatrix(self.tp, self.fn_printed, self.fp_printed, self.tn)
        raise ParameterError(f"Leitura desconhecida: {reading!r}")


@dataclass(frozen=True)
class PaperCheckRow:
    model: str
    computed: Dict[str, float]
    expected: Dict[str, float]
    deltas: Dict[str, float]
    errata_applied: Tuple[str, ...]
    passed: bool


@dataclass(frozen=True)
class PaperCheckResult:
    rows: Tuple[PaperCheckRow, ...]
    reading: str

    @property
    def passed(self) -> int:
        return sum(row.passed for row in self.rows)

    @property
    def summary_line(self) -> str:
        return f"{self.passed}/{len(self.rows)} rows reproduced"

    def to_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            record = {'model': row.model, 'passed': row.passed,
                      'errata': ', '.join(row.errata_applied)}
            for metric in METRIC_COLUMNS:
                record[f'{metric}_computed'] = row.computed[metric]
                record[f'{metric}_printed'] = row.expected[metric]
                record[f'{metric}_delta'] = row.deltas[metric]
            records.append(record)
        return pd.DataFrame(records)


def load_paper_rows(path: Union[str, Path, None] = None) -> List[PaperRow]:
    """Lê o arquivo de tabelas transcritas"""
    if path is None:
        import config
        path = config.PATHS['paper_tables']
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding='utf-8'))
        rows = [PaperRow(entry['model'], entry['kind'], int(entry['tp']), int(entry['fn_printed']),
                         int(entry['fp_printed']), int(entry['tn']),
                         {m: float(entry['expected'][m]) for m in METRIC_COLUMNS},
                         {m: float(v) for m, v in entry.get('errata', {}).items()})
                for entry in raw]
    except FileNotFoundError as exc:
        raise AssetError(f"Tabelas de referência não encontradas: {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AssetError(f"Tabelas de referência corrompidas em {path}: {exc}") from exc
    if len(rows) != len(KINDS):
        raise AssetError(f"Esperadas {len(KINDS)} linhas em {path}, encontradas {len(rows)}")
    return rows


def check_paper_row(row: PaperRow, reading: str = 'corrected') -> PaperCheckRow:
    """Recalcula as métricas (×100, 3 casas) e compara com o impresso ou a errata"""
    metrics = summarize_metrics(row.confusion(reading)).table_metrics()
    computed = {m: round(100.0 * metrics[m], 3) for m in METRIC_COLUMNS}
    deltas = {m: round(computed[m] - row.expected[m], 3) for m in METRIC_COLUMNS}
    applied = []
    passed = True
    for metric in METRIC_COLUMNS:
        if abs(deltas[metric]) <= PAPER_TOLERANCE + 1e-9:
            continue
        erratum = row.errata.get(metric)
        if erratum is not None and abs(computed[metric] - erratum) <= PAPER_TOLERANCE + 1e-9:
            applied.append(metric)
            continue
        passed = False
    return PaperCheckRow(row.model, computed, dict(row.expected), deltas, tuple(applied), passed)


def reproduce_paper_tables(path: Union[str, Path, None] = None,
                           reading: str = 'corrected') -> PaperCheckResult:
    """Recalcula as métricas publicadas a partir das matrizes de confusão publicadas"""
    rows = tuple(check_paper_row(row, reading) for row in load_paper_rows(path))
    result = PaperCheckResult(rows, reading)
    logger.info("Conferência das tabelas (%s): %s", reading, result.summary_line)
    return result


# --- busca em grade -------------------------------------------------------

def expand_grid(grid: Union[Mapping[str, Sequence], Sequence[Mapping[str, Any]]]) -> List[Dict[str, Any]]:
    """Reticulado nome -> valores em lista de combinações, na ordem declarada"""
    if isinstance(grid, Mapping):
        names = list(grid)
        return [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]
    return [dict(point) for point in grid]


@dataclass(frozen=True)
class GridSearchResult:
    best: ClassifierSpec
    table: pd.DataFrame


def grid_search(kind: str, grid, X: FeatureMatrix, y, folds: int = 3,
                seed: int = 42) -> GridSearchResult:
    """Validação cruzada estratificada no treino; escolhe maior F1 médio (empate: acurácia, ordem)"""
    points = expand_grid(grid)
    if not points:
        raise ParameterError(f"Grade vazia para {kind}")
    specs = [ClassifierSpec(kind, point) for point in points]
    y = np.asarray(y)
    splits = stratified_kfold(y, folds, seed)

    records = []
    for position, spec in enumerate(specs):
        f1_scores, accuracies = [], []
        for fold, (train_idx, valid_idx) in enumerate(splits):
            model = fit_model(spec, X.rows(train_idx), y[train_idx], member_seed(seed, kind))
            report = summarize_metrics(
                confusion_matrix(y[valid_idx], predict_labels(model, X.rows(valid_idx))))
            f1_scores.append(report.f1_pos)
            accuracies.append(report.accuracy)
        records.append({'position': position,
                        'params': json.dumps(points[position], sort_keys=True),
                        'mean_f1': float(np.mean(f1_scores)),
                        'mean_accuracy': float(np.mean(accuracies)),
                        **{f'f1_fold{i}': v for i, v in enumerate(f1_scores)}})
    table = pd.DataFrame(records)
    best = min(records, key=lambda r: (-r['mean_f1'], -r['mean_accuracy'], r['position']))
    logger.info("Busca em grade %s: %d pontos, melhor %s (F1 %.4f)", kind, len(points),
                best['params'], best['mean_f1'])
    return GridSearchResult(specs[best['position']], table)


# --- benchmark ------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 42
    test_fraction: float = 0.3
    min_df: int = 2
    grid_search: bool = False
    folds: int = 3
    kinds: Tuple[str, ...] = KINDS
    grids: Optional[Dict[str, Any]] = None
    overrides: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    stopwords_path: Optional[str] = None
    lexicon_path: Optional[str] = None


@dataclass(frozen=True)
class ModelResult:
    kind: str
    hyperparameters: Dict[str, Any]
    confusion: ConfusionMatrix
    metrics: EvalReport
    fit_seconds: float

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        record = {'kind': self.kind, 'hyperparameters': dict(self.hyperparameters),
                  'confusion': self.confusion.to_dict(), 'metrics': self.metrics.to_dict()}
        if include_timings:
            record['fit_seconds'] = self.fit_seconds
        return record


@dataclass(frozen=True)
class BenchmarkReport:
    """Resultados por modelo, ordenados por F1 decrescente, e metadados da execução"""
    results: Tuple[ModelResult, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)
    models: Dict[str, TrainedModel] = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        return {'metadata': dict(self.metadata),
                'results': [r.to_dict(include_timings) for r in self.results]}

    def to_frame(self) -> pd.DataFrame:
        records = []
        for result in self.results:
            records.append({'kind': result.kind, **result.confusion.to_dict(),
                            **result.metrics.to_dict(), 'fit_seconds': result.fit_seconds})
        columns = ['kind', 'tp', 'fn', 'fp', 'tn', 'accuracy', 'precision_pos', 'recall_pos',
                   'f1_pos', 'macro_precision', 'macro_recall', 'fit_seconds']
        return pd.DataFrame(records, columns=columns)


def _sort_results(results: Sequence[ModelResult]) -> Tuple[ModelResult, ...]:
    return tuple(sorted(results, key=lambda r: (-r.metrics.f1_pos, KINDS.index(r.kind))))


def run_benchmark(corpus: LabeledCorpus, config: BenchmarkConfig = BenchmarkConfig(),
                  normalizer: Optional[TurkishNormalizer] = None) -> BenchmarkReport:
    """Normaliza, divide, vetoriza no treino, ajusta os modelos e avalia no teste"""
    unknown = [kind for kind in config.kinds if kind not in KINDS]
    if unknown:
        raise ParameterError(f"Modelos desconhecidos: {', '.join(unknown)}")
    if normalizer is None:
        normalizer = TurkishNormalizer.from_files(config.stopwords_path, config.lexicon_path)

    labels = corpus.labels
    train_idx, test_idx = stratified_split_indices(labels, config.test_fraction, config.seed)
    tokens = normalizer.normalize_many(corpus.texts)
    space = FeatureSpace.fit([tokens[i] for i in train_idx], config.min_df)
    X_train = space.transform([tokens[i] for i in train_idx])
    X_test = space.transform([tokens[i] for i in test_idx])
    y_train, y_test = labels[train_idx], labels[test_idx]
    grids = config.grids if config.grids is not None else DEFAULT_GRIDS

    results, models = [], {}
    # votação por último, com os membros já ajustados
    ordered = [k for k in KINDS if k in config.kinds and k != 'voting']
    for kind in ordered + (['voting'] if 'voting' in config.kinds else []):
        started = time.perf_counter()
        if kind == 'voting':
            model = _assemble_voting(models, space, config.seed, len(y_train))
        else:
            spec = ClassifierSpec(kind, config.overrides.get(kind, {}))
            if config.grid_search and grids.get(kind):
                spec = grid_search(kind, grids[kind], X_train, y_train, config.folds,
                                   config.seed).best
            model = fit_model(spec, X_train, y_train, member_seed(config.seed, kind))
        elapsed = time.perf_counter() - started
        models[kind] = model
        cm = confusion_matrix(y_test, predict_labels(model, X_test))
        results.append(ModelResult(kind, dict(model.spec.hyperparameters), cm,
                                   summarize_metrics(cm), elapsed))
        logger.info("%s: F1 %.4f, acurácia %.4f (%.1fs)", kind, results[-1].metrics.f1_pos,
                    results[-1].metrics.accuracy, elapsed)

    metadata = {
        'corpus': corpus.provenance, 'documents': len(corpus), 'train': len(train_idx),
        'test': len(test_idx), 'seed': config.seed, 'test_fraction': config.test_fraction,
        'min_df': config.min_df, 'vocabulary_size': space.n_features,
        'fingerprint': space.fingerprint, 'grid_search': config.grid_search,
    }
    return BenchmarkReport(_sort_results(results), metadata, models)


def _assemble_voting(models: Dict[str, TrainedModel], space: FeatureSpace, seed: int,
                     n_train: int) -> TrainedModel:
    from utils.neighbors_and_voting import VotingModel

    if not models:
        raise ParameterError("Votação exige ao menos um modelo base no benchmark")
    members = [models[kind] for kind in KINDS if kind in models]
    return TrainedModel(ClassifierSpec('voting'), VotingModel.from_members(members), space,
                        member_seed(seed, 'voting'), n_train)


# --- renderização ---------------------------------------------------------

def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '|'.join('---' for _ in header) + '|']
    lines.extend('| ' + ' | '.join(row) + ' |' for row in rows)
    return lines


def format_percent(value: float) -> str:
    """0.909488 -> '90.949'"""
    return f"{100.0 * value:.3f}"


def render_report(report: BenchmarkReport, fmt: str = 'md', include_timings: bool = False) -> str:
    """Texto do relatório em markdown, csv ou json"""
    if fmt in ('md', 'markdown'):
        confusion_rows = [[r.kind, str(r.confusion.tp), str(r.confusion.fn), str(r.confusion.fp),
                           str(r.confusion.tn)] for r in report.results]
        metric_rows = [[r.kind] + [format_percent(v) for v in
                                   (r.metrics.f1_pos, r.metrics.accuracy,
                                    r.metrics.macro_precision, r.metrics.macro_recall)]
                       for r in report.results]
        lines = ['## Confusion matrix', '']
        lines += _markdown_table(['Model', 'TP', 'FN', 'FP', 'TN'], confusion_rows)
        lines += ['', '## Evaluation results', '']
        lines += _markdown_table(['Model', 'F1', 'Accuracy', 'Precision', 'Recall'], metric_rows)
        return '\n'.join(lines) + '\n'
    if fmt == 'csv':
        frame = report.to_frame()
        if not include_timings:
            frame = frame.drop(columns=['fit_seconds'])
        return frame.to_csv(index=False)
    if fmt == 'json':
        return json.dumps(report.to_dict(include_timings), indent=2, sort_keys=True,
                          ensure_ascii=False) + '\n'
    raise ParameterError(f"Formato desconhecido: {fmt!r} (use md, csv ou json)")
