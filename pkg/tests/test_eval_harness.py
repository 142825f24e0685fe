import json
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

import config
import utils.eval_harness as eval_harness
from conftest import FAST_OVERRIDES
from utils.corpus_io import CorpusLoader
from utils.errors import AssetError, ParameterError, ShapeError, StratificationError
from utils.eval_harness import (BenchmarkConfig, BenchmarkReport, ConfusionMatrix, ModelResult,
                                confusion_matrix, expand_grid, grid_search, load_paper_rows,
                                render_report, reproduce_paper_tables, run_benchmark,
                                summarize_metrics)
from utils.featurizer import FeatureSpace
from utils.model_api import KINDS

FAST_KINDS = ('multinomial_nb', 'logistic_regression', 'decision_tree', 'knn')


def _fast_config(**kwargs):
    return BenchmarkConfig(overrides=FAST_OVERRIDES, **kwargs)


def test_confusion_matrix_counts():
    cm = confusion_matrix([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert cm == ConfusionMatrix(tp=2, fn=1, fp=1, tn=1)
    assert cm.total == 5


def test_confusion_matrix_rejects_bad_input():
    with pytest.raises(ShapeError):
        confusion_matrix([1, 0], [1])
    with pytest.raises(ShapeError):
        confusion_matrix([], [])


def test_metrics_for_best_published_row():
    report = summarize_metrics(ConfusionMatrix(tp=417, fn=32, fp=51, tn=401))
    assert report.accuracy == pytest.approx(0.90788, abs=5e-6)
    assert report.f1_pos == pytest.approx(0.90949, abs=5e-6)
    assert report.macro_precision == pytest.approx(0.90856, abs=5e-6)
    assert report.macro_recall == pytest.approx(0.90795, abs=5e-6)


def test_metrics_for_unbalanced_row():
    report = summarize_metrics(ConfusionMatrix(tp=430, fn=19, fp=269, tn=183))
    assert report.accuracy == pytest.approx(0.68036, abs=5e-6)
    assert report.f1_pos == pytest.approx(0.74913, abs=5e-6)
    assert report.macro_precision == pytest.approx(0.76055, abs=5e-6)
    assert report.macro_recall == pytest.approx(0.68128, abs=5e-6)


def test_all_correct_predictions():
    report = summarize_metrics(confusion_matrix([1, 0, 1, 0], [1, 0, 1, 0]))
    assert report.to_dict() == {key: 1.0 for key in report.to_dict()}


def test_zero_denominators_give_zero():
    report = summarize_metrics(ConfusionMatrix(tp=0, fn=0, fp=0, tn=4))
    assert report.precision_pos == 0.0
    assert report.recall_pos == 0.0
    assert report.f1_pos == 0.0
    assert report.accuracy == 1.0


@pytest.mark.parametrize('counts', [(7, 3, 2, 8), (1, 0, 5, 9), (12, 4, 4, 12)])
def test_metrics_match_exact_fractions(counts):
    tp, fn, fp, tn = counts
    report = summarize_metrics(ConfusionMatrix(*counts))
    precision = Fraction(tp, tp + fp)
    recall = Fraction(tp, tp + fn)
    assert report.accuracy == pytest.approx(float(Fraction(tp + tn, sum(counts))))
    assert report.f1_pos == pytest.approx(float(2 * precision * recall / (precision + recall)))
    assert report.macro_recall == pytest.approx(
        float((recall + Fraction(tn, tn + fp)) / 2))


def test_published_tables_reproduce():
    result = reproduce_paper_tables()
    assert result.summary_line == '19/19 rows reproduced'
    frame = result.to_frame()
    assert frame['passed'].all()
    assert len(frame) == len(KINDS)


def test_known_typo_rows_use_errata():
    rows = {row.model: row for row in reproduce_paper_tables().rows}
    assert rows['Linear SVC'].errata_applied == ('precision', 'recall')
    assert rows['LGBM'].errata_applied == ()


def test_literal_reading_does_not_reproduce():
    result = reproduce_paper_tables(reading='literal')
    assert result.passed < len(result.rows)


def test_gaussian_nb_row_has_smaller_test_set():
    rows = {row.kind: row for row in load_paper_rows()}
    assert rows['gaussian_nb'].confusion().total == 601
    assert rows['lgbm_style'].confusion().total == 901


def test_unknown_reading():
    row = load_paper_rows()[0]
    with pytest.raises(ParameterError):
        row.confusion('sideways')


def test_paper_tables_missing(tmp_path):
    with pytest.raises(AssetError):
        load_paper_rows(tmp_path / 'nope.json')


def test_paper_tables_corrupt(tmp_path):
    path = tmp_path / 'tables.json'
    path.write_text('[{"model": "LGBM"', encoding='utf-8')
    with pytest.raises(AssetError):
        load_paper_rows(path)


def test_paper_tables_wrong_row_count(tmp_path):
    entries = json.loads(config.PATHS['paper_tables'].read_text(encoding='utf-8'))
    path = tmp_path / 'tables.json'
    path.write_text(json.dumps(entries[:5]), encoding='utf-8')
    with pytest.raises(AssetError):
        load_paper_rows(path)


def test_expand_grid_order():
    assert expand_grid({'a': [1, 2], 'b': ['x']}) == [{'a': 1, 'b': 'x'}, {'a': 2, 'b': 'x'}]
    assert expand_grid([{'k': 3}, {'k': 1}]) == [{'k': 3}, {'k': 1}]
    assert expand_grid({}) == [{}]


def test_singleton_grid_returns_its_point(small_features):
    _, X, y = small_features
    result = grid_search('multinomial_nb', {'alpha': [0.5]}, X, y, folds=3, seed=1)
    assert result.best.hyperparameters['alpha'] == 0.5
    assert len(result.table) == 1


def test_empty_grid_rejected(small_features):
    _, X, y = small_features
    with pytest.raises(ParameterError):
        grid_search('knn', [], X, y)


def test_grid_search_is_deterministic(small_features):
    _, X, y = small_features
    grid = {'alpha': [0.1, 1.0]}
    first = grid_search('bernoulli_nb', grid, X, y, folds=3, seed=5)
    second = grid_search('bernoulli_nb', grid, X, y, folds=3, seed=5)
    pd.testing.assert_frame_equal(first.table, second.table)
    assert first.best == second.best


def test_grid_search_prefers_dominant_point():
    rng = np.random.default_rng(3)
    label_0 = np.column_stack([np.ones(12), rng.random(12) * 0.1])
    label_1 = np.column_stack([rng.random(12) * 0.1, np.ones(12)])
    X = FeatureSpace.synthetic(2).wrap(np.vstack([label_0, label_1]))
    y = np.array([0] * 12 + [1] * 12)
    # k=16 cobre todo o treino de cada dobra e prevê sempre 0.5
    result = grid_search('knn', {'k': [16, 1]}, X, y, folds=3, seed=0)
    assert result.best.hyperparameters['k'] == 1
    assert result.table.loc[0, 'mean_f1'] == 0.0
    assert result.table.loc[1, 'mean_f1'] == 1.0


def test_benchmark_subset(synthetic_corpus, normalizer):
    report = run_benchmark(synthetic_corpus, _fast_config(kinds=FAST_KINDS), normalizer)
    assert sorted(r.kind for r in report.results) == sorted(FAST_KINDS)
    assert all(r.confusion.total == 18 for r in report.results)
    f1_scores = [r.metrics.f1_pos for r in report.results]
    assert f1_scores == sorted(f1_scores, reverse=True)
    assert report.metadata['train'] == 42
    assert report.metadata['test'] == 18


def test_benchmark_is_deterministic(synthetic_corpus, normalizer):
    benchmark_config = _fast_config(kinds=FAST_KINDS, seed=11)
    first = run_benchmark(synthetic_corpus, benchmark_config, normalizer)
    second = run_benchmark(synthetic_corpus, benchmark_config, normalizer)
    assert render_report(first, 'json') == render_report(second, 'json')


def test_benchmark_rejects_unknown_kind(synthetic_corpus, normalizer):
    with pytest.raises(ParameterError):
        run_benchmark(synthetic_corpus, _fast_config(kinds=('knn', 'naive')), normalizer)


def test_benchmark_needs_both_labels(synthetic_corpus, normalizer):
    positives = np.flatnonzero(synthetic_corpus.labels == 1)
    single = synthetic_corpus.subset(positives, 'positivos')
    with pytest.raises(StratificationError):
        run_benchmark(single, _fast_config(kinds=FAST_KINDS), normalizer)


def test_benchmark_voting_uses_fitted_members(synthetic_corpus, normalizer):
    report = run_benchmark(synthetic_corpus,
                           _fast_config(kinds=('multinomial_nb', 'knn', 'voting')), normalizer)
    voting = report.models['voting']
    assert [member.kind for member in voting.estimator.members] == ['multinomial_nb', 'knn']
    for member in voting.estimator.members:
        assert member is report.models[member.kind]
    assert any(r.kind == 'voting' for r in report.results)


def test_grid_search_only_sees_training_rows(synthetic_corpus, normalizer, monkeypatch):
    seen = []
    original = eval_harness.grid_search

    def spy(kind, grid, X, y, folds, seed):
        seen.append(X.shape[0])
        return original(kind, grid, X, y, folds, seed)

    monkeypatch.setattr(eval_harness, 'grid_search', spy)
    benchmark_config = _fast_config(kinds=('multinomial_nb',), grid_search=True,
                                    grids={'multinomial_nb': {'alpha': [0.5, 1.0]}})
    report = run_benchmark(synthetic_corpus, benchmark_config, normalizer)
    assert seen == [report.metadata['train']]


@pytest.mark.slow
def test_full_benchmark(synthetic_corpus, normalizer):
    report = run_benchmark(synthetic_corpus, _fast_config(), normalizer)
    assert sorted(r.kind for r in report.results) == sorted(KINDS)
    assert all(r.confusion.total == 18 for r in report.results)


@pytest.mark.slow
def test_default_benchmark_on_bundled_corpus(normalizer):
    corpus = CorpusLoader.load_corpus(config.PATHS['corpus'], 'message', 'cyberbullying')
    report = run_benchmark(corpus, BenchmarkConfig(seed=42), normalizer)
    assert len(report.results) == len(KINDS)
    strong = [r.kind for r in report.results if r.metrics.accuracy >= 0.85]
    assert len(strong) >= 14, render_report(report, 'md')


def _single_result_report():
    cm = ConfusionMatrix(tp=417, fn=32, fp=51, tn=401)
    return BenchmarkReport((ModelResult('lgbm_style', {}, cm, summarize_metrics(cm), 0.25),),
                           {'seed': 42})


def test_markdown_report():
    text = render_report(_single_result_report(), 'md')
    assert '| lgbm_style | 417 | 32 | 51 | 401 |' in text
    assert '| lgbm_style | 90.949 | 90.788 | 90.856 | 90.795 |' in text


def test_empty_report_has_headers_only():
    text = render_report(BenchmarkReport(()), 'md')
    assert '| Model | TP | FN | FP | TN |' in text
    assert 'lgbm_style' not in text
    assert render_report(BenchmarkReport(()), 'csv').strip().startswith('kind,tp,fn,fp,tn')


def test_json_report_excludes_timings():
    report = _single_result_report()
    text = render_report(report, 'json')
    assert json.loads(text) == report.to_dict()
    assert 'fit_seconds' not in text
    assert 'fit_seconds' in render_report(report, 'json', include_timings=True)


def test_unknown_report_format():
    with pytest.raises(ParameterError):
        render_report(BenchmarkReport(()), 'xlsx')
