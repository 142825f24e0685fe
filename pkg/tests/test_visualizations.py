import plotly.graph_objects as go
import pytest

import config
from utils.corpus_io import CorpusLoader, LabeledCorpus
from utils.eval_harness import (BenchmarkReport, ConfusionMatrix, ModelResult,
                                reproduce_paper_tables, summarize_metrics)
from utils.visualizations import Visualizations


@pytest.fixture
def viz():
    return Visualizations(config.COLORS, config.CHART_CONFIG)


def test_label_distribution(viz, synthetic_corpus):
    fig = viz.create_label_distribution_chart(synthetic_corpus)
    assert list(fig.data[0].y) + list(fig.data[1].y) == [30, 30]


def test_empty_corpus_gives_empty_figure(viz):
    assert len(viz.create_label_distribution_chart(LabeledCorpus(())).data) == 0


def test_length_histogram_has_trace_per_label(viz, synthetic_corpus):
    report = CorpusLoader.corpus_stats(synthetic_corpus, bins=10)
    fig = viz.create_length_histogram(report, 'words')
    assert len(fig.data) == 2
    assert sum(sum(trace.y) for trace in fig.data) == len(synthetic_corpus)
    assert len(viz.create_length_histogram(report, 'syllables').data) == 0


def test_metric_chart_and_heatmap(viz):
    cm = ConfusionMatrix(tp=417, fn=32, fp=51, tn=401)
    report = BenchmarkReport((ModelResult('lgbm_style', {}, cm, summarize_metrics(cm), 0.1),))
    fig = viz.create_metric_bar_chart(report)
    assert list(fig.data[0].y) == ['lgbm_style']
    heatmap = viz.create_confusion_heatmap(cm)
    assert heatmap.data[0].z.tolist() == [[401, 51], [32, 417]]


def test_paper_delta_chart(viz):
    fig = viz.create_paper_delta_chart(reproduce_paper_tables().to_frame())
    assert isinstance(fig, go.Figure)
    assert len(fig.data) == 4
