from typing import Dict

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from utils.corpus_io import LABELS, EdaReport, LabeledCorpus

METRIC_TITLES = {
    'chars': 'Caracteres por mensagem',
    'words': 'Palavras por mensagem',
    'mean_word_length': 'Tamanho médio das palavras',
}

LABEL_NAMES = {0: 'Não ofensiva (0)', 1: 'Cyberbullying (1)'}


class Visualizations:
    """Classe para criar visualizações interativas"""

    def __init__(self, colors: Dict[str, str], chart_config: Dict = None):
        self.colors = colors
        self.chart_config = chart_config or {'height': 420, 'template': 'plotly_white'}

    def _layout(self, fig: go.Figure, **kwargs) -> go.Figure:
        fig.update_layout(height=self.chart_config.get('height'),
                          template=self.chart_config.get('template'), **kwargs)
        return fig

    def create_label_distribution_chart(self, corpus: LabeledCorpus) -> go.Figure:
        """Gráfico de barras: documentos por rótulo"""
        if len(corpus) == 0:
            return go.Figure()

        counts = corpus.label_counts()
        frame = pd.DataFrame({
            'Rótulo': [LABEL_NAMES[label] for label in LABELS],
            'Documentos': [counts.get(label, 0) for label in LABELS],
        })
        fig = px.bar(
            frame, x='Rótulo', y='Documentos', text='Documentos',
            title='Distribuição dos Rótulos',
            color='Rótulo',
            color_discrete_sequence=[self.colors['label_0'], self.colors['label_1']],
        )
        return self._layout(fig, showlegend=False)

    def create_length_histogram(self, report: EdaReport, metric: str) -> go.Figure:
        """Histograma sobreposto por rótulo, usando os intervalos já calculados"""
        if metric not in METRIC_TITLES or report.frame.empty:
            return go.Figure()

        fig = go.Figure()
        for label in LABELS:
            counts, edges = report.histograms[label][metric]
            centers = (edges[:-1] + edges[1:]) / 2
            fig.add_trace(go.Bar(
                x=centers, y=counts, width=np.diff(edges),
                name=LABEL_NAMES[label], opacity=0.65,
                marker_color=self.colors[f'label_{label}'],
            ))
        return self._layout(fig, barmode='overlay', title=METRIC_TITLES[metric],
                            xaxis_title=METRIC_TITLES[metric], yaxis_title='Mensagens')

    def create_metric_bar_chart(self, report, metric: str = 'f1_pos') -> go.Figure:
        """Barras horizontais de uma métrica por modelo"""
        frame = report.to_frame()
        if frame.empty or metric not in frame.columns:
            return go.Figure()

        ordered = frame.sort_values(metric)
        fig = px.bar(
            ordered, x=ordered[metric] * 100, y='kind', orientation='h',
            title=f'{metric} por modelo (%)',
            color=ordered[metric] * 100, color_continuous_scale='Blues',
        )
        fig.update_layout(coloraxis_showscale=False)
        return self._layout(fig, xaxis_title=f'{metric} (%)', yaxis_title='Modelo')

    def create_confusion_heatmap(self, cm, title: str = 'Matriz de Confusão') -> go.Figure:
        """Heatmap 2x2: linhas = rótulo real, colunas = rótulo previsto"""
        values = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]])
        names = [LABEL_NAMES[0], LABEL_NAMES[1]]
        fig = px.imshow(
            values, x=names, y=names, text_auto=True, aspect='auto',
            color_continuous_scale='Blues', title=title,
            labels={'x': 'Previsto', 'y': 'Real', 'color': 'Mensagens'},
        )
        return self._layout(fig)

    def create_paper_delta_chart(self, frame: pd.DataFrame) -> go.Figure:
        """Diferença entre recalculado e impresso, por modelo e métrica"""
        delta_columns = [col for col in frame.columns if col.endswith('_delta')]
        if frame.empty or not delta_columns:
            return go.Figure()

        melted = frame.melt(id_vars='model', value_vars=delta_columns,
                            var_name='Métrica', value_name='Diferença')
        melted['Métrica'] = melted['Métrica'].str.replace('_delta', '', regex=False)
        fig = px.bar(melted, x='model', y='Diferença', color='Métrica', barmode='group',
                     title='Recalculado - impresso (pontos percentuais)')
        return self._layout(fig, xaxis_title='Modelo')
