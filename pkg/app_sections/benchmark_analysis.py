import streamlit as st
from utils.errors import CyberbullyingError
from utils.eval_harness import render_report
from utils.model_api import KINDS
from . import BasePage


class BenchmarkAnalysis(BasePage):
    """Página do benchmark dos dezenove modelos"""

    def render(self, corpus, benchmark_runner=None, **kwargs):
        self.section_header("🏁 Benchmark dos Modelos")

        if not self.check_data_availability(corpus, "mensagens", require_both_labels=True):
            return

        settings = self._render_controls()
        if not st.button("Executar benchmark"):
            st.info("Ajuste os parâmetros e clique em **Executar benchmark**. "
                    "Os dezenove modelos podem levar alguns minutos.")
            return

        try:
            with st.spinner("Treinando e avaliando modelos..."):
                report = benchmark_runner(**settings)
        except CyberbullyingError as e:
            st.error(f"Erro no benchmark: {str(e)}")
            return

        self._render_tables(report)
        self._render_charts(report)

    def _render_controls(self):
        """Parâmetros do experimento"""
        col1, col2, col3 = st.columns(3)

        with col1:
            seed = st.number_input("Semente", value=int(self.experiment_config['seed']), step=1)

        with col2:
            test_fraction = st.slider("Fração de teste", 0.1, 0.5,
                                      float(self.experiment_config['test_fraction']), 0.05)

        with col3:
            min_df = st.number_input("min_df", min_value=1,
                                     value=int(self.experiment_config['min_df']), step=1)

        kinds = st.multiselect("Modelos", list(KINDS), default=list(KINDS))
        return {'seed': int(seed), 'test_fraction': float(test_fraction),
                'min_df': int(min_df), 'kinds': tuple(kinds) or KINDS}

    def _render_tables(self, report):
        """Tabelas de contagens e de métricas"""
        frame = report.to_frame()

        st.subheader("🔢 Matrizes de Confusão")
        st.dataframe(frame[['kind', 'tp', 'fn', 'fp', 'tn']], use_container_width=True)

        st.subheader("📋 Resultados (%)")
        metrics = frame[['kind', 'f1_pos', 'accuracy', 'macro_precision', 'macro_recall']].copy()
        metrics.iloc[:, 1:] = (metrics.iloc[:, 1:] * 100).round(3)
        st.dataframe(metrics, use_container_width=True)

        st.download_button("Baixar relatório (markdown)", render_report(report, 'md'),
                           file_name='benchmark.md')

    def _render_charts(self, report):
        col1, col2 = st.columns(2)

        with col1:
            st.plotly_chart(self.viz.create_metric_bar_chart(report), use_container_width=True)

        with col2:
            kinds = [result.kind for result in report.results]
            selected = st.selectbox("Modelo para a matriz de confusão:", kinds)
            result = next(r for r in report.results if r.kind == selected)
            st.plotly_chart(self.viz.create_confusion_heatmap(result.confusion,
                                                              f'Matriz de Confusão - {selected}'),
                            use_container_width=True)
