import streamlit as st
from utils.corpus_io import CorpusLoader, EDA_METRICS
from . import BasePage


class EdaAnalysis(BasePage):
    """Página de análise exploratória do corpus"""

    def render(self, corpus, **kwargs):
        self.section_header("📊 Análise Exploratória")

        if not self.check_data_availability(corpus, "mensagens"):
            return

        try:
            report = CorpusLoader.corpus_stats(corpus)
        except Exception as e:
            st.error(f"Erro ao calcular estatísticas: {str(e)}")
            return

        self._display_totals(report)
        self._render_distributions(corpus, report)
        self._render_summary(report)

    def _display_totals(self, report):
        """Exibe totais do corpus"""
        col1, col2, col3, col4 = st.columns(4)

        with col1:
            st.metric("Caracteres", f"{report.totals.get('chars', 0):,}")

        with col2:
            st.metric("Palavras", f"{report.totals.get('words', 0):,}")

        with col3:
            st.metric("Caracteres por Mensagem", f"{report.totals.get('mean_chars', 0):.1f}")

        with col4:
            st.metric("Palavras por Mensagem", f"{report.totals.get('mean_words', 0):.1f}")

    def _render_distributions(self, corpus, report):
        """Renderiza histogramas por rótulo"""
        st.subheader("📈 Distribuições por Rótulo")
        st.plotly_chart(self.viz.create_label_distribution_chart(corpus),
                        use_container_width=True)

        for metric in EDA_METRICS:
            st.plotly_chart(self.viz.create_length_histogram(report, metric),
                            use_container_width=True)

    def _render_summary(self, report):
        st.subheader("📋 Resumo por Rótulo")
        st.dataframe(report.summary.round(2), use_container_width=True)
