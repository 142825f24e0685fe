import streamlit as st
from utils.errors import AssetError
from utils.eval_harness import reproduce_paper_tables
from . import BasePage


class PaperTablesAnalysis(BasePage):
    """Página de conferência das métricas publicadas"""

    def render(self, corpus=None, **kwargs):
        self.section_header("📑 Conferência das Tabelas Publicadas")

        reading = st.radio("Leitura das colunas FN/FP:", ['corrected', 'literal'],
                           format_func=lambda r: 'Corrigida (colunas trocadas)'
                           if r == 'corrected' else 'Literal (como impresso)')
        try:
            result = reproduce_paper_tables(reading=reading)
        except AssetError as e:
            st.error(f"Erro ao ler as tabelas de referência: {str(e)}")
            return

        if result.passed == len(result.rows):
            st.success(result.summary_line)
        else:
            st.warning(result.summary_line)

        frame = result.to_frame()
        st.dataframe(frame, use_container_width=True)
        st.plotly_chart(self.viz.create_paper_delta_chart(frame), use_container_width=True)
