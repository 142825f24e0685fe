"""
Módulo de páginas do dashboard
"""
import streamlit as st

LABEL_NAMES = {0: "Não ofensivas (0)", 1: "Cyberbullying (1)"}


class BasePage:
    """Classe base para todas as páginas do dashboard"""

    def __init__(self, viz, experiment_config):
        self.viz = viz
        self.experiment_config = experiment_config

    def render(self, corpus, **kwargs):
        """Método que deve ser implementado por cada página"""
        raise NotImplementedError(
            "Cada página deve implementar o método render")

    def section_header(self, title):
        st.markdown(f'<h2 class="section-header">{title}</h2>', unsafe_allow_html=True)

    def check_data_availability(self, corpus, data_name, require_both_labels=False):
        """Verifica se há mensagens e, se pedido, exemplos dos dois rótulos"""
        if corpus is None or len(corpus) == 0:
            st.warning(f"Dados de {data_name} não disponíveis.")
            return False
        if require_both_labels:
            missing = [LABEL_NAMES[label] for label, count in self.label_summary(corpus)[1:]
                       if count == 0]
            if missing:
                st.warning(f"Corpus sem exemplos de: {', '.join(missing)}.")
                return False
        return True

    @staticmethod
    def label_summary(corpus):
        """Pares (rótulo, contagem): total primeiro, depois 0 e 1"""
        counts = corpus.label_counts()
        return [(None, len(corpus))] + [(label, int(counts.get(label, 0))) for label in (0, 1)]

    def display_label_metrics(self, corpus):
        """Exibe total de mensagens e contagem por rótulo"""
        columns = st.columns(3)
        for column, (label, count) in zip(columns, self.label_summary(corpus)):
            with column:
                st.metric(LABEL_NAMES.get(label, "Total de Mensagens"), count)
