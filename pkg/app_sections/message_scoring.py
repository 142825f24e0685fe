import streamlit as st
from config import N_JOBS, PATHS
from utils.errors import CyberbullyingError
from utils.featurizer import FeatureSpace
from utils.model_api import KINDS, ClassifierSpec, fit_model, predict_proba, threshold_labels
from utils.turkish_normalizer import TurkishNormalizer
from . import BasePage


@st.cache_resource
def _normalizer():
    return TurkishNormalizer.from_files(PATHS['stopwords'], PATHS['lexicon'])


@st.cache_resource
def _train(_corpus, corpus_key: str, kind: str, min_df: int, seed: int):
    """Ajusta um modelo no corpus inteiro (cache por corpus e parâmetros)"""
    tokens = _normalizer().normalize_many(_corpus.texts)
    space = FeatureSpace.fit(tokens, min_df)
    overrides = {'n_jobs': N_JOBS} if kind in ('random_forest', 'extra_trees') else {}
    return fit_model(ClassifierSpec(kind, overrides), space.transform(tokens), _corpus.labels, seed)


class MessageScoring(BasePage):
    """Página de pontuação interativa de mensagens"""

    def render(self, corpus, **kwargs):
        self.section_header("💬 Pontuação de Mensagens")

        if not self.check_data_availability(corpus, "mensagens", require_both_labels=True):
            return

        kind = st.selectbox("Modelo:", list(KINDS), index=KINDS.index('multinomial_nb'))
        text = st.text_area("Mensagens (uma por linha):", "sen tam bir salaksın\nbugün hava çok güzel")
        messages = [line for line in text.splitlines() if line.strip()]
        if not messages:
            return

        try:
            with st.spinner(f"Treinando {kind}..."):
                model = _train(corpus, f"{corpus.provenance}:{len(corpus)}", kind,
                               int(self.experiment_config['min_df']),
                               int(self.experiment_config['seed']))
            tokens = _normalizer().normalize_many(messages)
            probabilities = predict_proba(model, model.space.transform(tokens))
        except CyberbullyingError as e:
            st.error(f"Erro ao pontuar mensagens: {str(e)}")
            return

        for message, token_list, probability, label in zip(
                messages, tokens, probabilities, threshold_labels(probabilities)):
            col1, col2 = st.columns([3, 1])
            with col1:
                st.markdown(f"**{message}**")
                st.caption("Tokens: " + (' '.join(token_list) or '(nenhum)'))
            with col2:
                st.metric("Cyberbullying" if label == 1 else "Não ofensiva",
                          f"{100 * probability:.1f}%")
