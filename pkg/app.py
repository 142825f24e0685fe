# Imports internos
from utils.visualizations import Visualizations
from utils.corpus_io import CorpusLoader
from utils.errors import CyberbullyingError
from utils.eval_harness import BenchmarkConfig, run_benchmark
from config import PATHS, EXPERIMENT_CONFIG, COLORS, CHART_CONFIG, N_JOBS

# Imports das páginas
from app_sections import BasePage
from app_sections.eda_analysis import EdaAnalysis
from app_sections.benchmark_analysis import BenchmarkAnalysis
from app_sections.paper_tables_analysis import PaperTablesAnalysis
from app_sections.message_scoring import MessageScoring

# Imports externos
import streamlit as st

# Configuração da página
st.set_page_config(
    page_title="Detecção de Cyberbullying em Turco",
    page_icon="🛡️",
    layout="wide",
    initial_sidebar_state="expanded",
)

# CSS customizado
st.markdown("""
<style>
    .main-header {
        font-size: 2.5rem;
        font-weight: bold;
        color: #1f77b4;
        text-align: center;
        margin-bottom: 2rem;
    }
    .section-header {
        font-size: 1.5rem;
        font-weight: bold;
        color: #2c3e50;
        margin-top: 2rem;
        margin-bottom: 1rem;
    }
</style>
""", unsafe_allow_html=True)


@st.cache_data(ttl=300)  # Cache por 5 minutos
def load_corpus(path: str, text_col: str, label_col: str):
    """Carrega o corpus rotulado"""
    return CorpusLoader.load_corpus(path, text_col, label_col)


@st.cache_resource
def cached_benchmark(path: str, text_col: str, label_col: str, seed: int,
                     test_fraction: float, min_df: int, kinds: tuple):
    """Executa o benchmark uma vez por combinação de parâmetros"""
    corpus = load_corpus(path, text_col, label_col)
    config = BenchmarkConfig(seed=seed, test_fraction=test_fraction, min_df=min_df,
                             kinds=kinds, stopwords_path=str(PATHS['stopwords']),
                             overrides={kind: {'n_jobs': N_JOBS}
                                        for kind in ('random_forest', 'extra_trees')},
                             lexicon_path=str(PATHS['lexicon']))
    return run_benchmark(corpus, config)


def main():
    # Header principal
    st.markdown(
        '<h1 class="main-header">Detecção de Cyberbullying em Textos Turcos</h1>',
        unsafe_allow_html=True)

    # Sidebar para navegação
    st.sidebar.title("Navegação")
    corpus_path = st.sidebar.text_input("Arquivo do corpus (CSV)", str(PATHS['corpus']))

    # Carregar dados
    try:
        with st.spinner("Carregando corpus..."):
            corpus = load_corpus(corpus_path, EXPERIMENT_CONFIG['text_col'],
                                 EXPERIMENT_CONFIG['label_col'])
    except CyberbullyingError as e:
        st.error(f"Erro ao carregar o corpus: {str(e)}")
        corpus = None

    # Criar instância de visualizações
    viz = Visualizations(COLORS, CHART_CONFIG)

    if corpus is not None:
        BasePage(viz, EXPERIMENT_CONFIG).display_label_metrics(corpus)

    # Seções do dashboard
    sections = {
        "📊 Análise Exploratória": EdaAnalysis,
        "🏁 Benchmark dos Modelos": BenchmarkAnalysis,
        "📑 Conferência das Tabelas Publicadas": PaperTablesAnalysis,
        "💬 Pontuação de Mensagens": MessageScoring,
    }

    selected_section = st.sidebar.selectbox(
        "Selecione a seção:", list(sections.keys()))

    section_instance = sections[selected_section](viz, EXPERIMENT_CONFIG)
    if selected_section == "🏁 Benchmark dos Modelos":
        section_instance.render(corpus, benchmark_runner=lambda **kwargs: cached_benchmark(
            corpus_path, EXPERIMENT_CONFIG['text_col'], EXPERIMENT_CONFIG['label_col'], **kwargs))
    else:
        section_instance.render(corpus)

    # Rodapé
    st.markdown("---")

    st.markdown("""
    ### 📊 Informações do Dashboard
    **Dezenove classificadores implementados do zero sobre TF-IDF de unigramas**
    **Tecnologias utilizadas:** Streamlit, Plotly, Pandas, NumPy, SciPy
    """)


if __name__ == "__main__":
    main()
