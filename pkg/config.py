import os
from pathlib import Path
from typing import Any, Callable, Optional

from dotenv import load_dotenv

from utils.errors import ConfigError

# Carrega as variáveis de ambiente do arquivo .env
# Certifique-se de que load_dotenv() seja chamado antes de tentar acessar as variáveis
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent

# Função auxiliar para pegar a variável de ambiente ou retornar um erro claro


def get_env_var(name: str, default: Optional[Any] = None,
                cast: Callable[[str], Any] = str) -> Any:
    value = os.getenv(name)
    if value is None or value == '':
        if default is None:
            raise ConfigError(
                f"Variável de ambiente '{name}' não configurada. Por favor, verifique seu arquivo .env.")
        return default
    try:
        return cast(value)
    except ValueError as exc:
        raise ConfigError(
            f"Variável de ambiente '{name}' com valor inválido: {value!r}") from exc


def _resolve(path: str) -> Path:
    """Resolve caminhos relativos a partir da raiz do projeto"""
    candidate = Path(path)
    return candidate if candidate.is_absolute() else BASE_DIR / candidate


# Arquivos de dados e recursos
PATHS = {
    'corpus': _resolve(get_env_var('CYBERBULLYING_DATA_PATH', 'data/synthetic_tr.csv')),
    'stopwords': _resolve(get_env_var('CYBERBULLYING_STOPWORDS', 'assets/stopwords_tr.txt')),
    'lexicon': _resolve(get_env_var('CYBERBULLYING_LEXICON', 'assets/slang_tr.tsv')),
    'paper_tables': _resolve(get_env_var('CYBERBULLYING_PAPER_TABLES', 'assets/paper_tables.json')),
}

# Configurações do experimento
EXPERIMENT_CONFIG = {
    'seed': get_env_var('CYBERBULLYING_SEED', 42, int),
    'test_fraction': get_env_var('CYBERBULLYING_TEST_FRACTION', 0.3, float),
    'min_df': get_env_var('CYBERBULLYING_MIN_DF', 2, int),
    'text_col': get_env_var('CYBERBULLYING_TEXT_COL', 'message'),
    'label_col': get_env_var('CYBERBULLYING_LABEL_COL', 'cyberbullying'),
    'folds': 3,
}

# Paralelismo na construção das florestas (resultado idêntico ao sequencial)
N_JOBS = get_env_var('CYBERBULLYING_N_JOBS', 1, int)

LOG_LEVEL = get_env_var('CYBERBULLYING_LOG_LEVEL', 'WARNING')

# Configurações de visualização
COLORS = {
    'primary': '#1f77b4',
    'secondary': '#ff7f0e',
    'success': '#2ca02c',
    'danger': '#d62728',
    'warning': '#ff7f0e',
    'info': '#17a2b8',
    'purple': '#9467bd',
    'label_0': '#2ca02c',
    'label_1': '#d62728',
}

# Configurações dos gráficos
CHART_CONFIG = {
    'bins': 30,
    'height': 420,
    'template': 'plotly_white',
}
