import numpy as np
import pytest

import config
from utils.corpus_io import make_synthetic_corpus
from utils.featurizer import FeatureSpace
from utils.turkish_normalizer import TurkishNormalizer

# Hiperparâmetros baratos para ajustar todos os tipos em poucos segundos
FAST_OVERRIDES = {
    'random_forest': {'n_estimators': 5},
    'extra_trees': {'n_estimators': 5},
    'adaboost': {'rounds': 5},
    'gbm': {'rounds': 5},
    'xgb_style': {'rounds': 5},
    'lgbm_style': {'rounds': 5, 'min_child': 2},
    'gaussian_nb': {'top_k': 50},
    'lda': {'top_k': 50},
    'qda': {'top_k': 20},
    'logistic_regression': {'epochs': 5},
    'linear_svc': {'epochs': 5},
    'sgd': {'epochs': 5},
    'perceptron': {'epochs': 5},
}


@pytest.fixture(scope='session')
def normalizer():
    return TurkishNormalizer.from_files(config.PATHS['stopwords'], config.PATHS['lexicon'])


@pytest.fixture(scope='session')
def synthetic_corpus():
    return make_synthetic_corpus(n_per_label=30, seed=7)


@pytest.fixture(scope='session')
def small_features(synthetic_corpus, normalizer):
    """Espaço TF-IDF, matriz e rótulos do corpus sintético pequeno"""
    tokens = normalizer.normalize_many(synthetic_corpus.texts)
    space = FeatureSpace.fit(tokens, min_df=2)
    return space, space.transform(tokens), synthetic_corpus.labels


@pytest.fixture
def corpus_csv(tmp_path, synthetic_corpus):
    """CSV com as colunas padrão (message, cyberbullying)"""
    path = tmp_path / 'corpus.csv'
    frame = synthetic_corpus.to_frame().rename(columns={'text': 'message',
                                                        'label': 'cyberbullying'})
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def make_matrix():
    """Matriz numérica associada a um espaço anônimo"""
    def build(rows):
        values = np.asarray(rows, dtype=np.float64)
        return FeatureSpace.synthetic(values.shape[1]).wrap(values)
    return build
