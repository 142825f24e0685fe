"""
Vocabulário de unigramas com poda por frequência de documento e vetores
TF-IDF normalizados (L2) em matrizes esparsas CSR.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from utils.errors import ParameterError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Vocabulary:
    """Termo -> índice (ordem da primeira aparição) e frequência de documento"""
    terms: Tuple[str, ...]
    df: Tuple[int, ...]
    n_train: int
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.terms) != len(self.df):
            raise ShapeError("terms e df com tamanhos diferentes")
        object.__setattr__(self, 'index', {term: i for i, term in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def df_array(self) -> np.ndarray:
        return np.asarray(self.df, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class IdfModel:
    """Pesos idf_t = ln((1 + N) / (1 + df_t)) + 1"""
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


def build_vocabulary(token_docs: Sequence[Sequence[str]], min_df: int = 2) -> Vocabulary:
    """Vocabulário de unigramas a partir dos documentos de treino"""
    if min_df < 1:
        raise ParameterError(f"min_df deve ser >= 1, recebido {min_df}")
    df: Dict[str, int] = {}
    # dict preserva a ordem de primeira aparição
    for tokens in token_docs:
        for term in dict.fromkeys(tokens):
            df[term] = df.get(term, 0) + 1
    kept = [(term, count) for term, count in df.items() if count >= min_df]
    vocab = Vocabulary(tuple(t for t, _ in kept), tuple(c for _, c in kept), len(token_docs))
    logger.info("Vocabulário: %d termos retidos de %d (min_df=%d)", len(vocab), len(df), min_df)
    return vocab


def count_matrix(token_docs: Sequence[Sequence[str]], vocab: Vocabulary) -> sp.csr_matrix:
    """Matriz de contagens (documentos x vocabulário); termos fora do vocabulário são ignorados"""
    indptr = [0]
    indices: List[int] = []
    data: List[float] = []
    for tokens in token_docs:
        counts: Dict[int, int] = {}
        for token in tokens:
            position = vocab.index.get(token)
            if position is not None:
                counts[position] = counts.get(position, 0) + 1
        for position in sorted(counts):
            indices.append(position)
            data.append(float(counts[position]))
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(token_docs), len(vocab)))


def vectorize_counts(tokens: Sequence[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Vetor de contagens de um documento (1 x V)"""
    return count_matrix([tokens], vocab)


def fit_idf(counts: sp.csr_matrix, vocab: Vocabulary) -> IdfModel:
    """Pesos idf suavizados do vocabulário"""
    if counts.shape[1] != len(vocab):
        raise ShapeError(
            f"Matriz com {counts.shape[1]} colunas para vocabulário de {len(vocab)} termos")
    df = vocab.df_array.astype(np.float64)
    weights = np.log((1.0 + vocab.n_train) / (1.0 + df)) + 1.0
    weights.setflags(write=False)
    return IdfModel(weights)


def tfidf_transform(counts: sp.csr_matrix, idf: IdfModel) -> sp.csr_matrix:
    """Contagem x idf, normalizada pela norma euclidiana de cada linha"""
    if counts.shape[1] != len(idf):
        raise ShapeError(
            f"Matriz com {counts.shape[1]} colunas para {len(idf)} pesos idf")
    matrix = sp.csr_matrix(counts, dtype=np.float64, copy=True)
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    matrix.data *= idf.weights[matrix.indices]

    row_nnz = np.diff(matrix.indptr)
    squares = np.add.reduceat(matrix.data ** 2, matrix.indptr[:-1][row_nnz > 0]) \
        if matrix.nnz else np.zeros(0)
    norms = np.zeros(matrix.shape[0])
    norms[row_nnz > 0] = np.sqrt(squares)
    # Linhas vazias continuam vazias
    matrix.data /= np.repeat(norms, row_nnz)
    matrix.sort_indices()
    return matrix


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


@dataclass(frozen=True, eq=False)
class FeatureSpace:
    """Vocabulário + idf ajustados no treino, com fingerprint de conteúdo"""
    vocabulary: Vocabulary
    idf: IdfModel
    fingerprint: str = field(init=False)

    def __post_init__(self):
        if len(self.vocabulary) != len(self.idf):
            raise ShapeError("Vocabulário e idf com tamanhos diferentes")
        object.__setattr__(self, 'fingerprint', hashlib.sha256(
            _canonical_json(self.to_dict()).encode('utf-8')).hexdigest())

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    @classmethod
    def fit(cls, token_docs: Sequence[Sequence[str]], min_df: int = 2) -> 'FeatureSpace':
        vocab = build_vocabulary(token_docs, min_df)
        return cls(vocab, fit_idf(count_matrix(token_docs, vocab), vocab))

    @classmethod
    def synthetic(cls, n_features: int) -> 'FeatureSpace':
        """Espaço anônimo (f0, f1, ...) para matrizes numéricas de teste"""
        vocab = Vocabulary(tuple(f'f{i}' for i in range(n_features)),
                           tuple(1 for _ in range(n_features)), 1)
        return cls(vocab, fit_idf(sp.csr_matrix((0, n_features)), vocab))

    def transform(self, token_docs: Sequence[Sequence[str]]) -> 'FeatureMatrix':
        """TF-IDF dos documentos; termos novos são ignorados (sem vazamento)"""
        values = tfidf_transform(count_matrix(token_docs, self.vocabulary), self.idf)
        return FeatureMatrix(values, self)

    def wrap(self, values) -> 'FeatureMatrix':
        """Associa uma matriz numérica já pronta a este espaço"""
        return FeatureMatrix(as_csr(values), self)

    def to_dict(self) -> Dict[str, list]:
        return {
            'terms': list(self.vocabulary.terms),
            'df': list(self.vocabulary.df),
            'idf': [float(w) for w in self.idf.weights],
            'n_train': self.vocabulary.n_train,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, list]) -> 'FeatureSpace':
        vocab = Vocabulary(tuple(payload['terms']), tuple(int(d) for d in payload['df']),
                           int(payload['n_train']))
        weights = np.asarray(payload['idf'], dtype=np.float64)
        weights.setflags(write=False)
        return cls(vocab, IdfModel(weights))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Matriz CSR acompanhada do espaço de atributos que a gerou"""
    values: sp.csr_matrix
    space: FeatureSpace

    def __post_init__(self):
        if self.values.shape[1] != self.space.n_features:
            raise ShapeError(
                f"Matriz com {self.values.shape[1]} colunas para espaço de {self.space.n_features}")

    @property
    def fingerprint(self) -> str:
        return self.space.fingerprint

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def rows(self, indices) -> 'FeatureMatrix':
        return FeatureMatrix(self.values[np.asarray(indices)], self.space)


def as_csr(values) -> sp.csr_matrix:
    """Converte arrays densos ou esparsos em CSR float64 sem zeros explícitos"""
    matrix = sp.csr_matrix(values, dtype=np.float64, copy=True)
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return matrix
