import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from utils.errors import (CorpusEncodingError, CorpusFileError, ParameterError,
                          RowError, SchemaError, StratificationError)

logger = logging.getLogger(__name__)

LABELS = (0, 1)
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class LabeledDocument:
    """Mensagem bruta com rótulo binário (1 = cyberbullying)"""
    text: str
    label: int

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"Rótulo inválido: {self.label!r}")


@dataclass(frozen=True)
class LabeledCorpus:
    """Coleção ordenada e imutável de documentos rotulados"""
    docs: Tuple[LabeledDocument, ...]
    provenance: str = 'synthetic'

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def texts(self) -> List[str]:
        return [doc.text for doc in self.docs]

    @property
    def labels(self) -> np.ndarray:
        return np.fromiter((doc.label for doc in self.docs), dtype=np.int64,
                           count=len(self.docs))

    def label_counts(self) -> Dict[int, int]:
        """Contagem de documentos por rótulo"""
        counts = {label: 0 for label in LABELS}
        for doc in self.docs:
            counts[doc.label] += 1
        return counts

    def subset(self, indices: Sequence[int], provenance: str) -> 'LabeledCorpus':
        return LabeledCorpus(tuple(self.docs[i] for i in indices), provenance)

    def to_frame(self) -> pd.DataFrame:
        """Visão pandas do corpus (texto e rótulo)"""
        return pd.DataFrame({'text': self.texts, 'label': self.labels})


@dataclass(frozen=True)
class EdaReport:
    """Distribuições por rótulo de caracteres, palavras e tamanho médio das palavras"""
    frame: pd.DataFrame
    histograms: Dict[int, Dict[str, Tuple[np.ndarray, np.ndarray]]]
    summary: pd.DataFrame
    totals: Dict[str, float] = field(default_factory=dict)


EDA_METRICS = ('chars', 'words', 'mean_word_length')


def message_measures(text: str) -> Tuple[int, int, float]:
    """Caracteres (com espaços), palavras e tamanho médio das palavras"""
    tokens = text.split()
    mean_length = float(np.mean([len(t) for t in tokens])) if tokens else 0.0
    return len(text), len(tokens), mean_length


def _check_seed(seed: int) -> int:
    if not 0 <= int(seed) <= MAX_SEED:
        raise ParameterError(f"Semente fora do intervalo de 64 bits sem sinal: {seed}")
    return int(seed)


def allocate_test_counts(counts: Dict[int, int], test_fraction: float) -> Dict[int, int]:
    """Quantos documentos de cada rótulo vão para o teste"""
    total = sum(counts.values())
    exact = {label: counts[label] * test_fraction for label in LABELS}
    allocation = {label: int(math.floor(exact[label])) for label in LABELS}
    target = int(math.floor(total * test_fraction + 0.5))
    extra = max(0, target - sum(allocation.values()))

    # Sobras vão para os maiores restos fracionários (empate: menor rótulo)
    order = sorted(LABELS, key=lambda label: (-(exact[label] - allocation[label]), label))
    for label in order[:extra]:
        if allocation[label] < counts[label]:
            allocation[label] += 1
    return allocation


def stratified_split_indices(labels: np.ndarray, test_fraction: float,
                             seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Índices de treino e teste, ambos em ordem crescente"""
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError(
            f"test_fraction deve estar em (0, 1), recebido {test_fraction}")
    labels = np.asarray(labels)
    counts = {label: int(np.sum(labels == label)) for label in LABELS}
    for label, count in counts.items():
        if count == 0:
            raise StratificationError(
                f"Rótulo {label} não possui documentos; impossível estratificar")

    allocation = allocate_test_counts(counts, test_fraction)
    rng = np.random.default_rng(_check_seed(seed))
    test_parts = []
    for label in LABELS:
        members = np.flatnonzero(labels == label)
        # Embaralhamento Fisher-Yates semeado
        shuffled = members[rng.permutation(len(members))]
        test_parts.append(shuffled[:allocation[label]])

    test_idx = np.sort(np.concatenate(test_parts))
    mask = np.ones(len(labels), dtype=bool)
    mask[test_idx] = False
    return np.flatnonzero(mask), test_idx


def stratified_kfold(labels: np.ndarray, folds: int, seed: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Partições estratificadas (treino, validação) para validação cruzada"""
    if folds < 2:
        raise ParameterError(f"folds deve ser >= 2, recebido {folds}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(_check_seed(seed))
    assignment = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for label in LABELS:
        members = np.flatnonzero(labels == label)
        shuffled = members[rng.permutation(len(members))]
        # Distribuição circular continua de um rótulo para o outro
        assignment[shuffled] = (np.arange(len(shuffled)) + offset) % folds
        offset += len(shuffled)

    splits = []
    for fold in range(folds):
        valid = np.flatnonzero(assignment == fold)
        train = np.flatnonzero(assignment != fold)
        splits.append((train, valid))
    return splits


class CorpusLoader:
    """Classe para carregar e dividir corpora rotulados"""

    @staticmethod
    def load_corpus(path: Union[str, Path], text_column: str = 'message',
                    label_column: str = 'cyberbullying') -> LabeledCorpus:
        """Carrega um CSV UTF-8 com cabeçalho em um LabeledCorpus"""
        path = Path(path)
        if not path.is_file():
            raise CorpusFileError(f"Arquivo de corpus não encontrado: {path}")

        try:
            df = pd.read_csv(path, dtype=str, keep_default_na=False,
                             encoding='utf-8', encoding_errors='strict')
        except UnicodeDecodeError as exc:
            raise CorpusEncodingError(
                f"Arquivo {path} não está codificado em UTF-8: {exc}") from exc
        except pd.errors.EmptyDataError as exc:
            raise SchemaError(text_column, f"Arquivo {path} vazio, sem cabeçalho") from exc
        except pd.errors.ParserError as exc:
            raise CorpusFileError(f"Erro ao interpretar o CSV {path}: {exc}") from exc

        for column in (text_column, label_column):
            if column not in df.columns:
                raise SchemaError(column)

        docs = []
        for position, (text, raw_label) in enumerate(zip(df[text_column], df[label_column])):
            label = raw_label.strip()
            if label not in ('0', '1'):
                # Linha 1 é o cabeçalho
                raise RowError(position + 2, f"rótulo {raw_label!r} fora de {{0, 1}}")
            docs.append(LabeledDocument(text, int(label)))

        corpus = LabeledCorpus(tuple(docs), str(path))
        logger.info("Corpus %s carregado: %d documentos, %s", path, len(corpus),
                    corpus.label_counts())
        return corpus

    @staticmethod
    def stratified_split(corpus: LabeledCorpus, test_fraction: float = 0.3,
                         seed: int = 42) -> Tuple[LabeledCorpus, LabeledCorpus]:
        """Divisão treino/teste estratificada e determinística"""
        train_idx, test_idx = stratified_split_indices(corpus.labels, test_fraction, seed)
        train = corpus.subset(train_idx, f"{corpus.provenance}[train]")
        test = corpus.subset(test_idx, f"{corpus.provenance}[test]")
        logger.info("Divisão estratificada: treino=%d teste=%d (%s)", len(train), len(test),
                    test.label_counts())
        return train, test

    @staticmethod
    def corpus_stats(corpus: LabeledCorpus, bins: int = 30) -> EdaReport:
        """Estatísticas exploratórias por rótulo"""
        rows = [message_measures(doc.text) for doc in corpus.docs]
        frame = pd.DataFrame(rows, columns=list(EDA_METRICS), dtype=float)
        frame['label'] = corpus.labels
        frame[['chars', 'words']] = frame[['chars', 'words']].astype(int)

        histograms: Dict[int, Dict[str, Tuple[np.ndarray, np.ndarray]]] = {}
        for metric in EDA_METRICS:
            values = frame[metric].to_numpy(dtype=float)
            if len(values) == 0:
                edges = np.array([0.0, 1.0])
            else:
                low, high = float(values.min()), float(values.max())
                # Intervalo degenerado quando todos os valores são iguais
                edges = np.linspace(low, high if high > low else low + 1.0, bins + 1)
            for label in LABELS:
                subset = values[frame['label'].to_numpy() == label]
                counts, _ = np.histogram(subset, bins=edges)
                histograms.setdefault(label, {})[metric] = (counts, edges)

        summary = frame.groupby('label')[list(EDA_METRICS)].agg(['mean', 'median', 'max'])

        totals = {
            'documents': len(corpus),
            'chars': int(frame['chars'].sum()),
            'words': int(frame['words'].sum()),
            'mean_chars': float(frame['chars'].mean()) if len(frame) else 0.0,
            'mean_words': float(frame['words'].mean()) if len(frame) else 0.0,
        }
        for label, count in corpus.label_counts().items():
            totals[f'label_{label}'] = count
        return EdaReport(frame=frame, histograms=histograms, summary=summary, totals=totals)


# Vocabulário do corpus sintético: palavras neutras, ofensivas (com variantes) e amigáveis
_NEUTRAL_WORDS = (
    'bugün', 'yarın', 'akşam', 'sabah', 'okul', 'maç', 'film', 'kitap', 'hava', 'yemek',
    'çay', 'kahve', 'tatil', 'deniz', 'şehir', 'otobüs', 'ders', 'sınav', 'müzik', 'konser',
    'telefon', 'bilgisayar', 'oyun', 'takım', 'haber', 'gündem', 'hafta', 'pazar', 'araba',
    'yol', 'ev', 'iş', 'toplantı', 'proje', 'video', 'fotoğraf', 'dizi', 'bölüm', 'sezon',
    'yağmur', 'kar', 'güneş', 'park', 'bahçe', 'kedi', 'köpek', 'market', 'alışveriş', 'para',
)
_HARMFUL_WORDS = (
    'salak', 'salaaaak', 'gerizekali', 'qerizekali', 'gerzekalı', 'aptal', 'aptall', 'ahmak',
    'mal', 'dangalak', 'şerefsiz', 'serefsiz', 'pislik', 'öküz', 'okuz', 'hıyar', 'beyinsiz',
    'embesil', 'ezik', 'yavşak',
)
_FRIENDLY_WORDS = (
    'teşekkürler', 'harika', 'güzel', 'sevgiler', 'tebrikler', 'başarılar', 'süper', 'muhteşem',
    'canım', 'iyi', 'mutlu', 'keyifli', 'selamlar', 'hoşgeldin', 'bravo',
)
_NOISE = ('RT', '@kullanici', 'http://t.co/x1', '!!!', '?', '2019', 'www.site.com')


def make_synthetic_corpus(n_per_label: int = 100, seed: int = 0,
                          noise_rate: float = 0.04) -> LabeledCorpus:
    """Gera um corpus balanceado em memória; positivos carregam termos ofensivos"""
    rng = np.random.default_rng(_check_seed(seed))
    docs = []
    for index in range(2 * n_per_label):
        label = index % 2
        words = list(rng.choice(_NEUTRAL_WORDS, size=int(rng.integers(3, 8))))
        flipped = rng.random() < noise_rate
        marked = (label == 1) != flipped
        pool = _HARMFUL_WORDS if marked else _FRIENDLY_WORDS
        for word in rng.choice(pool, size=int(rng.integers(1, 3))):
            words.insert(int(rng.integers(0, len(words) + 1)), str(word))
        if rng.random() < 0.3:
            words.insert(0, str(rng.choice(_NOISE)))
        if rng.random() < 0.3:
            words[0] = words[0].upper()
        docs.append(LabeledDocument(' '.join(str(w) for w in words), label))
    return LabeledCorpus(tuple(docs), 'synthetic')
