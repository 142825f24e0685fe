"""
Normalização de textos de redes sociais em turco: minúsculas com regras
turcas, remoção de ruído, stopwords, colapso de repetições e gírias.
Sem stemming nem lematização.
"""
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Union

import editdistance

from utils.errors import AssetError, ParameterError

logger = logging.getLogger(__name__)

TokenStream = List[str]

_TURKISH_UPPER = {'I': 'ı', 'İ': 'i'}

_URL_PATTERN = re.compile(r'(?:https?://|www\.)\S*')
_MENTION_PATTERN = re.compile(r'@\S+')
_RETWEET_PATTERN = re.compile(r'(?<!\S)rt(?!\S)')
_REPEAT_PATTERN = re.compile(r'(.)\1{2,}', re.DOTALL)


@dataclass(frozen=True)
class NormalizerConfig:
    """Stopwords, léxico de gírias e chaves de cada regra de limpeza"""
    stopwords: FrozenSet[str] = frozenset()
    lexicon: Mapping[str, str] = field(default_factory=dict)
    max_edit_distance: int = 1
    min_fuzzy_length: int = 5
    strip_urls: bool = True
    strip_mentions: bool = True
    strip_retweets: bool = True
    strip_punctuation: bool = True
    strip_digits: bool = True

    def __post_init__(self):
        if self.max_edit_distance < 0:
            raise ParameterError(
                f"max_edit_distance deve ser >= 0, recebido {self.max_edit_distance}")
        # Formas canônicas também são variantes de si mesmas
        lexicon = {turkish_lowercase(k): turkish_lowercase(v) for k, v in self.lexicon.items()}
        for canonical in set(lexicon.values()):
            lexicon.setdefault(canonical, canonical)
        object.__setattr__(self, 'lexicon', lexicon)
        object.__setattr__(self, 'stopwords',
                           frozenset(turkish_lowercase(w) for w in self.stopwords))

    @property
    def canonical_forms(self) -> FrozenSet[str]:
        return frozenset(self.lexicon.values())

    @classmethod
    def from_files(cls, stopwords_path: Optional[Union[str, Path]] = None,
                   lexicon_path: Optional[Union[str, Path]] = None, **options) -> 'NormalizerConfig':
        """Lê stopwords (uma por linha) e léxico (variante<TAB>canônica)"""
        stopwords = frozenset(read_asset_lines(stopwords_path)) if stopwords_path else frozenset()
        lexicon: Dict[str, str] = {}
        if lexicon_path:
            for number, line in enumerate(read_asset_lines(lexicon_path), start=1):
                parts = line.split('\t')
                if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                    raise AssetError(
                        f"Léxico {lexicon_path}: entrada {number} mal formada: {line!r}")
                lexicon[parts[0].strip()] = parts[1].strip()
        logger.info("Normalizador: %d stopwords, %d variantes de gíria",
                    len(stopwords), len(lexicon))
        return cls(stopwords=stopwords, lexicon=lexicon, **options)


def read_asset_lines(path: Union[str, Path]) -> List[str]:
    """Linhas úteis de um arquivo de recurso (ignora vazias e comentários #)"""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except FileNotFoundError as exc:
        raise AssetError(f"Arquivo de recurso não encontrado: {path}") from exc
    except UnicodeDecodeError as exc:
        raise AssetError(f"Arquivo de recurso {path} não está em UTF-8") from exc
    lines = []
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith('#'):
            continue
        lines.append(raw.rstrip('\r\n'))
    return lines


def turkish_lowercase(text: str) -> str:
    """Minúsculas com as regras turcas para I/İ"""
    for upper, lower in _TURKISH_UPPER.items():
        text = text.replace(upper, lower)
    return text.lower()


def _is_symbol(char: str) -> bool:
    return unicodedata.category(char)[0] in ('P', 'S')


def strip_noise(text: str, config: NormalizerConfig) -> str:
    """Remove URLs, menções, marcador RT, pontuação e dígitos"""
    if config.strip_urls:
        text = _URL_PATTERN.sub(' ', text)
    if config.strip_mentions:
        text = _MENTION_PATTERN.sub(' ', text)
    if config.strip_retweets:
        text = _RETWEET_PATTERN.sub(' ', text)
    if config.strip_punctuation:
        text = ''.join(' ' if _is_symbol(ch) else ch for ch in text)
    if config.strip_digits:
        text = ''.join(' ' if ch.isdecimal() else ch for ch in text)
    if config.strip_retweets:
        # "rt:" e "rt2" só ficam isolados depois da limpeza acima
        text = _RETWEET_PATTERN.sub(' ', text)
    return ' '.join(text.split())


def collapse_repeats(token: str) -> str:
    """Sequências de 3+ caracteres iguais viram um só; duplas são mantidas"""
    return _REPEAT_PATTERN.sub(r'\1', token)


def normalize_slang(token: str, config: NormalizerConfig) -> str:
    """Forma canônica da gíria: busca exata e depois Levenshtein limitado"""
    canonical = config.lexicon.get(token)
    if canonical is not None:
        return canonical
    if len(token) < config.min_fuzzy_length or config.max_edit_distance == 0:
        return token

    best = None
    for variant, form in config.lexicon.items():
        if abs(len(variant) - len(token)) > config.max_edit_distance:
            continue
        distance = editdistance.eval(token, variant)
        if distance <= config.max_edit_distance:
            key = (distance, form)
            if best is None or key < best:
                best = key
    return best[1] if best else token


def tokenize_and_filter(text: str, config: NormalizerConfig) -> TokenStream:
    """Divide por espaços e descarta stopwords"""
    return [token for token in text.split() if token and token not in config.stopwords]


def _keep(token: str, config: NormalizerConfig) -> bool:
    # O colapso pode produzir uma stopword ("veee" -> "ve") ou o marcador "rt"
    if not token or token in config.stopwords:
        return False
    return not (config.strip_retweets and token == 'rt')


def normalize_document(text: str, config: NormalizerConfig) -> TokenStream:
    """Pipeline completo de normalização de uma mensagem"""
    text = strip_noise(turkish_lowercase(text), config)
    tokens = []
    for token in tokenize_and_filter(text, config):
        token = normalize_slang(collapse_repeats(token), config)
        if _keep(token, config):
            tokens.append(token)
    return tokens


class TurkishNormalizer:
    """Normalizador com cache de gírias por token"""

    def __init__(self, config: NormalizerConfig):
        self.config = config
        self._slang_cache: Dict[str, str] = {}

    @classmethod
    def from_files(cls, stopwords_path=None, lexicon_path=None, **options) -> 'TurkishNormalizer':
        return cls(NormalizerConfig.from_files(stopwords_path, lexicon_path, **options))

    def _canonical(self, token: str) -> str:
        cached = self._slang_cache.get(token)
        if cached is None:
            cached = normalize_slang(token, self.config)
            self._slang_cache[token] = cached
        return cached

    def normalize(self, text: str) -> TokenStream:
        """Mesmo resultado de normalize_document, com memória das gírias"""
        config = self.config
        text = strip_noise(turkish_lowercase(text), config)
        tokens = []
        for token in tokenize_and_filter(text, config):
            token = self._canonical(collapse_repeats(token))
            if _keep(token, config):
                tokens.append(token)
        return tokens

    def normalize_many(self, texts: Iterable[str]) -> List[TokenStream]:
        return [self.normalize(text) for text in texts]
