"""Tokenization, character n-gram hashing, and vocabulary construction.

Every downstream component (embedding trainer, classifier, topic model,
similarity) shares this module, so all text normalization choices live here:
lowercasing is always on, tokens are maximal runs of alphanumeric characters,
and subword units are character n-grams of a word wrapped in ``<`` / ``>``
boundary markers, hashed into a fixed number of buckets with FNV-1a.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DEFAULT_NGRAM_MIN = 3
DEFAULT_NGRAM_MAX = 6
DEFAULT_BUCKETS = 2_000_000

# Unicode letters and digits, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on any non-alphanumeric character.

    Digits are kept, empty tokens are dropped: ``"Trump's 2016 win!"``
    becomes ``["trump", "s", "2016", "win"]``.
    """
    return _TOKEN_RE.findall(text.lower())


def hash_subword(ngram: str, bucket_count: int) -> int:
    """Map an n-gram to a bucket id in ``[0, bucket_count)``.

    Uses 32-bit FNV-1a over the n-gram's UTF-8 bytes, so the mapping is
    stable across runs, platforms and Python versions.
    """
    if bucket_count <= 0:
        raise ValueError(f"bucket_count must be positive, got {bucket_count}")
    h = _FNV_OFFSET
    for b in ngram.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFF
    return h % bucket_count


@dataclass(frozen=True)
class SubwordSet:
    """The distinct subword units of one word and their hash bucket ids.

    ``bucket_ids`` is parallel to ``ngrams``; ids live in
    ``[vocab_size, vocab_size + bucket_count)`` for the ``vocab_size``
    passed to :func:`subwords`. Distinct n-grams may collide into the
    same bucket.
    """

    ngrams: tuple[str, ...]
    bucket_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.ngrams)


def subwords(
    word: str,
    ngram_min: int = DEFAULT_NGRAM_MIN,
    ngram_max: int = DEFAULT_NGRAM_MAX,
    use_boundaries: bool = True,
    bucket_count: int = DEFAULT_BUCKETS,
    vocab_size: int = 0,
) -> SubwordSet:
    """Extract the character n-grams of ``word`` for every length in
    ``[ngram_min, ngram_max]``.

    With ``use_boundaries`` the word is wrapped as ``<word>`` before
    extraction and the wrapped whole word is appended as one extra unit,
    so even words shorter than ``ngram_min`` get at least one unit.
    Duplicate n-grams are kept once, in first-occurrence order.
    """
    if not word:
        raise ValueError("word must be non-empty")
    if ngram_min > ngram_max:
        raise ValueError(f"ngram_min={ngram_min} exceeds ngram_max={ngram_max}")
    if ngram_min < 1:
        raise ValueError(f"ngram_min must be >= 1, got {ngram_min}")
    base = f"<{word}>" if use_boundaries else word
    grams: list[str] = []
    for n in range(ngram_min, ngram_max + 1):
        for i in range(len(base) - n + 1):
            grams.append(base[i : i + n])
    if use_boundaries:
        grams.append(base)
    unique = tuple(dict.fromkeys(grams))
    ids = np.fromiter(
        (vocab_size + hash_subword(g, bucket_count) for g in unique),
        dtype=np.int32,
        count=len(unique),
    )
    return SubwordSet(ngrams=unique, bucket_ids=ids)


@dataclass
class Vocabulary:
    """Retained words of a corpus plus the subword hashing configuration.

    ``words`` is sorted by descending count with lexicographic tie-break,
    and ``word_index`` maps each word to its dense row index in
    ``[0, len(words))``. Subword buckets occupy rows
    ``[len(words), len(words) + bucket_count)`` of an embedding matrix.
    Instances are treated as immutable once built.
    """

    words: list[str]
    counts: dict[str, int]
    word_index: dict[str, int]
    min_count: int
    bucket_count: int
    ngram_min: int
    ngram_max: int
    _unit_cache: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )
    _unit_ids_cache: dict[str, np.ndarray] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_index

    @property
    def total_count(self) -> int:
        return sum(self.counts.values())

    def subword_set(self, word: str) -> SubwordSet:
        return subwords(
            word,
            self.ngram_min,
            self.ngram_max,
            use_boundaries=True,
            bucket_count=self.bucket_count,
            vocab_size=len(self.words),
        )

    def unit_ids(self, word: str) -> np.ndarray:
        """Row indices composing the word's vector: its own row first
        (when in vocabulary), then its subword bucket rows.

        Out-of-vocabulary words get bucket rows only; an empty word has
        no units at all. Results are cached per word (treat the returned
        arrays as read-only); concurrent lookups are safe.
        """
        cached = self._unit_ids_cache.get(word)
        if cached is not None:
            return cached
        if not word:
            ids = np.empty(0, dtype=np.int32)
        else:
            buckets = self.subword_set(word).bucket_ids
            own = self.word_index.get(word)
            if own is None:
                ids = buckets
            else:
                ids = np.concatenate(([np.int32(own)], buckets)).astype(np.int32)
        self._unit_ids_cache[word] = ids
        return ids

    def unit_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened unit ids of all vocabulary words, CSR style.

        Returns ``(unit_idx, unit_off)`` where word ``i`` owns
        ``unit_idx[unit_off[i]:unit_off[i + 1]]``. Cached after the
        first call.
        """
        if self._unit_cache is None:
            parts = [self.unit_ids(w) for w in self.words]
            off = np.zeros(len(self.words) + 1, dtype=np.int64)
            np.cumsum([len(p) for p in parts], out=off[1:])
            flat = (
                np.concatenate(parts).astype(np.int32)
                if parts
                else np.empty(0, dtype=np.int32)
            )
            self._unit_cache = (flat, off)
        return self._unit_cache


def build_vocab(
    tokens: Iterable[str],
    min_count: int = 1,
    bucket_count: int = DEFAULT_BUCKETS,
    ngram_min: int = DEFAULT_NGRAM_MIN,
    ngram_max: int = DEFAULT_NGRAM_MAX,
) -> Vocabulary:
    """Count a flat token stream and keep words seen at least ``min_count``
    times.

    An empty stream yields an empty (but valid) vocabulary.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if ngram_min > ngram_max or ngram_min < 1:
        raise ValueError(f"invalid ngram range [{ngram_min}, {ngram_max}]")
    if bucket_count <= 0:
        raise ValueError(f"bucket_count must be positive, got {bucket_count}")
    counter = Counter(tokens)
    kept = {w: c for w, c in counter.items() if c >= min_count}
    words = sorted(kept, key=lambda w: (-kept[w], w))
    if len(words) + bucket_count > 2**31 - 1:
        raise ValueError("vocabulary plus buckets exceeds int32 row indexing")
    return Vocabulary(
        words=words,
        counts=kept,
        word_index={w: i for i, w in enumerate(words)},
        min_count=min_count,
        bucket_count=bucket_count,
        ngram_min=ngram_min,
        ngram_max=ngram_max,
    )
