"""Biterm topic model for short headline corpora.

Instead of per-document topic mixtures, the model is fit to the corpus-level
set of biterms (unordered within-document word pairs), which sidesteps the
sparsity of very short texts. Inference is collapsed Gibbs sampling over the
biterm topic assignments; the sampler is sequential per model but distinct
corpora fit in parallel safely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import _sgd
from ._stopwords import STOPWORDS, STOPWORDS_VERSION
from .textproc import tokenize

__all__ = [
    "Biterm",
    "BtmModel",
    "TopicSummary",
    "extract_biterms",
    "fit_btm",
    "top_words",
    "BitermTopicModel",
    "STOPWORDS",
    "STOPWORDS_VERSION",
]


@dataclass(frozen=True, slots=True)
class Biterm:
    """Unordered pair of word indices co-occurring in one document,
    stored canonically with ``w1 <= w2``."""

    w1: int
    w2: int

    def __post_init__(self) -> None:
        if self.w1 > self.w2:
            raise ValueError(f"biterm indices must satisfy w1 <= w2, got ({self.w1}, {self.w2})")


def extract_biterms(
    docs: Iterable[Sequence[str]],
    stopwords: Collection[str] | None = None,
) -> tuple[list[Biterm], list[str]]:
    """Emit every unordered pair of distinct remaining token positions per
    document (the whole document is one co-occurrence window).

    Stopwords and words shorter than two characters are removed first.
    Returns the biterms plus the topic vocabulary (sorted), whose indices
    the biterms refer to.
    """
    stop = frozenset(stopwords) if stopwords is not None else frozenset()
    filtered_docs: list[list[str]] = []
    vocab_set: set[str] = set()
    for doc in docs:
        kept = [w for w in doc if len(w) >= 2 and w not in stop]
        filtered_docs.append(kept)
        vocab_set.update(kept)
    vocab = sorted(vocab_set)
    index = {w: i for i, w in enumerate(vocab)}
    biterms: list[Biterm] = []
    for kept in filtered_docs:
        ids = [index[w] for w in kept]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                a, b = ids[i], ids[j]
                if a > b:
                    a, b = b, a
                biterms.append(Biterm(a, b))
    return biterms, vocab


@dataclass
class BtmModel:
    """Fitted sampler state: per-topic biterm counts ``n_z`` and
    topic-by-word occurrence counts ``n_wz`` (each biterm contributes two
    word occurrences)."""

    n_topics: int
    alpha: float
    beta: float
    n_z: np.ndarray
    n_wz: np.ndarray
    vocab: list[str]
    iterations: int
    seed: int

    def phi(self) -> np.ndarray:
        """Per-topic word distributions
        ``(n_wz + beta) / (2 n_z + V beta)``; each row sums to 1."""
        v = len(self.vocab)
        denom = 2.0 * self.n_z.astype(np.float64) + v * self.beta
        return (self.n_wz.astype(np.float64) + self.beta) / denom[:, None]


@dataclass(frozen=True)
class TopicSummary:
    """Ranked ``(word, probability)`` lists, one per topic."""

    topics: tuple[tuple[tuple[str, float], ...], ...]


def fit_btm(
    biterms: Sequence[Biterm],
    vocab: Sequence[str],
    n_topics: int = 5,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 1,
    on_sweep=None,
) -> BtmModel:
    """Collapsed Gibbs sampling over biterm topic assignments.

    ``alpha`` defaults to ``50 / n_topics``. Each sweep resamples every
    biterm's topic conditioned on the remaining assignments; ``on_sweep``
    (if given) is called with the model after every sweep, which tests use
    to check count invariants. Fixed seeds give bitwise-identical models.
    """
    if n_topics < 2:
        raise ValueError(f"n_topics must be >= 2, got {n_topics}")
    if len(biterms) == 0:
        raise ValueError("cannot fit a topic model on an empty biterm set")
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    v = len(vocab)
    w1 = np.array([b.w1 for b in biterms], dtype=np.int32)
    w2 = np.array([b.w2 for b in biterms], dtype=np.int32)
    if w1.min() < 0 or w2.max() >= v:
        raise ValueError("biterm indices fall outside the vocabulary")
    z = np.random.default_rng(seed).integers(0, n_topics, size=len(biterms)).astype(np.int32)
    n_z = np.bincount(z, minlength=n_topics).astype(np.int64)
    n_wz = np.zeros((n_topics, v), dtype=np.int64)
    np.add.at(n_wz, (z, w1), 1)
    np.add.at(n_wz, (z, w2), 1)
    model = BtmModel(
        n_topics=n_topics,
        alpha=float(alpha),
        beta=float(beta),
        n_z=n_z,
        n_wz=n_wz,
        vocab=list(vocab),
        iterations=iterations,
        seed=seed,
    )
    for sweep in range(iterations):
        _sgd.btm_sweep(z, w1, w2, n_z, n_wz, alpha, beta, seed + 1 + sweep)
        if on_sweep is not None:
            on_sweep(model)
    return model


def top_words(model: BtmModel, n: int = 10) -> TopicSummary:
    """The ``n`` highest-probability words of each topic, ties broken
    lexicographically; truncated when the vocabulary is smaller than
    ``n``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    phi = model.phi()
    n = min(n, len(model.vocab))
    topics = []
    for k in range(model.n_topics):
        ranked = sorted(
            zip(model.vocab, phi[k]), key=lambda pair: (-pair[1], pair[0])
        )
        topics.append(tuple((w, float(p)) for w, p in ranked[:n]))
    return TopicSummary(topics=tuple(topics))


class BitermTopicModel(BaseEstimator):
    """Sklearn-style wrapper: ``fit`` on an iterable of texts or token
    lists, then read ``topic_words``.

    ``stopwords="english"`` selects the shipped versioned list; pass a
    collection for a custom list or ``None`` to keep all words.
    """

    def __init__(
        self,
        n_topics: int = 5,
        alpha: float | None = None,
        beta: float = 0.01,
        iterations: int = 1000,
        seed: int = 1,
        stopwords="english",
    ):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.seed = seed
        self.stopwords = stopwords

    def fit(self, X: Iterable, y=None) -> "BitermTopicModel":
        docs = [tokenize(x) if isinstance(x, str) else list(x) for x in X]
        if self.stopwords == "english":
            stop = STOPWORDS
        else:
            stop = self.stopwords
        biterms, vocab = extract_biterms(docs, stopwords=stop)
        self.model_ = fit_btm(
            biterms,
            vocab,
            n_topics=self.n_topics,
            alpha=self.alpha,
            beta=self.beta,
            iterations=self.iterations,
            seed=self.seed,
        )
        self.vocabulary_ = vocab
        return self

    def topic_words(self, n: int = 10) -> TopicSummary:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("BitermTopicModel is not fitted; call fit first")
        return top_words(model, n)
