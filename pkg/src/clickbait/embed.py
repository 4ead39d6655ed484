"""Subword skip-gram embedding training and vector composition.

The trainer maximizes the skip-gram objective through its negative-sampling
surrogate: for every (center, context) pair drawn from a sentence, the
composed center vector (sum of the center word's unit rows) is scored
against the true context row and against noise rows sampled from the
unigram^0.75 distribution. A word's vector is always the sum of its unit
rows, so out-of-vocabulary words still receive vectors through their
subword buckets.
"""

from __future__ import annotations

import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import _sgd
from .textproc import (
    DEFAULT_BUCKETS,
    DEFAULT_NGRAM_MAX,
    DEFAULT_NGRAM_MIN,
    Vocabulary,
    build_vocab,
    tokenize,
)

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"CBEM1"


class TrainingDivergedError(RuntimeError):
    """Raised when training produces non-finite parameters."""


@dataclass(frozen=True)
class EmbeddingConfig:
    """Hyperparameters of the skip-gram trainer.

    ``initial_lr`` decays linearly to zero over all planned token scans;
    ``subsample`` is the frequent-word downsampling threshold (0 disables
    it); determinism is guaranteed only with ``workers=1``.
    """

    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.05
    subsample: float = 1e-4
    seed: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.subsample < 0:
            raise ValueError(f"subsample must be >= 0, got {self.subsample}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class EmbeddingModel:
    """Trained embedding table.

    ``input_matrix`` holds one row per vocabulary word followed by one row
    per subword bucket (``len(vocab) + bucket_count`` rows); ``output_matrix``
    holds the context rows used only during training. Frozen after training:
    concurrent reads are safe.
    """

    vocab: Vocabulary
    input_matrix: np.ndarray
    output_matrix: np.ndarray
    config: EmbeddingConfig
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.input_matrix.shape[1])


@dataclass(frozen=True)
class PretrainedVectors:
    """Word vectors loaded from the text format (no subword rows)."""

    words: list[str]
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])


def init_model(
    vocab: Vocabulary, config: EmbeddingConfig | None = None
) -> EmbeddingModel:
    """Allocate a model: input rows uniform in [-1/dim, 1/dim), output rows
    zero, so every initial pair score sits at sigmoid(0) = 0.5."""
    config = config or EmbeddingConfig()
    rows = len(vocab) + vocab.bucket_count
    inp = np.empty((rows, config.dim), dtype=np.float32)
    _sgd.fill_uniform(inp, 1.0 / config.dim, config.seed)
    out = np.zeros((len(vocab), config.dim), dtype=np.float32)
    return EmbeddingModel(vocab=vocab, input_matrix=inp, output_matrix=out, config=config)


def subsample_keep_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Per-word keep probability ``min(1, sqrt(t/f) + t/f)`` with
    ``f = count / total``; words at or below the threshold frequency are
    always kept."""
    probs = np.ones(len(vocab), dtype=np.float64)
    if threshold <= 0 or len(vocab) == 0:
        return probs
    total = float(vocab.total_count)
    for i, w in enumerate(vocab.words):
        f = vocab.counts[w] / total
        if f > threshold:
            probs[i] = min(1.0, math.sqrt(threshold / f) + threshold / f)
    return probs


def _noise_cumulative(vocab: Vocabulary) -> np.ndarray:
    counts = np.array([vocab.counts[w] for w in vocab.words], dtype=np.float64)
    return np.cumsum(counts**0.75)


def encode_corpus(
    sentences: Sequence[Sequence[str]], vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """Map token sentences to vocabulary ids (OOV tokens dropped),
    flattened CSR style."""
    ids: list[np.ndarray] = []
    for sent in sentences:
        arr = np.fromiter(
            (vocab.word_index[t] for t in sent if t in vocab.word_index),
            dtype=np.int32,
        )
        ids.append(arr)
    off = np.zeros(len(ids) + 1, dtype=np.int64)
    np.cumsum([len(a) for a in ids], out=off[1:])
    flat = np.concatenate(ids).astype(np.int32) if ids else np.empty(0, dtype=np.int32)
    return flat, off


def _as_token_sentences(corpus: Iterable) -> list[list[str]]:
    sentences = []
    for item in corpus:
        if isinstance(item, str):
            sentences.append(tokenize(item))
        else:
            sentences.append(list(item))
    return sentences


def train_embeddings(
    corpus: Iterable,
    config: EmbeddingConfig | None = None,
    min_count: int = 5,
    bucket_count: int = DEFAULT_BUCKETS,
    ngram_min: int = DEFAULT_NGRAM_MIN,
    ngram_max: int = DEFAULT_NGRAM_MAX,
) -> EmbeddingModel:
    """Train subword skip-gram embeddings on a stream of token sequences
    (raw strings are tokenized).

    The per-epoch mean surrogate loss is recorded in
    ``model.epoch_losses``. Raises :class:`ValueError` on an empty corpus
    and :class:`TrainingDivergedError` if parameters go non-finite.
    """
    config = config or EmbeddingConfig()
    sentences = _as_token_sentences(corpus)
    total_tokens = sum(len(s) for s in sentences)
    if total_tokens == 0:
        raise ValueError("corpus is empty; nothing to train on")
    vocab = build_vocab(
        (t for s in sentences for t in s),
        min_count=min_count,
        bucket_count=bucket_count,
        ngram_min=ngram_min,
        ngram_max=ngram_max,
    )
    if len(vocab) == 0:
        raise ValueError(f"no word meets min_count={min_count}; vocabulary is empty")
    model = init_model(vocab, config)
    if config.epochs == 0:
        return model
    flat, off = encode_corpus(sentences, vocab)
    kept_tokens = int(off[-1])
    if kept_tokens == 0:
        raise ValueError("corpus is empty after vocabulary filtering")
    unit_idx, unit_off = vocab.unit_table()
    neg_cum = _noise_cumulative(vocab)
    keep_prob = subsample_keep_probabilities(vocab, config.subsample)
    total_planned = np.int64(config.epochs) * np.int64(kept_tokens)
    processed = np.int64(0)
    for epoch in range(config.epochs):
        if config.workers == 1:
            done, loss_sum, loss_terms = _sgd.sg_epoch_serial(
                model.input_matrix,
                model.output_matrix,
                flat,
                off,
                unit_idx,
                unit_off,
                neg_cum,
                keep_prob,
                config.window,
                config.negatives,
                config.initial_lr,
                total_planned,
                processed,
                config.seed + epoch,
            )
        else:
            done, loss_sum, loss_terms = _sgd.sg_epoch_parallel(
                model.input_matrix,
                model.output_matrix,
                flat,
                off,
                unit_idx,
                unit_off,
                neg_cum,
                keep_prob,
                config.window,
                config.negatives,
                config.initial_lr,
                total_planned,
                processed,
                config.seed + epoch * config.workers,
                config.workers,
            )
        processed += done
        mean_loss = loss_sum / max(loss_terms, 1)
        model.epoch_losses.append(float(mean_loss))
        logger.info("epoch %d/%d: mean pair loss %.6f", epoch + 1, config.epochs, mean_loss)
        if not math.isfinite(mean_loss):
            raise TrainingDivergedError(
                "training loss is not finite; lower initial_lr and retry"
            )
    if not np.isfinite(model.output_matrix).all() or not np.isfinite(
        model.input_matrix
    ).all():
        raise TrainingDivergedError(
            "model parameters are not finite; lower initial_lr and retry"
        )
    return model


def word_vector(model: EmbeddingModel, word: str) -> np.ndarray:
    """Compose the word's vector as the sum of its unit rows (own row when
    in vocabulary, plus subword bucket rows).

    A word with no units (only possible for the empty string) yields a zero
    vector and a warning.
    """
    units = model.vocab.unit_ids(word)
    if len(units) == 0:
        warnings.warn(
            f"word {word!r} has no subwords and is out of vocabulary; "
            "returning a zero vector",
            stacklevel=2,
        )
        return np.zeros(model.dim, dtype=np.float32)
    return _sgd.compose_rows(model.input_matrix, units)


def sentence_vector(model: EmbeddingModel, tokens: Sequence[str]) -> np.ndarray:
    """Arithmetic mean of the tokens' word vectors; zero vector for an
    empty token list."""
    if len(tokens) == 0:
        return np.zeros(model.dim, dtype=np.float32)
    acc = np.zeros(model.dim, dtype=np.float32)
    for tok in tokens:
        acc += word_vector(model, tok)
    return acc / np.float32(len(tokens))


def export_vectors(model: EmbeddingModel, path: str) -> None:
    """Write composed word vectors in the text format: a ``count dim``
    header, then one ``word v1 ... vd`` line per vocabulary word."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.vocab)} {model.dim}\n")
        for word in model.vocab.words:
            vec = word_vector(model, word)
            fh.write(word + " " + " ".join(f"{x:.6g}" for x in vec) + "\n")


def load_vectors(path: str) -> PretrainedVectors:
    """Read text-format vectors back; inverse of :func:`export_vectors` up
    to 6 significant digits."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected 'count dim' header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ValueError(f"{path}:1: bad header {header!r}") from exc
        words: list[str] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path}:{lineno}: expected word plus {dim} values, "
                    f"got {len(parts) - 1}"
                )
            word = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric vector entry") from exc
            if word in seen:
                warnings.warn(f"{path}:{lineno}: duplicate word {word!r}; keeping first")
                continue
            seen.add(word)
            words.append(word)
            rows.append(vec)
    if len(words) != count:
        raise ValueError(
            f"{path}: header declares {count} vectors but file has {len(words)}"
        )
    matrix = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    return PretrainedVectors(words=words, matrix=matrix.astype(np.float32))


def _write_payload(fh, model: EmbeddingModel) -> None:
    vocab = model.vocab
    fh.write(MODEL_MAGIC)
    fh.write(
        struct.pack(
            "<IQQII",
            model.dim,
            len(vocab),
            vocab.bucket_count,
            vocab.ngram_min,
            vocab.ngram_max,
        )
    )
    for word in vocab.words:
        data = word.encode("utf-8")
        fh.write(struct.pack("<I", len(data)))
        fh.write(data)
        fh.write(struct.pack("<Q", vocab.counts[word]))
    fh.write(np.ascontiguousarray(model.input_matrix, dtype=np.float32).tobytes())
    fh.write(np.ascontiguousarray(model.output_matrix, dtype=np.float32).tobytes())


def _read_payload(fh) -> EmbeddingModel:
    magic = fh.read(len(MODEL_MAGIC))
    if magic != MODEL_MAGIC:
        raise ValueError(f"bad model magic {magic!r}; expected {MODEL_MAGIC!r}")
    dim, v_size, buckets, nmin, nmax = struct.unpack("<IQQII", fh.read(28))
    words: list[str] = []
    counts: dict[str, int] = {}
    for _ in range(v_size):
        (wlen,) = struct.unpack("<I", fh.read(4))
        word = fh.read(wlen).decode("utf-8")
        (count,) = struct.unpack("<Q", fh.read(8))
        words.append(word)
        counts[word] = count
    vocab = Vocabulary(
        words=words,
        counts=counts,
        word_index={w: i for i, w in enumerate(words)},
        min_count=min(counts.values()) if counts else 1,
        bucket_count=int(buckets),
        ngram_min=int(nmin),
        ngram_max=int(nmax),
    )
    rows = v_size + buckets
    inp = np.frombuffer(fh.read(rows * dim * 4), dtype="<f4").reshape(rows, dim).copy()
    out = np.frombuffer(fh.read(v_size * dim * 4), dtype="<f4").reshape(v_size, dim).copy()
    return EmbeddingModel(
        vocab=vocab,
        input_matrix=inp,
        output_matrix=out,
        config=EmbeddingConfig(dim=int(dim)),
    )


def save_model(model: EmbeddingModel, path: str) -> None:
    """Write the binary model format (magic ``CBEM1``, little endian)."""
    with open(path, "wb") as fh:
        _write_payload(fh, model)


def load_model(path: str) -> EmbeddingModel:
    with open(path, "rb") as fh:
        return _read_payload(fh)


def pair_loss(center_rows: np.ndarray, pos_row: np.ndarray, neg_rows: np.ndarray) -> float:
    """Negative-sampling surrogate loss of one (center, context) pair.

    ``center_rows`` are the center word's unit rows (their sum is the
    composed vector), ``pos_row`` the context's output row, ``neg_rows``
    the sampled noise output rows. Float64 reference implementation used
    for gradient checking.
    """
    u = np.asarray(center_rows, dtype=np.float64).sum(axis=0)
    pos = np.asarray(pos_row, dtype=np.float64)
    negs = np.asarray(neg_rows, dtype=np.float64)
    loss = float(np.logaddexp(0.0, -u @ pos))
    for neg in negs:
        loss += float(np.logaddexp(0.0, u @ neg))
    return loss


def pair_gradients(
    center_rows: np.ndarray, pos_row: np.ndarray, neg_rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`pair_loss`.

    Returns ``(g_center, g_pos, g_negs)`` where ``g_center`` applies
    identically to every center unit row (the loss depends on their sum).
    """
    u = np.asarray(center_rows, dtype=np.float64).sum(axis=0)
    pos = np.asarray(pos_row, dtype=np.float64)
    negs = np.asarray(neg_rows, dtype=np.float64)

    def sigmoid(x: float) -> float:
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)

    f_pos = sigmoid(float(u @ pos))
    g_center = -(1.0 - f_pos) * pos
    g_pos = -(1.0 - f_pos) * u
    g_negs = np.empty_like(negs)
    for i, neg in enumerate(negs):
        f_neg = sigmoid(float(u @ neg))
        g_center = g_center + f_neg * neg
        g_negs[i] = f_neg * u
    return g_center, g_pos, g_negs


class SubwordEmbedding(BaseEstimator, TransformerMixin):
    """Sklearn-style wrapper around :func:`train_embeddings`.

    ``fit`` trains on an iterable of texts or token lists; ``transform``
    maps texts to their sentence vectors, so the estimator slots into
    sklearn pipelines as a vectorizer.
    """

    def __init__(
        self,
        dim: int = 300,
        window: int = 5,
        negatives: int = 5,
        epochs: int = 5,
        initial_lr: float = 0.05,
        subsample: float = 1e-4,
        min_count: int = 5,
        bucket_count: int = DEFAULT_BUCKETS,
        ngram_min: int = DEFAULT_NGRAM_MIN,
        ngram_max: int = DEFAULT_NGRAM_MAX,
        seed: int = 1,
        workers: int = 1,
    ):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.initial_lr = initial_lr
        self.subsample = subsample
        self.min_count = min_count
        self.bucket_count = bucket_count
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.seed = seed
        self.workers = workers

    def fit(self, X: Iterable, y=None) -> "SubwordEmbedding":
        config = EmbeddingConfig(
            dim=self.dim,
            window=self.window,
            negatives=self.negatives,
            epochs=self.epochs,
            initial_lr=self.initial_lr,
            subsample=self.subsample,
            seed=self.seed,
            workers=self.workers,
        )
        self.model_ = train_embeddings(
            X,
            config,
            min_count=self.min_count,
            bucket_count=self.bucket_count,
            ngram_min=self.ngram_min,
            ngram_max=self.ngram_max,
        )
        return self

    def _check_fitted(self) -> EmbeddingModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("SubwordEmbedding is not fitted; call fit first")
        return model

    def transform(self, X: Iterable) -> np.ndarray:
        model = self._check_fitted()
        rows = [
            sentence_vector(model, tokenize(x) if isinstance(x, str) else list(x))
            for x in X
        ]
        if not rows:
            return np.empty((0, model.dim), dtype=np.float32)
        return np.vstack(rows)

    def word_vector(self, word: str) -> np.ndarray:
        return word_vector(self._check_fitted(), word)

    def sentence_vector(self, text: str) -> np.ndarray:
        return sentence_vector(self._check_fitted(), tokenize(text))
