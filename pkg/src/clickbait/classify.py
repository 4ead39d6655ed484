"""Supervised clickbait classifier: bag-of-embeddings softmax.

Each headline is embedded as the mean of its words' composed vectors and
scored by a 2-row output weight matrix through a softmax. Training runs
stochastic gradient descent on the softmax cross-entropy, fine-tuning the
embedding rows unless frozen. Models can start from scratch, from a trained
:class:`~clickbait.embed.EmbeddingModel`, or from text-format pre-trained
vectors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import _sgd
from .corpus import CLICKBAIT, LABELS, NON_CLICKBAIT, LabeledHeadline
from .embed import (
    EmbeddingConfig,
    EmbeddingModel,
    PretrainedVectors,
    TrainingDivergedError,
    _read_payload,
    _write_payload,
    init_model,
    sentence_vector,
)
from .textproc import (
    DEFAULT_BUCKETS,
    DEFAULT_NGRAM_MAX,
    DEFAULT_NGRAM_MIN,
    Vocabulary,
    build_vocab,
    tokenize,
)

CLASSIFIER_MAGIC = b"CBCL1"


@dataclass(frozen=True)
class ClassifierConfig:
    """Supervised training hyperparameters.

    The vocabulary fields (``dim`` through ``ngram_max``) only apply when
    training from scratch; an embedding-model initializer brings its own.
    ``initial_lr`` decays linearly to zero over all planned example visits.
    """

    epochs: int = 5
    initial_lr: float = 0.1
    seed: int = 1
    workers: int = 1
    freeze_embeddings: bool = False
    dim: int = 300
    min_count: int = 1
    bucket_count: int = DEFAULT_BUCKETS
    ngram_min: int = DEFAULT_NGRAM_MIN
    ngram_max: int = DEFAULT_NGRAM_MAX

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass
class ClassifierModel:
    """Embedding model (fine-tuned during supervised training) plus the
    softmax output weights. Immutable after training; safe for concurrent
    prediction."""

    embedding: EmbeddingModel
    output_weights: np.ndarray
    labels: tuple[str, str]
    train_config: ClassifierConfig

    @property
    def dim(self) -> int:
        return int(self.output_weights.shape[1])


@dataclass(frozen=True)
class Prediction:
    """Predicted label with the class probability distribution, ordered
    (non_clickbait, clickbait). Ties resolve to non_clickbait."""

    label: str
    probabilities: tuple[float, float]

    @property
    def p_clickbait(self) -> float:
        return self.probabilities[1]


def softmax2(z0: float, z1: float) -> tuple[float, float]:
    """Numerically stable two-class softmax."""
    m = max(z0, z1)
    e0 = np.exp(z0 - m)
    e1 = np.exp(z1 - m)
    total = e0 + e1
    return float(e0 / total), float(e1 / total)


def _embedding_from_vectors(
    vectors: PretrainedVectors, config: ClassifierConfig
) -> EmbeddingModel:
    """Build an embedding model whose composed word vectors exactly equal
    the loaded ones: own rows hold the vectors, subword bucket rows start
    at zero and only move during fine-tuning."""
    if vectors.dim != config.dim:
        raise ValueError(
            f"pre-trained vectors have dim={vectors.dim} but the pipeline "
            f"expects dim={config.dim}"
        )
    vocab = build_vocab(
        vectors.words,
        min_count=1,
        bucket_count=config.bucket_count,
        ngram_min=config.ngram_min,
        ngram_max=config.ngram_max,
    )
    rows = len(vocab) + vocab.bucket_count
    inp = np.zeros((rows, config.dim), dtype=np.float32)
    for word, vec in zip(vectors.words, vectors.matrix):
        inp[vocab.word_index[word]] = vec
    out = np.zeros((len(vocab), config.dim), dtype=np.float32)
    return EmbeddingModel(
        vocab=vocab,
        input_matrix=inp,
        output_matrix=out,
        config=EmbeddingConfig(dim=config.dim, seed=config.seed),
    )


def _copy_embedding(model: EmbeddingModel) -> EmbeddingModel:
    return EmbeddingModel(
        vocab=model.vocab,
        input_matrix=model.input_matrix.copy(),
        output_matrix=model.output_matrix.copy(),
        config=model.config,
    )


def encode_examples(
    texts: Sequence[str], vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten each text's unit rows (all tokens' units concatenated,
    duplicates kept) plus the per-text token count."""
    parts: list[np.ndarray] = []
    nwords = np.zeros(len(texts), dtype=np.int32)
    offsets = np.zeros(len(texts) + 1, dtype=np.int64)
    for i, text in enumerate(texts):
        tokens = tokenize(text)
        nwords[i] = len(tokens)
        units = (
            np.concatenate([vocab.unit_ids(t) for t in tokens])
            if tokens
            else np.empty(0, dtype=np.int32)
        )
        parts.append(units.astype(np.int32))
        offsets[i + 1] = offsets[i] + len(units)
    flat = np.concatenate(parts).astype(np.int32) if parts else np.empty(0, np.int32)
    return flat, offsets, nwords


def train_classifier(
    data: Sequence[LabeledHeadline],
    init: EmbeddingModel | PretrainedVectors | None = None,
    config: ClassifierConfig | None = None,
) -> ClassifierModel:
    """Fit the softmax classifier by SGD over (sentence vector, label)
    pairs.

    ``init`` may be a trained embedding model (vocabulary and matrices are
    copied, then fine-tuned) or loaded text vectors; with no initializer the
    vocabulary is built from the training texts and embedding rows start at
    the uniform initialization. Requires both classes in ``data``.
    """
    config = config or ClassifierConfig()
    labels_present = {rec.label for rec in data}
    if labels_present != set(LABELS):
        raise ValueError(
            f"training data must contain both classes {LABELS}, got {sorted(labels_present)}"
        )
    if init is None:
        vocab = build_vocab(
            (t for rec in data for t in tokenize(rec.text)),
            min_count=config.min_count,
            bucket_count=config.bucket_count,
            ngram_min=config.ngram_min,
            ngram_max=config.ngram_max,
        )
        embedding = init_model(
            vocab, EmbeddingConfig(dim=config.dim, seed=config.seed)
        )
    elif isinstance(init, PretrainedVectors):
        embedding = _embedding_from_vectors(init, config)
    elif isinstance(init, EmbeddingModel):
        embedding = _copy_embedding(init)
    else:
        raise TypeError(f"unsupported initializer type {type(init).__name__}")

    weights = np.zeros((2, embedding.dim), dtype=np.float32)
    model = ClassifierModel(
        embedding=embedding,
        output_weights=weights,
        labels=LABELS,
        train_config=config,
    )
    if config.epochs == 0 or not data:
        return model

    flat, offsets, nwords = encode_examples([rec.text for rec in data], embedding.vocab)
    y = np.array([1 if rec.label == CLICKBAIT else 0 for rec in data], dtype=np.int8)
    n = len(data)
    total_planned = np.int64(config.epochs) * np.int64(n)
    # Epoch shuffles come from numpy's legacy RNG so runs are reproducible
    # independent of the kernel's internal sampling.
    shuffler = np.random.RandomState(config.seed)
    processed = np.int64(0)
    epoch_losses: list[float] = []
    for _ in range(config.epochs):
        order = shuffler.permutation(n).astype(np.int64)
        if config.workers == 1:
            seen, loss_sum = _sgd.clf_epoch_serial(
                embedding.input_matrix,
                weights,
                flat,
                offsets,
                nwords,
                y,
                order,
                config.initial_lr,
                total_planned,
                processed,
                config.freeze_embeddings,
            )
        else:
            seen, loss_sum = _sgd.clf_epoch_parallel(
                embedding.input_matrix,
                weights,
                flat,
                offsets,
                nwords,
                y,
                order,
                config.initial_lr,
                total_planned,
                processed,
                config.freeze_embeddings,
                config.workers,
            )
        processed += seen
        epoch_losses.append(float(loss_sum / max(n, 1)))
    model.embedding.epoch_losses = epoch_losses
    if not np.isfinite(weights).all():
        raise TrainingDivergedError(
            "classifier weights are not finite; lower initial_lr and retry"
        )
    return model


def predict(model: ClassifierModel, text: str) -> Prediction:
    """Deterministic label and probability distribution for one text."""
    tokens = tokenize(text)
    s = sentence_vector(model.embedding, tokens)
    z0 = float(model.output_weights[0] @ s)
    z1 = float(model.output_weights[1] @ s)
    p0, p1 = softmax2(z0, z1)
    label = CLICKBAIT if p1 > p0 else NON_CLICKBAIT
    return Prediction(label=label, probabilities=(p0, p1))


def predict_batch(model: ClassifierModel, texts: Iterable[str]) -> list[Prediction]:
    """Element-wise :func:`predict` over a batch, order preserved."""
    return [predict(model, text) for text in texts]


def save_classifier(model: ClassifierModel, path: str) -> None:
    """Write the classifier format: magic ``CBCL1``, the embedded ``CBEM1``
    payload, output weights, then the label list."""
    with open(path, "wb") as fh:
        fh.write(CLASSIFIER_MAGIC)
        _write_payload(fh, model.embedding)
        fh.write(
            np.ascontiguousarray(model.output_weights, dtype=np.float32).tobytes()
        )
        fh.write(struct.pack("<I", len(model.labels)))
        for label in model.labels:
            data = label.encode("utf-8")
            fh.write(struct.pack("<I", len(data)))
            fh.write(data)


def load_classifier(path: str) -> ClassifierModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(CLASSIFIER_MAGIC))
        if magic != CLASSIFIER_MAGIC:
            raise ValueError(f"bad classifier magic {magic!r}")
        embedding = _read_payload(fh)
        weights = (
            np.frombuffer(fh.read(2 * embedding.dim * 4), dtype="<f4")
            .reshape(2, embedding.dim)
            .copy()
        )
        (n_labels,) = struct.unpack("<I", fh.read(4))
        labels = []
        for _ in range(n_labels):
            (length,) = struct.unpack("<I", fh.read(4))
            labels.append(fh.read(length).decode("utf-8"))
    return ClassifierModel(
        embedding=embedding,
        output_weights=weights,
        labels=tuple(labels),
        train_config=ClassifierConfig(dim=embedding.dim),
    )


def softmax_cross_entropy(weights: np.ndarray, sentence: np.ndarray, y: int) -> float:
    """Cross-entropy of the true class under softmax(weights @ sentence);
    float64 reference used for gradient checking."""
    w = np.asarray(weights, dtype=np.float64)
    s = np.asarray(sentence, dtype=np.float64)
    z = w @ s
    m = z.max()
    log_norm = m + np.log(np.exp(z - m).sum())
    return float(log_norm - z[y])


def softmax_cross_entropy_grad(
    weights: np.ndarray, sentence: np.ndarray, y: int
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`softmax_cross_entropy` with respect to
    the weights and the sentence vector."""
    w = np.asarray(weights, dtype=np.float64)
    s = np.asarray(sentence, dtype=np.float64)
    z = w @ s
    m = z.max()
    e = np.exp(z - m)
    p = e / e.sum()
    delta = p.copy()
    delta[y] -= 1.0
    return np.outer(delta, s), w.T @ delta


class ClickbaitClassifier(BaseEstimator, ClassifierMixin):
    """Sklearn-style estimator over :func:`train_classifier` /
    :func:`predict`.

    ``y`` may use 0/1 (1 = clickbait) or the literal class names; ``predict``
    answers in the same style. ``pretrained`` accepts a
    :class:`~clickbait.embed.PretrainedVectors`, an
    :class:`~clickbait.embed.EmbeddingModel`, or a path to either format.
    """

    def __init__(
        self,
        dim: int = 300,
        epochs: int = 5,
        initial_lr: float = 0.1,
        min_count: int = 1,
        bucket_count: int = DEFAULT_BUCKETS,
        ngram_min: int = DEFAULT_NGRAM_MIN,
        ngram_max: int = DEFAULT_NGRAM_MAX,
        freeze_embeddings: bool = False,
        pretrained=None,
        seed: int = 1,
        workers: int = 1,
    ):
        self.dim = dim
        self.epochs = epochs
        self.initial_lr = initial_lr
        self.min_count = min_count
        self.bucket_count = bucket_count
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.freeze_embeddings = freeze_embeddings
        self.pretrained = pretrained
        self.seed = seed
        self.workers = workers

    def _canonical(self, value) -> str:
        if value in (0, 1):
            return LABELS[int(value)]
        if value in LABELS:
            return str(value)
        raise ValueError(f"label {value!r} is not 0/1 or one of {LABELS}")

    def _resolve_init(self):
        from .embed import load_model, load_vectors

        if self.pretrained is None:
            return None
        if isinstance(self.pretrained, (EmbeddingModel, PretrainedVectors)):
            return self.pretrained
        with open(self.pretrained, "rb") as fh:
            magic = fh.read(5)
        if magic == b"CBEM1":
            return load_model(self.pretrained)
        return load_vectors(self.pretrained)

    def fit(self, X: Sequence[str], y: Sequence) -> "ClickbaitClassifier":
        y = list(y)
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} texts but y has {len(y)} labels")
        self._int_labels = all(v in (0, 1) for v in y)
        records = [
            LabeledHeadline(text=text, label=self._canonical(label))
            for text, label in zip(X, y)
        ]
        config = ClassifierConfig(
            epochs=self.epochs,
            initial_lr=self.initial_lr,
            seed=self.seed,
            workers=self.workers,
            freeze_embeddings=self.freeze_embeddings,
            dim=self.dim,
            min_count=self.min_count,
            bucket_count=self.bucket_count,
            ngram_min=self.ngram_min,
            ngram_max=self.ngram_max,
        )
        self.model_ = train_classifier(records, init=self._resolve_init(), config=config)
        self.classes_ = np.array([0, 1]) if self._int_labels else np.array(sorted(set(y)))
        return self

    def _check_fitted(self) -> ClassifierModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("ClickbaitClassifier is not fitted; call fit first")
        return model

    def predict(self, X: Sequence[str]) -> np.ndarray:
        model = self._check_fitted()
        preds = predict_batch(model, X)
        if self._int_labels:
            return np.array([1 if p.label == CLICKBAIT else 0 for p in preds])
        return np.array([p.label for p in preds])

    def predict_proba(self, X: Sequence[str]) -> np.ndarray:
        """Probabilities in ``classes_`` order."""
        model = self._check_fitted()
        preds = predict_batch(model, X)
        canon = np.array([p.probabilities for p in preds], dtype=np.float64)
        if self._int_labels:
            return canon
        columns = [
            canon[:, LABELS.index(self._canonical(cls))] for cls in self.classes_
        ]
        return np.column_stack(columns)
