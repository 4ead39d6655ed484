"""Evaluation battery: k-fold cross-validation with repeats, confusion-matrix
metrics, Cohen's kappa, and rank-based ROC-AUC.

Cross-validation pools confusion counts across folds before computing ratios
(micro average) and also reports the per-fold macro average, since published
tables rarely say which convention they used. Metric functions are pure.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from sklearn.exceptions import UndefinedMetricWarning

from .classify import ClassifierConfig, predict_batch, train_classifier
from .corpus import CLICKBAIT, LABELS, LabeledHeadline

logger = logging.getLogger(__name__)

METRIC_NAMES = ("precision", "recall", "f_measure", "accuracy", "kappa", "roc_auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts with clickbait as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


def confusion_from_labels(
    y_true: Sequence[str], y_pred: Sequence[str]
) -> ConfusionMatrix:
    tp = fp = fn = tn = 0
    for truth, pred in zip(y_true, y_pred):
        if pred == CLICKBAIT:
            if truth == CLICKBAIT:
                tp += 1
            else:
                fp += 1
        else:
            if truth == CLICKBAIT:
                fn += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``[0, n)`` with the given seed and partition it into ``k``
    folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} items, got n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


def classification_metrics(cm: ConfusionMatrix) -> dict:
    """Precision, recall, F-measure and accuracy from confusion counts.

    Ratios with a zero denominator come back as 0.0 and are listed under
    the ``undefined`` key.
    """
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    undefined: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    if precision + recall == 0:
        undefined.append("f_measure")
        f_measure = 0.0
    else:
        f_measure = 2 * precision * recall / (precision + recall)
    accuracy = (cm.tp + cm.tn) / cm.total
    return {
        "precision": precision,
        "recall": recall,
        "f_measure": f_measure,
        "accuracy": accuracy,
        "undefined": tuple(undefined),
    }


def cohens_kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement
    ``(p_o - p_e) / (1 - p_e)``, with ``p_o`` the accuracy and ``p_e`` the
    expected agreement from the marginals. Defined as 0.0 (with a warning)
    when ``p_e`` is 1."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    total = cm.total
    p_o = (cm.tp + cm.tn) / total
    p_e = (
        (cm.tp + cm.fn) * (cm.tp + cm.fp) + (cm.tn + cm.fp) * (cm.tn + cm.fn)
    ) / (total * total)
    if p_e == 1.0:
        warnings.warn(
            "expected agreement is 1; kappa undefined, reporting 0.0",
            UndefinedMetricWarning,
            stacklevel=2,
        )
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def _positive_mask(labels: Sequence) -> np.ndarray:
    mask = np.empty(len(labels), dtype=bool)
    for i, label in enumerate(labels):
        if label in (CLICKBAIT, 1, True):
            mask[i] = True
        elif label in (LABELS[0], 0, False):
            mask[i] = False
        else:
            raise ValueError(f"label {label!r} is not 0/1 or one of {LABELS}")
    return mask


def roc_auc(scores: Sequence[float], labels: Sequence) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic: the
    fraction of (positive, negative) pairs ranked correctly, ties counting
    one half."""
    if len(scores) != len(labels):
        raise ValueError(f"{len(scores)} scores but {len(labels)} labels")
    pos = _positive_mask(labels)
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs both classes present")
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        # tie group shares the average of ranks i+1 .. j+1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class MetricsReport:
    """Cross-validation result.

    The headline fields are micro averages (confusion counts pooled across
    folds, then averaged over repeats); ``macro`` carries the per-fold
    averages of the same six metrics.
    """

    precision: float
    recall: float
    f_measure: float
    accuracy: float
    kappa: float
    roc_auc: float
    folds: int
    repeats: int
    macro: dict = field(default_factory=dict)
    per_repeat: list = field(default_factory=list)
    undefined: tuple = ()

    def to_dict(self) -> dict:
        return {
            "micro": {name: getattr(self, name) for name in METRIC_NAMES},
            "macro": dict(self.macro),
            "per_repeat": [dict(r) for r in self.per_repeat],
            "folds": self.folds,
            "repeats": self.repeats,
            "undefined": list(self.undefined),
        }


def _fold_train_seed(seed: int, repeat: int, k: int, fold: int) -> int:
    # any fixed derivation works; keep repeats and folds on distinct streams
    return seed + 7919 * (repeat * k + fold) + 1


def cross_validate(
    data: Sequence[LabeledHeadline],
    k: int = 10,
    repeats: int = 5,
    config: ClassifierConfig | None = None,
    pretrained=None,
) -> MetricsReport:
    """k-fold cross-validation repeated ``repeats`` times.

    Repeat ``r`` reshuffles with seed ``config.seed + r``; each fold trains
    a fresh classifier (optionally initialized from ``pretrained``) on the
    other k-1 folds and is scored on the held-out fold. Raises when any
    training split contains a single class, naming the fold.
    """
    config = config or ClassifierConfig()
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    n = len(data)
    texts = [rec.text for rec in data]
    truth = [rec.label for rec in data]
    per_repeat: list[dict] = []
    fold_metrics: list[dict] = []
    fold_aucs: list[float] = []
    undefined: set[str] = set()
    for r in range(repeats):
        folds = kfold_split(n, k, config.seed + r)
        cm_sum = ConfusionMatrix(0, 0, 0, 0)
        pooled_scores: list[float] = []
        pooled_truth: list[str] = []
        for fi, held_out in enumerate(folds):
            held_set = set(held_out.tolist())
            train_records = [data[i] for i in range(n) if i not in held_set]
            train_labels = {rec.label for rec in train_records}
            if train_labels != set(LABELS):
                raise ValueError(
                    f"fold {fi} of repeat {r} leaves single-class training data"
                )
            fold_config = replace(
                config, seed=_fold_train_seed(config.seed, r, k, fi)
            )
            model = train_classifier(train_records, init=pretrained, config=fold_config)
            preds = predict_batch(model, [texts[i] for i in held_out])
            del model
            fold_truth = [truth[i] for i in held_out]
            cm = confusion_from_labels(fold_truth, [p.label for p in preds])
            cm_sum = cm_sum + cm
            scores = [p.p_clickbait for p in preds]
            pooled_scores.extend(scores)
            pooled_truth.extend(fold_truth)
            fm = classification_metrics(cm)
            undefined.update(fm.pop("undefined"))
            fm["kappa"] = cohens_kappa(cm)
            if len(set(fold_truth)) == 2:
                fm["roc_auc"] = roc_auc(scores, fold_truth)
                fold_aucs.append(fm["roc_auc"])
            else:
                undefined.add("roc_auc")
            fold_metrics.append(fm)
        micro = classification_metrics(cm_sum)
        undefined.update(micro.pop("undefined"))
        micro["kappa"] = cohens_kappa(cm_sum)
        micro["roc_auc"] = roc_auc(pooled_scores, pooled_truth)
        per_repeat.append(micro)
        logger.info(
            "repeat %d/%d: accuracy=%.4f kappa=%.4f auc=%.4f",
            r + 1,
            repeats,
            micro["accuracy"],
            micro["kappa"],
            micro["roc_auc"],
        )
    averaged = {
        name: float(np.mean([rep[name] for rep in per_repeat]))
        for name in METRIC_NAMES
    }
    macro = {
        name: float(np.mean([fm[name] for fm in fold_metrics]))
        for name in METRIC_NAMES
        if name != "roc_auc"
    }
    macro["roc_auc"] = float(np.mean(fold_aucs)) if fold_aucs else 0.0
    return MetricsReport(
        folds=k,
        repeats=repeats,
        macro=macro,
        per_repeat=per_repeat,
        undefined=tuple(sorted(undefined)),
        **averaged,
    )
