"""Headline-body similarity and kernel density estimation.

Similarity is the cosine between plain term-frequency bag-of-words vectors
of the headline and each sentence of the article's first paragraph,
aggregated with max (default) or mean. No idf weighting and no stopword
removal, so a headline that restates a lede sentence verbatim scores 1.0.
All operations are pure.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import extract_structure
from .textproc import tokenize

SparseVector = Mapping[str, int]

AGGREGATION_MODES = ("max", "mean")


def bow_vector(tokens: Sequence[str]) -> dict[str, int]:
    """Term-frequency counts of the tokens (lowercased)."""
    return dict(Counter(t.lower() for t in tokens))


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity of two count vectors; 0.0 when either is empty.
    Non-negative counts keep the result in [0, 1]."""
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(count * b.get(word, 0) for word, count in a.items())
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def headline_body_similarity(headline: str, body: str, mode: str = "max") -> float:
    """Cosine between the headline and each first-paragraph sentence,
    aggregated by ``mode``.

    A headline that tokenizes to nothing scores 0.0 with a warning; an
    empty body is an error.
    """
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"mode must be one of {AGGREGATION_MODES}, got {mode!r}")
    structure = extract_structure(body)
    head_tokens = tokenize(headline)
    if not head_tokens:
        warnings.warn(
            "headline tokenizes to nothing; similarity reported as 0.0",
            stacklevel=2,
        )
        return 0.0
    head = bow_vector(head_tokens)
    sims = [cosine(head, bow_vector(tokenize(s))) for s in structure.sentences]
    if mode == "max":
        return max(sims)
    return sum(sims) / len(sims)


@dataclass(frozen=True)
class DensityCurve:
    """Gaussian KDE evaluated on a uniform grid."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    @property
    def integral(self) -> float:
        """Trapezoidal mass captured by the evaluated grid."""
        return float(np.trapezoid(self.density, self.grid))


def density_estimate(values: Sequence[float], grid_size: int = 512) -> DensityCurve:
    """Gaussian kernel density estimate with Scott's-rule bandwidth
    ``std(values) * n**(-1/5)``, evaluated on a uniform grid spanning
    ``[min - 3h, max + 3h]``.

    Needs at least two distinct values; degenerate inputs raise with a hint
    to fall back to a histogram.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if arr.size < 2:
        raise ValueError(
            "density estimation needs at least 2 values; use a histogram instead"
        )
    if not np.isfinite(arr).all():
        raise ValueError("values must be finite")
    std = float(arr.std(ddof=1))
    if std == 0.0:
        raise ValueError(
            "values have zero variance; density is degenerate, use a histogram instead"
        )
    h = std * arr.size ** (-1.0 / 5.0)
    grid = np.linspace(arr.min() - 3.0 * h, arr.max() + 3.0 * h, grid_size)
    density = np.zeros_like(grid)
    norm = 1.0 / (arr.size * h * math.sqrt(2.0 * math.pi))
    for start in range(0, arr.size, 65536):
        chunk = arr[start : start + 65536]
        diff = (grid[:, None] - chunk[None, :]) / h
        density += np.exp(-0.5 * diff * diff).sum(axis=1)
    density *= norm
    return DensityCurve(grid=grid, density=density, bandwidth=h)
