"""Exhaustive k-means optimum for tiny point sets (test oracle)."""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _label_table(n: int, k: int) -> np.ndarray:
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int8)


def optimal_wcss(points: np.ndarray, k: int) -> float:
    """Minimum within-cluster sum of squares over every assignment of points to k labels."""
    points = np.asarray(points, dtype=np.float64)
    labels = _label_table(len(points), k)
    sq_total = float(np.sum(points * points))
    explained = np.zeros(len(labels))
    for c in range(k):
        onehot = (labels == c).astype(np.float64)
        counts = onehot.sum(axis=1)
        sums = onehot @ points
        with np.errstate(invalid="ignore", divide="ignore"):
            term = np.where(counts > 0, np.sum(sums * sums, axis=1) / counts, 0.0)
        explained += term
    return sq_total - float(explained.max())


def wcss(points: np.ndarray, labels: np.ndarray) -> float:
    total = 0.0
    for c in np.unique(labels):
        members = points[labels == c]
        total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total
