"""Two-group Kruskal-Wallis comparison of replication accuracies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

ALPHA = 0.05
MIN_GROUP = 3


@dataclass(frozen=True)
class Significance:
    statistic: float
    p_value: float
    n_a: int
    n_b: int

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA

    def verdict(self) -> str:
        return "significant" if self.significant else "not significant"


def kruskal_two(a, b) -> Significance:
    """Tie-corrected H with a chi-squared(1) p-value.

    Samples that are all identical have no rank spread: H is 0 and p is 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < MIN_GROUP or len(b) < MIN_GROUP:
        raise ValueError(f"need at least {MIN_GROUP} values per group, got {len(a)} and {len(b)}")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return Significance(0.0, 1.0, len(a), len(b))
    h, p = stats.kruskal(a, b)
    return Significance(float(h), float(p), len(a), len(b))


def accuracies(records, technique: str, dataset: str) -> np.ndarray:
    """Accuracies ordered by replication."""
    rows = sorted((r for r in records if r.technique == technique and r.dataset == dataset),
                  key=lambda r: r.replication)
    return np.array([r.accuracy for r in rows])


def significance(records, technique_a: str, technique_b: str, dataset: str) -> Significance:
    return kruskal_two(accuracies(records, technique_a, dataset),
                       accuracies(records, technique_b, dataset))
