"""Meta-features describing how competent one base classifier is around a query.

Vector layout, fixed for every call::

    [ f1 (K) | f2 (K) | f3 (1) | f4 (Kp) | f5 (1) ]

f1  hard correctness on each feature-space neighbour
f2  posterior assigned to each neighbour's true class
f3  local accuracy, the mean of f1
f4  hard correctness on each output-profile neighbour
f5  min-max scaled distance of the query to the classifier's boundary
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .competence_region import ProfileNeighborhood, ProfileTable, RegionOfCompetence
from .dataset import Dataset
from .linear_classifiers import LinearClassifier


def vector_length(K: int, Kp: int) -> int:
    return 2 * K + Kp + 2


def feature_names(K: int, Kp: int) -> list[str]:
    return ([f"f1_{k}" for k in range(K)] + [f"f2_{k}" for k in range(K)] + ["f3"]
            + [f"f4_{k}" for k in range(Kp)] + ["f5"])


@dataclass(frozen=True)
class MetaSample:
    f1: np.ndarray
    f2: np.ndarray
    f3: float
    f4: np.ndarray
    f5: float
    alpha: int | None = None
    classifier_index: int = -1
    query_index: int = -1

    @property
    def K(self) -> int:
        return len(self.f1)

    @property
    def Kp(self) -> int:
        return len(self.f4)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.f1, self.f2, [self.f3], self.f4, [self.f5]])


def extract_f1(c: LinearClassifier, region: RegionOfCompetence, reference: Dataset) -> np.ndarray:
    idx = region.neighbor_indices
    return (c.predict(reference.features[idx]) == reference.labels[idx]).astype(float)


def extract_f2(c: LinearClassifier, region: RegionOfCompetence, reference: Dataset) -> np.ndarray:
    idx = region.neighbor_indices
    post = c.posterior(reference.features[idx])
    return post[np.arange(len(idx)), reference.labels[idx]]


def extract_f3(f1) -> float:
    return float(np.mean(f1))


def extract_f4(classifier_index: int, profile_nbrs: ProfileNeighborhood, table: ProfileTable) -> np.ndarray:
    """Whether the classifier's stored decision on each profile neighbour was right."""
    idx = profile_nbrs.profile_indices
    return (table.entries[idx, classifier_index] == table.labels[idx]).astype(float)


class F5Scaler:
    """Per-classifier min-max bounds of boundary distances.

    Fitted on the distances seen over meta-training queries; later values are
    clamped to [0, 1]. A classifier whose fitted range is empty maps to 0.5.
    """

    def __init__(self, min_=None, max_=None):
        self.min_ = None if min_ is None else np.asarray(min_, dtype=float)
        self.max_ = None if max_ is None else np.asarray(max_, dtype=float)

    def fit(self, distances) -> "F5Scaler":
        distances = np.atleast_2d(distances)
        self.min_ = distances.min(axis=0)
        self.max_ = distances.max(axis=0)
        return self

    def transform(self, distances, classifier_index=None) -> np.ndarray:
        if self.min_ is None:
            raise RuntimeError("F5Scaler used before fit")
        lo, hi = self.min_, self.max_
        if classifier_index is not None:
            lo, hi = lo[classifier_index], hi[classifier_index]
        span = hi - lo
        flat = span <= 0
        out = (np.asarray(distances, dtype=float) - lo) / np.where(flat, 1.0, span)
        return np.where(flat, 0.5, np.clip(out, 0.0, 1.0))

    def to_dict(self):
        return {"min": self.min_.tolist(), "max": self.max_.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["min"], d["max"])


def extract_f5(c: LinearClassifier, x, scaler: F5Scaler, classifier_index: int) -> float:
    return float(scaler.transform(c.decision_distance(x), classifier_index))


def assemble(f1, f2, f3, f4, f5, alpha=None, classifier_index=-1, query_index=-1) -> MetaSample:
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    f4 = np.asarray(f4, dtype=float)
    if f1.ndim != 1 or f2.shape != f1.shape or f4.ndim != 1 or len(f1) < 1 or len(f4) < 1:
        raise ValueError(f"meta-feature parts have inconsistent lengths: "
                         f"f1={f1.shape}, f2={f2.shape}, f4={f4.shape}")
    if np.ndim(f3) != 0 or np.ndim(f5) != 0:
        raise ValueError("f3 and f5 must be scalars")
    return MetaSample(f1, f2, float(f3), f4, float(f5),
                      None if alpha is None else int(alpha), classifier_index, query_index)


def meta_feature_block(region_idx, profile_idx, ref_decisions, ref_true_posterior,
                       ref_labels, f5_values) -> np.ndarray:
    """Meta-feature vectors of every pool member for one query, shape (M, 2K+Kp+2).

    ``ref_decisions`` (N, M) and ``ref_true_posterior`` (N, M) are precomputed on
    the reference set that also backs the profile table.
    """
    f1 = (ref_decisions[region_idx] == ref_labels[region_idx, None]).T.astype(float)
    f2 = ref_true_posterior[region_idx].T
    f3 = f1.mean(axis=1, keepdims=True)
    f4 = (ref_decisions[profile_idx] == ref_labels[profile_idx, None]).T.astype(float)
    f5 = np.asarray(f5_values, dtype=float)[:, None]
    return np.hstack([f1, f2, f3, f4, f5])


@dataclass
class MetaSet:
    """The meta-training set: one row per (query, classifier) pair."""

    X: np.ndarray
    alpha: np.ndarray
    classifier_index: np.ndarray
    query_index: np.ndarray
    K: int
    Kp: int

    def __len__(self):
        return len(self.alpha)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(feature_names(self.K, self.Kp) + ["alpha", "classifier_index", "query_index"])
            for row, a, ci, qi in zip(self.X, self.alpha, self.classifier_index, self.query_index):
                w.writerow([repr(float(v)) for v in row] + [int(a), int(ci), int(qi)])

    @classmethod
    def from_csv(cls, path, K: int, Kp: int) -> "MetaSet":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        D = vector_length(K, Kp)
        if len(header) != D + 3:
            raise ValueError(f"expected {D + 3} columns for K={K}, Kp={Kp}, got {len(header)}")
        return cls(body[:, :D], body[:, D].astype(int), body[:, D + 1].astype(int),
                   body[:, D + 2].astype(int), K, Kp)
