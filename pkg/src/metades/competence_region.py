"""Neighbourhoods in feature space and in decision (output-profile) space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .linear_classifiers import Pool


@dataclass(frozen=True)
class RegionOfCompetence:
    neighbor_indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.neighbor_indices)


@dataclass(frozen=True)
class ProfileNeighborhood:
    profile_indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.profile_indices)


@dataclass(frozen=True)
class OutputProfile:
    entries: np.ndarray
    source_index: int = -1
    true_label: int = -1


@dataclass(frozen=True)
class ProfileTable:
    """Crisp decisions of every pool member on every sample of a reference set."""

    entries: np.ndarray   # (N, M) class indices
    labels: np.ndarray    # (N,) true classes

    def __len__(self):
        return self.entries.shape[0]

    def profile(self, j: int) -> OutputProfile:
        return OutputProfile(self.entries[j], j, int(self.labels[j]))


_CHUNK = 128


def _k_smallest(dist: np.ndarray, K: int) -> np.ndarray:
    # stable sort: equal distances keep ascending index order
    return np.argsort(dist, kind="stable")[:K]


def knn_region(x, reference: Dataset, K: int = 7, exclude: int | None = None) -> RegionOfCompetence:
    """K nearest reference samples to ``x`` by Euclidean distance.

    ``exclude`` removes one reference index (the query itself during meta-training).
    """
    n_avail = reference.n_samples - (exclude is not None)
    if K < 1 or K > n_avail:
        raise ValueError(f"need 1 <= K <= {n_avail}, got K={K}")
    dist = np.sqrt(((reference.features - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
    if exclude is not None:
        dist = dist.copy()
        dist[exclude] = np.inf
    idx = _k_smallest(dist, K)
    return RegionOfCompetence(idx, dist[idx])


def _exclusions(exclude, n_queries):
    if exclude is None:
        return None
    exclude = np.asarray(exclude, dtype=np.int64)
    if exclude.shape != (n_queries,):
        raise ValueError("exclude must hold one reference index per query")
    return exclude


def knn_batch(Xq, Xref, K: int, exclude=None):
    """Vectorised :func:`knn_region` for many queries; returns (indices, distances).

    ``exclude[j]`` is a reference index hidden from query ``j`` (its own row).
    """
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    Xref = np.asarray(Xref, dtype=float)
    exclude = _exclusions(exclude, len(Xq))
    n_avail = len(Xref) - (exclude is not None)
    if K < 1 or K > n_avail:
        raise ValueError(f"need 1 <= K <= {n_avail}, got K={K}")
    dist = np.empty((len(Xq), len(Xref)))
    for lo in range(0, len(Xq), _CHUNK):
        block = Xq[lo:lo + _CHUNK]
        dist[lo:lo + _CHUNK] = np.sqrt(((block[:, None, :] - Xref[None, :, :]) ** 2).sum(axis=2))
    if exclude is not None:
        dist[np.arange(len(Xq)), exclude] = np.inf
    idx = np.argsort(dist, axis=1, kind="stable")[:, :K]
    return idx, np.take_along_axis(dist, idx, axis=1)


def build_profiles(ds: Dataset, pool: Pool) -> ProfileTable:
    entries = pool.predict_all(ds.features)
    entries.setflags(write=False)
    return ProfileTable(entries, ds.labels)


def profile_distances(entries, table_entries) -> np.ndarray:
    """Euclidean distance between one-hot encoded profiles.

    Each differing entry contributes 2 to the squared distance, so the distance
    is ``sqrt(2 * hamming)``.
    """
    entries = np.asarray(entries)
    table_entries = np.asarray(table_entries)
    mismatches = (table_entries != entries[..., None, :]).sum(axis=-1)
    return np.sqrt(2.0 * mismatches)


def profile_neighbors(x_profile, table: ProfileTable, Kp: int = 5,
                      exclude: int | None = None) -> ProfileNeighborhood:
    entries = x_profile.entries if isinstance(x_profile, OutputProfile) else np.asarray(x_profile)
    n_avail = len(table) - (exclude is not None)
    if Kp < 1 or Kp > n_avail:
        raise ValueError(f"need 1 <= Kp <= {n_avail}, got Kp={Kp}")
    dist = profile_distances(entries, table.entries)
    if exclude is not None:
        dist[exclude] = np.inf
    idx = _k_smallest(dist, Kp)
    return ProfileNeighborhood(idx, dist[idx])


def profile_neighbors_batch(query_entries, table: ProfileTable, Kp: int, exclude=None):
    query_entries = np.atleast_2d(query_entries)
    exclude = _exclusions(exclude, len(query_entries))
    n_avail = len(table) - (exclude is not None)
    if Kp < 1 or Kp > n_avail:
        raise ValueError(f"need 1 <= Kp <= {n_avail}, got Kp={Kp}")
    dist = np.empty((len(query_entries), len(table)))
    for lo in range(0, len(query_entries), _CHUNK):
        block = query_entries[lo:lo + _CHUNK]
        dist[lo:lo + _CHUNK] = np.sqrt(2.0 * (block[:, None, :] != table.entries[None, :, :]).sum(axis=2))
    if exclude is not None:
        dist[np.arange(len(query_entries)), exclude] = np.inf
    idx = np.argsort(dist, axis=1, kind="stable")[:, :Kp]
    return idx, np.take_along_axis(dist, idx, axis=1)


def consensus_from_votes(decisions, n_classes: int) -> np.ndarray:
    """Plurality fraction per row of an (n, M) decision matrix."""
    decisions = np.atleast_2d(decisions)
    counts = np.stack([(decisions == c).sum(axis=1) for c in range(n_classes)], axis=1)
    return counts.max(axis=1) / decisions.shape[1]


def consensus(x, pool: Pool) -> float:
    """Fraction of pool members voting for the plurality class at ``x``."""
    return float(consensus_from_votes(pool.predict_all(x), pool.n_classes)[0])
