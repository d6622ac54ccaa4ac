"""Literature DES techniques and static ensemble baselines over a shared pool.

Every technique works on the same precomputed view of D_SEL (member decisions
and posteriors), so comparisons across techniques are paired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .competence_region import ProfileTable, build_profiles, knn_batch, profile_neighbors_batch
from .dataset import Dataset
from .linear_classifiers import Pool, majority_vote

MLA_EPS = 1e-9


@dataclass
class Selection:
    """Outcome of one query: the label and the members that produced it."""

    label: int
    selected: np.ndarray
    region: np.ndarray | None = None


class DSELView:
    """Pool behaviour on D_SEL, computed once per replication."""

    def __init__(self, pool: Pool, dsel: Dataset):
        self.pool = pool
        self.dsel = dsel
        self.table: ProfileTable = build_profiles(dsel, pool)
        self.correct = self.table.entries == dsel.labels[:, None]  # (N, M)

    @property
    def decisions(self):
        return self.table.entries

    @property
    def labels(self):
        return self.dsel.labels


def _vote(view: DSELView, decisions, posteriors, members) -> int:
    return majority_vote(decisions[members], posteriors[members], view.pool.n_classes)


def _pool_vote(view, decisions, posteriors) -> int:
    return _vote(view, decisions, posteriors, np.arange(view.pool.M))


# Each technique takes one query: its pool decisions (M,), posteriors (M, L),
# ranked neighbour indices and distances in D_SEL, and returns a Selection.

def knora_e(view, decisions, posteriors, nbrs, dists, K: int = 7) -> Selection:
    """Members perfect on the region; the region shrinks until someone qualifies."""
    for k in range(K, 0, -1):
        perfect = np.flatnonzero(view.correct[nbrs[:k]].all(axis=0))
        if len(perfect):
            return Selection(_vote(view, decisions, posteriors, perfect), perfect, nbrs[:k])
    members = np.arange(view.pool.M)
    return Selection(_pool_vote(view, decisions, posteriors), members, nbrs[:0])


def knora_u(view, decisions, posteriors, nbrs, dists, K: int = 7) -> Selection:
    """Each member votes once per neighbour it classifies correctly."""
    region = nbrs[:K]
    weights = view.correct[region].sum(axis=0)
    if weights.sum() == 0:
        members = np.arange(view.pool.M)
        return Selection(_pool_vote(view, decisions, posteriors), members, region)
    L = view.pool.n_classes
    tally = np.bincount(decisions, weights=weights, minlength=L)
    tied = np.flatnonzero(tally == tally.max())
    members = np.flatnonzero(weights > 0)
    if len(tied) > 1:
        mass = (weights[:, None] * posteriors)[:, tied].sum(axis=0)
        label = int(tied[np.argmax(mass)])
    else:
        label = int(tied[0])
    return Selection(label, members, region)


def _single(decisions, competence, region) -> Selection:
    best = int(np.argmax(competence))  # first maximum: lowest index wins ties
    return Selection(int(decisions[best]), np.array([best]), region)


def ola_competence(view, nbrs, K: int = 7) -> np.ndarray:
    return view.correct[nbrs[:K]].mean(axis=0)


def ola(view, decisions, posteriors, nbrs, dists, K: int = 7) -> Selection:
    return _single(decisions, ola_competence(view, nbrs, K), nbrs[:K])


def lca_competence(view, decisions, nbrs, dists=None, K: int = 7) -> np.ndarray:
    """Accuracy on the neighbours whose true class is the member's own prediction.

    With ``dists`` each neighbour is weighted by its inverse distance (MLA).
    """
    region = nbrs[:K]
    labels = view.labels[region]                      # (K,)
    same = labels[:, None] == decisions[None, :]      # (K, M) neighbour in predicted class
    hit = same & view.correct[region]
    if dists is None:
        w = np.ones(len(region))
    else:
        w = 1.0 / (np.asarray(dists[:K], dtype=float) + MLA_EPS)
    den = (w[:, None] * same).sum(axis=0)
    num = (w[:, None] * hit).sum(axis=0)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def lca(view, decisions, posteriors, nbrs, dists, K: int = 7) -> Selection:
    return _single(decisions, lca_competence(view, decisions, nbrs, None, K), nbrs[:K])


def mla(view, decisions, posteriors, nbrs, dists, K: int = 7) -> Selection:
    return _single(decisions, lca_competence(view, decisions, nbrs, dists, K), nbrs[:K])


def mcb(view, decisions, posteriors, nbrs, dists, K: int = 7, threshold: float = 0.6,
        similarity: float = 0.7) -> Selection:
    """Local accuracy over neighbours whose output profile resembles the query's.

    Members whose accuracy on that filtered region exceeds ``threshold`` vote;
    when none does the OLA winner decides. An empty filtered region falls back
    to the full region.
    """
    region = nbrs[:K]
    agreement = (view.decisions[region] == decisions[None, :]).mean(axis=1)
    filtered = region[agreement >= similarity]
    if len(filtered) == 0:
        filtered = region
    acc = view.correct[filtered].mean(axis=0)
    members = np.flatnonzero(acc > threshold)
    if len(members) == 0:
        return ola(view, decisions, posteriors, nbrs, dists, K)
    return Selection(_vote(view, decisions, posteriors, members), members, filtered)


def knop(view, decisions, posteriors, profile_nbrs, Kp: int = 7) -> Selection:
    """KNORA-E in decision space: members perfect on the nearest output profiles."""
    for k in range(Kp, 0, -1):
        perfect = np.flatnonzero(view.correct[profile_nbrs[:k]].all(axis=0))
        if len(perfect):
            return Selection(_vote(view, decisions, posteriors, perfect), perfect, profile_nbrs[:k])
    members = np.arange(view.pool.M)
    return Selection(_pool_vote(view, decisions, posteriors), members, profile_nbrs[:0])


FEATURE_SPACE = {"knora-e": knora_e, "knora-u": knora_u, "ola": ola, "lca": lca, "mla": mla, "mcb": mcb}
DES_TECHNIQUES = tuple(FEATURE_SPACE) + ("knop",)


def run_des(name: str, pool: Pool, dsel: Dataset, X, K: int = 7, view: DSELView | None = None,
            exclude=None, **kw) -> list[Selection]:
    """Apply DES technique ``name`` to every row of ``X``."""
    view = view or DSELView(pool, dsel)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    decisions = pool.predict_all(X)
    posteriors = pool.posterior_all(X)
    if name == "knop":
        nbrs, _ = profile_neighbors_batch(decisions, view.table, K, exclude=exclude)
        return [knop(view, decisions[j], posteriors[j], nbrs[j], K) for j in range(len(X))]
    fn = FEATURE_SPACE[name]
    nbrs, dists = knn_batch(X, dsel.features, K, exclude=exclude)
    return [fn(view, decisions[j], posteriors[j], nbrs[j], dists[j], K=K, **kw) for j in range(len(X))]


# ---------------------------------------------------------------- static

def pool_vote_predict(pool: Pool, X, members=None) -> np.ndarray:
    X = np.atleast_2d(X)
    decisions = pool.predict_all(X)
    posteriors = pool.posterior_all(X)
    members = np.arange(pool.M) if members is None else np.asarray(members)
    return np.array([majority_vote(decisions[j, members], posteriors[j, members], pool.n_classes)
                     for j in range(len(X))])


def single_best(pool: Pool, validation: Dataset) -> int:
    acc = (pool.predict_all(validation.features) == validation.labels[:, None]).mean(axis=0)
    return int(np.argmax(acc))


def static_selection(pool: Pool, validation: Dataset, fraction: float = 0.5) -> np.ndarray:
    """Greedy forward selection minimising the majority-vote error on ``validation``.

    Starts from the most accurate member and adds, one at a time, the member
    whose inclusion gives the lowest ensemble error until ``fraction`` of the
    pool is chosen. Ties go to the lowest member index.
    """
    decisions = pool.predict_all(validation.features)
    posteriors = pool.posterior_all(validation.features)
    y = validation.labels
    n, M = decisions.shape
    L = pool.n_classes
    size = max(1, int(round(fraction * M)))
    votes = np.zeros((n, L))
    mass = np.zeros((n, L))
    chosen: list[int] = []
    remaining = list(range(M))
    onehot = np.eye(L)[decisions]   # (n, M, L)
    for _ in range(size):
        best, best_err = None, np.inf
        for m in remaining:
            v = votes + onehot[:, m]
            pm = mass + posteriors[:, m]
            top = v.max(axis=1, keepdims=True)
            # plurality, ties by summed posterior, then lowest index
            pred = np.argmax(np.where(v == top, pm, -np.inf), axis=1)
            err = np.mean(pred != y)
            if err < best_err:
                best, best_err = m, err
        chosen.append(best)
        remaining.remove(best)
        votes += onehot[:, best]
        mass += posteriors[:, best]
    return np.array(sorted(chosen))


def oracle_accuracy(pool: Pool, test: Dataset) -> float:
    """Fraction of samples that at least one member classifies correctly."""
    return float((pool.predict_all(test.features) == test.labels[:, None]).any(axis=1).mean())
