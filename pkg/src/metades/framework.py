"""META-DES: meta-training of the competence selector and per-query ensemble selection."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import meta_classifier
from .competence_region import (ProfileTable, build_profiles, consensus_from_votes, knn_batch,
                                profile_neighbors_batch)
from .dataset import Dataset
from .linear_classifiers import Pool, majority_vote
from .meta_classifier import MetaClassifier
from .meta_features import F5Scaler, MetaSet, meta_feature_block, vector_length


class EmptyMetaSetError(ValueError):
    pass


@dataclass(frozen=True)
class MetaDesParams:
    K: int = 7
    Kp: int = 5
    hc: float = 0.70
    hidden: int = 10

    def __post_init__(self):
        if self.K < 1 or self.Kp < 1 or self.hc <= 0 or self.hidden < 1:
            raise ValueError(f"parameters must be strictly positive: {self}")
        if self.hc > 1:
            raise ValueError("consensus threshold hc must be <= 1")


class AlwaysCompetent:
    """Selector stub that accepts every classifier."""

    def forward(self, X):
        return np.ones(np.atleast_2d(X).shape[0])


class _Reference:
    """Precomputed pool behaviour on a reference set (T_lambda or D_SEL)."""

    def __init__(self, ds: Dataset, pool: Pool):
        self.ds = ds
        self.table: ProfileTable = build_profiles(ds, pool)
        post = pool.posterior_all(ds.features)
        self.true_posterior = np.take_along_axis(
            post, ds.labels[:, None, None].repeat(pool.M, axis=1), axis=2)[..., 0]

    @property
    def decisions(self):
        return self.table.entries


def build_meta_set(pool: Pool, meta_ds: Dataset, params: MetaDesParams):
    """Run the sample-selection and extraction loop over ``meta_ds``.

    A sample is admitted when pool consensus on it is strictly below ``hc``.

    Returns the meta-set together with the fitted f5 scaler.
    """
    ref = _Reference(meta_ds, pool)
    H = consensus_from_votes(ref.decisions, pool.n_classes)
    # hc = 1 disables the filter, unanimous samples included
    admitted = np.arange(len(H)) if params.hc >= 1.0 else np.flatnonzero(H < params.hc)
    if len(admitted) == 0:
        raise EmptyMetaSetError(
            f"no meta-training sample has pool consensus below hc={params.hc}; increase hc")
    Xa = meta_ds.features[admitted]
    regions, _ = knn_batch(Xa, meta_ds.features, params.K, exclude=admitted)
    prof_nbrs, _ = profile_neighbors_batch(ref.decisions[admitted], ref.table, params.Kp, exclude=admitted)
    scaler = F5Scaler().fit(pool.distance_all(Xa))
    f5 = scaler.transform(pool.distance_all(Xa))

    blocks, alpha = [], []
    for row, j in enumerate(admitted):
        blocks.append(meta_feature_block(regions[row], prof_nbrs[row], ref.decisions,
                                         ref.true_posterior, meta_ds.labels, f5[row]))
        alpha.append(ref.decisions[j] == meta_ds.labels[j])
    M = pool.M
    meta = MetaSet(np.vstack(blocks), np.concatenate(alpha).astype(int),
                   np.tile(np.arange(M), len(admitted)), np.repeat(admitted, M),
                   params.K, params.Kp)
    return meta, scaler


@dataclass
class QueryDiagnostics:
    selected: np.ndarray
    votes: np.ndarray
    fallback: bool


@dataclass
class EvalResult:
    accuracy: float
    predictions: np.ndarray
    labels: np.ndarray
    ensemble_sizes: np.ndarray
    fallbacks: np.ndarray = field(default=None)

    @property
    def ensemble_size_mean(self) -> float:
        return float(self.ensemble_sizes.mean())

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["query_index", "selected", "predicted", "true"])
            for i, (s, p, t) in enumerate(zip(self.ensemble_sizes, self.predictions, self.labels)):
                w.writerow([i, int(s), int(p), int(t)])


class MetaDES:
    """Trained META-DES system: pool, selector, D_SEL reference and f5 scaling."""

    def __init__(self, pool: Pool, selector, dsel: Dataset, params: MetaDesParams,
                 f5_scaler: F5Scaler, meta_set: MetaSet | None = None):
        if dsel.n_samples < max(params.K, params.Kp):
            raise ValueError("D_SEL is smaller than the neighbourhood sizes")
        self.pool = pool
        self.selector = selector
        self.dsel = dsel
        self.params = params
        self.f5_scaler = f5_scaler
        self.meta_set = meta_set
        self._ref = _Reference(dsel, pool)

    @classmethod
    def fit(cls, pool: Pool, meta_ds: Dataset, dsel: Dataset, params: MetaDesParams | None = None,
            seed: int = 0, **train_kw) -> "MetaDES":
        params = params or MetaDesParams()
        meta, scaler = build_meta_set(pool, meta_ds, params)
        train_kw.setdefault("hidden", params.hidden)
        selector = meta_classifier.train(meta.X, meta.alpha, seed=seed, **train_kw)
        return cls(pool, selector, dsel, params, scaler, meta)

    def meta_features(self, X, exclude=None) -> np.ndarray:
        """Meta-feature tensor for queries ``X``, shape (n, M, 2K+Kp+2)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ref, p = self._ref, self.params
        regions, _ = knn_batch(X, self.dsel.features, p.K, exclude=exclude)
        decisions = self.pool.predict_all(X)
        prof, _ = profile_neighbors_batch(decisions, ref.table, p.Kp, exclude=exclude)
        f5 = self.f5_scaler.transform(self.pool.distance_all(X))
        return np.stack([meta_feature_block(regions[j], prof[j], ref.decisions, ref.true_posterior,
                                            self.dsel.labels, f5[j]) for j in range(len(X))])

    def select(self, X, exclude=None):
        """Competence confidences and selection masks, both shape (n, M)."""
        V = self.meta_features(X, exclude)
        n, M, D = V.shape
        conf = np.asarray(self.selector.forward(V.reshape(n * M, D)), dtype=float).reshape(n, M)
        return conf, conf >= 0.5

    def classify_batch(self, X, exclude=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        conf, mask = self.select(X, exclude)
        decisions = self.pool.predict_all(X)
        posts = self.pool.posterior_all(X)
        L = self.pool.n_classes
        out, diags = np.empty(len(X), dtype=int), []
        for j in range(len(X)):
            sel = np.flatnonzero(mask[j])
            fallback = len(sel) == 0
            if fallback:
                sel = np.array([int(np.argmax(conf[j]))])
            out[j] = majority_vote(decisions[j, sel], posts[j, sel], L)
            diags.append(QueryDiagnostics(sel, np.bincount(decisions[j, sel], minlength=L), fallback))
        return out, diags

    def classify(self, x):
        labels, diags = self.classify_batch(np.atleast_2d(x))
        return int(labels[0]), diags[0]

    def evaluate(self, test: Dataset, exclude=None) -> EvalResult:
        if test.n_samples == 0:
            raise ValueError("empty test set")
        pred, diags = self.classify_batch(test.features, exclude)
        return EvalResult(float(np.mean(pred == test.labels)), pred, test.labels,
                          np.array([len(d.selected) for d in diags]),
                          np.array([d.fallback for d in diags]))

    def evaluate_on_dsel(self) -> EvalResult:
        """Leave-one-out accuracy on D_SEL, each query hidden from its own neighbourhoods."""
        return self.evaluate(self.dsel, exclude=np.arange(self.dsel.n_samples))

    # ---------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        if not isinstance(self.selector, MetaClassifier):
            raise TypeError("only a trained MetaClassifier selector can be serialised")
        return {"params": asdict(self.params), "pool": self.pool.to_dict(),
                "selector": self.selector.to_dict(), "f5_scaler": self.f5_scaler.to_dict(),
                "dsel_fingerprint": self.dsel.fingerprint(),
                "meta_vector_length": vector_length(self.params.K, self.params.Kp)}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path, dsel: Dataset) -> "MetaDES":
        d = json.loads(Path(path).read_text())
        if dsel.fingerprint() != d["dsel_fingerprint"]:
            raise ValueError("D_SEL does not match the one the model was saved with")
        return cls(Pool.from_dict(d["pool"]), MetaClassifier.from_dict(d["selector"]), dsel,
                   MetaDesParams(**d["params"]), F5Scaler.from_dict(d["f5_scaler"]))


def meta_train(pool: Pool, meta_ds: Dataset, dsel: Dataset, params: MetaDesParams | None = None,
               seed: int = 0) -> MetaDES:
    return MetaDES.fit(pool, meta_ds, dsel, params, seed)
