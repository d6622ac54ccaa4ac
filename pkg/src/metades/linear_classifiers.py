"""Perceptron base classifiers, bagged pools and the AdaBoost.M1 baseline."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .dataset import Dataset


def _augment(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.concatenate([X, np.ones(X.shape[:-1] + (1,))], axis=-1)


def _softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class LinearClassifier:
    """One hyperplane per class; the bias sits in the last column of ``weights``.

    Class scores are ``weights @ [x; 1]``; prediction is the arg-max score with
    ties resolved towards the lowest class index.
    """

    weights: np.ndarray
    seed: int | None = None
    trained_on: str = ""

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] < 2:
            raise ValueError("weights must be an L x (d+1) matrix with L >= 2")

    @classmethod
    def from_hyperplane(cls, w, bias: float = 0.0, **kw) -> "LinearClassifier":
        """Binary classifier deciding class 1 where ``w.x + bias > 0``."""
        row = np.append(np.asarray(w, dtype=float), bias) / 2.0
        return cls(np.vstack([-row, row]), **kw)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[-1]}")
        return X

    def scores(self, X) -> np.ndarray:
        return _augment(self._check(X)) @ self.weights.T

    def predict(self, X):
        s = self.scores(X)
        return np.argmax(s, axis=-1) if s.ndim > 1 else int(np.argmax(s))

    def _scale(self) -> float:
        norms = np.linalg.norm(self.weights[:, :-1], axis=1)
        scale = norms.mean()
        return scale if scale > 0 else 1.0

    def posterior(self, X) -> np.ndarray:
        """Softmax of class scores expressed in units of the mean hyperplane norm.

        A single scale per classifier keeps the arg-max identical to ``predict``.
        """
        return _softmax(self.scores(X) / self._scale())

    def decision_distance(self, X):
        """Distance from ``X`` to the boundary between its two leading classes."""
        s = np.atleast_2d(self.scores(X))
        first = np.argmax(s, axis=1)
        masked = s.copy()
        masked[np.arange(len(s)), first] = -np.inf
        second = np.argmax(masked, axis=1)
        rows = np.arange(len(s))
        gap = s[rows, first] - s[rows, second]
        dw = self.weights[first, :-1] - self.weights[second, :-1]
        denom = np.linalg.norm(dw, axis=1)
        out = np.where(denom > 0, np.abs(gap) / np.where(denom > 0, denom, 1.0), 0.0)
        return out if np.ndim(X) > 1 else float(out[0])

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "seed": self.seed, "trained_on": self.trained_on}

    @classmethod
    def from_dict(cls, d) -> "LinearClassifier":
        return cls(np.array(d["weights"], dtype=float), d.get("seed"), d.get("trained_on", ""))


@njit(cache=True)
def _perceptron_epochs(Xa, y, order, W, lr):
    n_classes = W.shape[0]
    dim = W.shape[1]
    for e in range(order.shape[0]):
        for t in range(order.shape[1]):
            i = order[e, t]
            best = 0
            best_score = -np.inf
            for c in range(n_classes):
                s = 0.0
                for j in range(dim):
                    s += W[c, j] * Xa[i, j]
                if s > best_score:
                    best_score = s
                    best = c
            target = y[i]
            if best != target:
                for j in range(dim):
                    W[target, j] += lr * Xa[i, j]
                    W[best, j] -= lr * Xa[i, j]
    return W


def train_perceptron(ds: Dataset, epochs: int = 100, learning_rate: float = 1.0,
                     seed: int = 0, n_classes: int | None = None) -> LinearClassifier:
    """Online multi-class perceptron with a fixed epoch budget.

    On a mistake the true-class row is promoted and the predicted row demoted.
    Samples are visited in a fresh seeded permutation each epoch.
    """
    if ds.n_samples < 1:
        raise ValueError("cannot train on an empty dataset")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    L = n_classes or ds.n_classes
    rng = np.random.default_rng(seed)
    order = np.stack([rng.permutation(ds.n_samples) for _ in range(epochs)]).astype(np.int64)
    W = np.zeros((L, ds.n_features + 1))
    _perceptron_epochs(_augment(ds.features), ds.labels.astype(np.int64), order, W, float(learning_rate))
    return LinearClassifier(W, seed=int(seed))


@dataclass
class Pool:
    members: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a pool needs at least two classifiers")
        shapes = {m.weights.shape for m in self.members}
        if len(shapes) != 1:
            raise ValueError(f"pool members disagree on shape: {shapes}")
        self._W = np.stack([m.weights for m in self.members])
        self._scale = np.array([m._scale() for m in self.members])

    @property
    def M(self) -> int:
        return len(self.members)

    @property
    def n_classes(self) -> int:
        return self._W.shape[1]

    @property
    def n_features(self) -> int:
        return self._W.shape[2] - 1

    def __len__(self):
        return self.M

    def __getitem__(self, i) -> LinearClassifier:
        return self.members[i]

    def __iter__(self):
        return iter(self.members)

    def scores(self, X) -> np.ndarray:
        """Scores of every member, shape (n, M, L)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.einsum("nd,mld->nml", _augment(X), self._W)

    def predict_all(self, X) -> np.ndarray:
        """Decisions of every member, shape (n, M)."""
        return np.argmax(self.scores(X), axis=2)

    def posterior_all(self, X) -> np.ndarray:
        return _softmax(self.scores(X) / self._scale[None, :, None], axis=2)

    def distance_all(self, X) -> np.ndarray:
        s = self.scores(X)
        n, M, _ = s.shape
        first = np.argmax(s, axis=2)
        masked = s.copy()
        np.put_along_axis(masked, first[..., None], -np.inf, axis=2)
        second = np.argmax(masked, axis=2)
        gap = (np.take_along_axis(s, first[..., None], 2) - np.take_along_axis(s, second[..., None], 2))[..., 0]
        m_idx = np.arange(M)[None, :]
        dw = self._W[m_idx, first, :-1] - self._W[m_idx, second, :-1]
        denom = np.linalg.norm(dw, axis=2)
        return np.where(denom > 0, np.abs(gap) / np.where(denom > 0, denom, 1.0), 0.0)

    def fingerprint(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self._W).tobytes()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"n_features": self.n_features, "n_classes": self.n_classes,
                "metadata": self.metadata, "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, d) -> "Pool":
        return cls([LinearClassifier.from_dict(m) for m in d["members"]], d.get("metadata", {}))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Pool":
        return cls.from_dict(json.loads(Path(path).read_text()))


class BootstrapError(RuntimeError):
    pass


def bagging_generate(train: Dataset, M: int = 100, seed: int = 0, epochs: int = 100,
                     learning_rate: float = 1.0, max_redraws: int = 1000) -> Pool:
    """Train ``M`` perceptrons on bootstrap replicates of ``train``.

    A replicate that misses a class is redrawn, at most ``max_redraws`` times.
    """
    if M < 2:
        raise ValueError("pool size M must be >= 2")
    n, L = train.n_samples, train.n_classes
    present = np.unique(train.labels)
    children = np.random.SeedSequence(seed).spawn(M)
    members = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        for _ in range(max_redraws + 1):
            idx = rng.integers(0, n, size=n)
            if len(np.unique(train.labels[idx])) == len(present):
                break
        else:
            raise BootstrapError(f"bootstrap {i}: no replicate with all classes after {max_redraws} redraws")
        member_seed = int(rng.integers(0, 2**31 - 1))
        c = train_perceptron(train.subset(idx), epochs, learning_rate, member_seed, n_classes=L)
        c.trained_on = f"bootstrap:{seed}:{i}"
        members.append(c)
    return Pool(members, {"seed": seed, "epochs": epochs, "learning_rate": learning_rate,
                          "n_train": n})


def majority_vote(predictions, posteriors, n_classes: int) -> int:
    """Plurality of ``predictions``; ties go to the larger summed posterior.

    ``posteriors`` has one row per voter. Remaining ties fall to the lowest index.
    """
    predictions = np.asarray(predictions)
    votes = np.bincount(predictions, minlength=n_classes)
    tied = np.flatnonzero(votes == votes.max())
    if len(tied) == 1:
        return int(tied[0])
    mass = np.asarray(posteriors)[:, tied].sum(axis=0)
    return int(tied[np.argmax(mass)])


@dataclass
class AdaBoostM1:
    members: list
    alphas: np.ndarray
    n_classes: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        tally = np.zeros((X.shape[0], self.n_classes))
        for c, a in zip(self.members, self.alphas):
            tally[np.arange(X.shape[0]), c.predict(X)] += a
        return np.argmax(tally, axis=1)

    def __len__(self):
        return len(self.members)


def adaboost_train(train: Dataset, T: int = 100, seed: int = 0, epochs: int = 100,
                   learning_rate: float = 1.0) -> AdaBoostM1:
    """AdaBoost.M1 with weighted resampling and perceptron weak learners.

    Stops when a round's weighted error reaches 0.5 (round discarded) or 0
    (round kept).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    n, L = train.n_samples, train.n_classes
    rng = np.random.default_rng(seed)
    w = np.full(n, 1.0 / n)
    members, alphas = [], []
    first_rejected = None
    for _ in range(T):
        idx = rng.choice(n, size=n, replace=True, p=w)
        c = train_perceptron(train.subset(idx), epochs, learning_rate,
                             int(rng.integers(0, 2**31 - 1)), n_classes=L)
        wrong = c.predict(train.features) != train.labels
        err = float(w[wrong].sum())
        if err >= 0.5:
            if not members:
                first_rejected = c
            break
        members.append(c)
        if err <= 0.0:
            alphas.append(np.log(1e10))
            break
        beta = err / (1.0 - err)
        alphas.append(np.log(1.0 / beta))
        w = np.where(wrong, w, w * beta)
        w /= w.sum()
    if not members:
        # the very first learner already failed; keep it so predict stays defined
        members, alphas = [first_rejected], [1.0]
    return AdaBoostM1(members, np.array(alphas), L)
