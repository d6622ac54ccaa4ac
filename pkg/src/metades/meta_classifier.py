"""The competence selector: a one-hidden-layer sigmoid MLP trained by Levenberg-Marquardt."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MetaClassifier:
    input_dim: int
    hidden: int = 10
    theta: np.ndarray | None = None
    training_log: list = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return self.hidden * (self.input_dim + 2) + 1

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        H, D = self.hidden, self.input_dim
        w1 = rng.uniform(-0.5, 0.5, H * (D + 1)) / np.sqrt(D)
        w2 = rng.uniform(-0.5, 0.5, H + 1) / np.sqrt(H)
        self.theta = np.concatenate([w1, w2])
        return self.theta

    def unpack(self, theta=None):
        theta = self.theta if theta is None else theta
        H, D = self.hidden, self.input_dim
        W1 = theta[: H * D].reshape(H, D)
        b1 = theta[H * D: H * D + H]
        w2 = theta[H * D + H: H * D + 2 * H]
        b2 = theta[H * D + 2 * H]
        return W1, b1, w2, b2

    def _check(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} meta-features, got {X.shape[1]}")
        return X

    def forward(self, X, theta=None) -> np.ndarray:
        W1, b1, w2, b2 = self.unpack(theta)
        h = _sigmoid(self._check(X) @ W1.T + b1)
        return _sigmoid(h @ w2 + b2)

    def jacobian(self, X, theta=None) -> np.ndarray:
        """d output / d theta for each row of ``X``, shape (n, n_params)."""
        W1, b1, w2, b2 = self.unpack(theta)
        X = self._check(X)
        h = _sigmoid(X @ W1.T + b1)
        o = _sigmoid(h @ w2 + b2)
        do = o * (1.0 - o)
        g1 = do[:, None] * w2[None, :] * h * (1.0 - h)
        dW1 = (g1[:, :, None] * X[:, None, :]).reshape(len(X), -1)
        return np.hstack([dW1, g1, do[:, None] * h, do[:, None]])

    def predict_proba(self, X) -> np.ndarray:
        return self.forward(X)

    def is_competent(self, v):
        """Return (competent, confidence) for one meta-feature vector."""
        conf = float(self.forward(v)[0])
        return conf >= 0.5, conf

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden": self.hidden,
                "theta": self.theta.tolist(), "training_log": self.training_log}

    @classmethod
    def from_dict(cls, d) -> "MetaClassifier":
        return cls(d["input_dim"], d["hidden"], np.array(d["theta"], dtype=float),
                   d.get("training_log", []))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _stratified_holdout(y, fraction, rng):
    val = []
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        val.append(idx[: int(round(fraction * len(idx)))])
    val = np.sort(np.concatenate(val))
    train = np.setdiff1d(np.arange(len(y)), val)
    return train, val


def sse(model: MetaClassifier, X, t, theta=None) -> float:
    r = model.forward(X, theta) - t
    return float(r @ r)


def lm_normal_equations(model: MetaClassifier, X, t, theta, chunk: int = 4096):
    """Accumulate J^T J and J^T r over row chunks."""
    P = len(theta)
    JtJ = np.zeros((P, P))
    Jtr = np.zeros(P)
    for lo in range(0, len(X), chunk):
        Xc = X[lo:lo + chunk]
        J = model.jacobian(Xc, theta)
        r = model.forward(Xc, theta) - t[lo:lo + chunk]
        JtJ += J.T @ J
        Jtr += J.T @ r
    return JtJ, Jtr


def train(X, alpha, seed: int = 0, hidden: int = 10, max_epochs: int = 100, max_fail: int = 5,
          mu: float = 1e-3, mu_dec: float = 0.1, mu_inc: float = 10.0, mu_max: float = 1e10,
          val_fraction: float = 0.25, min_grad: float = 1e-10, chunk: int = 4096,
          on_step=None) -> MetaClassifier:
    """Fit the selector on meta-feature rows ``X`` with 0/1 competence targets.

    One epoch is one accepted Levenberg-Marquardt step on the sum of squared
    errors; damping shrinks after an accepted step and grows after a rejected
    one. Training stops after ``max_fail`` epochs without validation
    improvement and the best-validation weights are kept.
    ``on_step(sse_before, sse_after)`` is called for every accepted step.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(alpha, dtype=float)
    if len(np.unique(t)) < 2:
        raise ValueError("meta-set holds a single competence class; cannot train the selector")
    if len(t) < 40:
        raise ValueError(f"meta-set too small to split for validation ({len(t)} rows, need 40)")

    rng = np.random.default_rng(seed)
    tr, va = _stratified_holdout(t, val_fraction, rng)
    Xt, tt, Xv, tv = X[tr], t[tr], X[va], t[va]

    model = MetaClassifier(X.shape[1], hidden)
    theta = model.init_params(rng)
    cur = sse(model, Xt, tt, theta)
    best_theta, best_val = theta.copy(), sse(model, Xv, tv, theta) / len(tv)
    fails = 0
    model.training_log = [{"epoch": 0, "train_sse": cur, "val_mse": best_val, "mu": mu}]
    eye = np.eye(len(theta))

    for epoch in range(1, max_epochs + 1):
        JtJ, Jtr = lm_normal_equations(model, Xt, tt, theta, chunk)
        if np.linalg.norm(Jtr) < min_grad:
            break
        accepted = False
        while mu <= mu_max:
            try:
                step = np.linalg.solve(JtJ + mu * eye, -Jtr)
            except np.linalg.LinAlgError:
                mu *= mu_inc
                continue
            cand = theta + step
            new = sse(model, Xt, tt, cand)
            if np.isfinite(new) and new < cur:
                if on_step is not None:
                    on_step(cur, new)
                theta, cur = cand, new
                mu *= mu_dec
                accepted = True
                break
            mu *= mu_inc
        if not accepted:
            break
        val = sse(model, Xv, tv, theta) / len(tv)
        model.training_log.append({"epoch": epoch, "train_sse": cur, "val_mse": val, "mu": mu})
        if val < best_val:
            best_val, best_theta, fails = val, theta.copy(), 0
        else:
            fails += 1
            if fails >= max_fail:
                break

    model.theta = best_theta
    log.debug("selector trained: %d epochs, best val mse %.4f", len(model.training_log) - 1, best_val)
    return model
