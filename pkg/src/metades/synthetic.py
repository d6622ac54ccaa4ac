"""Bundled two-class synthetic problems, so benchmarks run without downloads."""

import numpy as np

from .dataset import Dataset


def gaussians(n: int = 1000, seed: int = 0, separation: float = 1.6, name: str = "lithuanian") -> Dataset:
    """Two overlapping, differently elongated Gaussian clouds in 2-D."""
    rng = np.random.default_rng(seed)
    n0 = n // 2
    n1 = n - n0
    cov0 = np.array([[1.0, 0.6], [0.6, 1.0]])
    cov1 = np.array([[1.0, -0.6], [-0.6, 1.0]])
    a = rng.multivariate_normal([0.0, 0.0], cov0, size=n0)
    b = rng.multivariate_normal([separation, 0.0], cov1, size=n1)
    X = np.vstack([a, b])
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return Dataset(X, y, ("a", "b"), name)


def banana(n: int = 1000, seed: int = 0, radius: float = 5.0, noise: float = 1.0) -> Dataset:
    """Two interleaved noisy arcs, after the classic banana-set construction."""
    rng = np.random.default_rng(seed)
    n0 = n // 2
    n1 = n - n0
    ta = 0.125 * np.pi + rng.random(n0) * 1.25 * np.pi
    a = np.c_[radius * np.sin(ta), radius * np.cos(ta)] + rng.normal(0, noise, (n0, 2))
    tb = 0.375 * np.pi - rng.random(n1) * 1.25 * np.pi
    b = np.c_[radius * np.sin(tb), radius * np.cos(tb)] + rng.normal(0, noise, (n1, 2))
    b -= 0.75 * radius
    X = np.vstack([a, b])
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return Dataset(X, y, ("a", "b"), "banana")


GENERATORS = {
    "lithuanian": gaussians,
    "banana": banana,
}
