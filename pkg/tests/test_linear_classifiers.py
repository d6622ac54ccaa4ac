import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metades import linear_classifiers as lc
from metades.dataset import Dataset
from metades.linear_classifiers import (AdaBoostM1, BootstrapError, LinearClassifier, Pool, adaboost_train,
                                        bagging_generate, majority_vote, train_perceptron)


def _ds(X, y, L=2):
    return Dataset(np.asarray(X, dtype=float), np.asarray(y), tuple(f"c{i}" for i in range(L)))


def _fixed(scores_row):
    """Classifier on a 1-D input whose scores equal ``scores_row`` at x=0."""
    s = np.asarray(scores_row, dtype=float)
    return LinearClassifier(np.c_[np.zeros(len(s)), s])


def test_separable_training_accuracy():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (60, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0.1).astype(int)
    c = train_perceptron(_ds(X, y), epochs=100, seed=1)
    assert np.all(c.predict(X) == y)


def test_single_sample():
    c = train_perceptron(_ds([[0.3, 0.7]], [0]), epochs=5, n_classes=2)
    pts = np.array([0.3, 0.7]) + np.random.default_rng(0).normal(0, 0.01, (20, 2))
    assert np.all(c.predict(pts) == 0)


def test_xor_not_separable():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([0, 0, 1, 1])
    for seed in range(10):
        c = train_perceptron(_ds(X, y), epochs=100, seed=seed)
        # enumerate the four predictions
        correct = sum(int(c.predict(X[i]) == y[i]) for i in range(4))
        assert correct / 4 <= 0.75


def test_perceptron_deterministic():
    X = np.random.default_rng(1).normal(size=(30, 3))
    y = (X[:, 0] > 0).astype(int)
    a = train_perceptron(_ds(X, y), epochs=7, seed=5)
    b = train_perceptron(_ds(X, y), epochs=7, seed=5)
    assert np.array_equal(a.weights, b.weights)


def test_perceptron_preconditions():
    with pytest.raises(ValueError):
        train_perceptron(_ds([[0.0], [1.0]], [0, 1]), epochs=0)


@pytest.mark.parametrize("scores, label", [((2.0, -1.0), 0), ((1.0, 1.0), 0), ((-3.0, 0.5, 0.1), 1)])
def test_predict_examples(scores, label):
    assert _fixed(scores).predict(np.array([0.0])) == label


def test_predict_dimension_mismatch():
    with pytest.raises(ValueError):
        _fixed((1.0, 0.0)).predict(np.zeros(3))


def test_posterior_examples():
    np.testing.assert_allclose(_fixed((0.3, 0.3)).posterior(np.array([0.0])), [0.5, 0.5])
    # unit-norm rows: softmax(1, 0)
    c = LinearClassifier(np.array([[1.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(c.posterior(np.array([0.0])), [0.731, 0.269], atol=1e-3)
    far = LinearClassifier.from_hyperplane([1.0, 0.0])
    assert far.posterior(np.array([1e4, 0.0]))[1] > 1 - 1e-12


def test_decision_distance_examples():
    c = LinearClassifier.from_hyperplane([1.0, 0.0], 0.0)
    assert c.decision_distance(np.array([2.0, 5.0])) == pytest.approx(2.0)
    assert c.decision_distance(np.array([0.0, 3.0])) == 0.0
    assert LinearClassifier(np.zeros((2, 3))).decision_distance(np.array([1.0, 2.0])) == 0.0


def test_decision_distance_multiclass_geometry():
    # top two classes 0 and 2; boundary is where (w0 - w2).x + (b0 - b2) = 0
    W = np.array([[2.0, 0.0, 1.0], [0.0, 0.0, -5.0], [0.0, 1.0, 0.0]])
    x = np.array([1.0, 1.0])
    d = LinearClassifier(W).decision_distance(x)
    assert d == pytest.approx(abs((2 * 1 + 1) - 1) / np.hypot(2.0, -1.0))


# grid-valued inputs: score gaps below float resolution would tie in the posterior only
grid = st.integers(-300, 300).map(lambda v: v / 100)


@settings(max_examples=100, deadline=None)
@given(W=arrays(np.float64, (3, 4), elements=grid), x=arrays(np.float64, 3, elements=grid))
def test_predict_is_argmax_posterior(W, x):
    c = LinearClassifier(W)
    p = c.posterior(x)
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.all(p >= 0)
    assert c.predict(x) == int(np.argmax(p))


def test_pool_matches_members(pool, parts):
    X = parts[3].features
    dec = pool.predict_all(X)
    post = pool.posterior_all(X)
    dist = pool.distance_all(X)
    for i, c in enumerate(pool):
        assert np.array_equal(dec[:, i], c.predict(X))
        np.testing.assert_allclose(post[:, i], c.posterior(X), atol=1e-12)
        np.testing.assert_allclose(dist[:, i], c.decision_distance(X), atol=1e-12)


def test_pool_json_roundtrip(pool, tmp_path):
    pool.save(tmp_path / "pool.json")
    back = Pool.load(tmp_path / "pool.json")
    assert back.fingerprint() == pool.fingerprint()
    assert back.M == pool.M


def test_pool_invariants():
    with pytest.raises(ValueError):
        Pool([LinearClassifier(np.zeros((2, 3)))])
    with pytest.raises(ValueError):
        Pool([LinearClassifier(np.zeros((2, 3))), LinearClassifier(np.zeros((2, 4)))])


def test_bagging_reproducible(parts):
    a = bagging_generate(parts[0], M=4, seed=9, epochs=5)
    b = bagging_generate(parts[0], M=4, seed=9, epochs=5)
    c = bagging_generate(parts[0], M=4, seed=10, epochs=5)
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()
    assert a.M == 4


def test_bagging_redraws_until_all_classes(monkeypatch):
    seen = []
    real = lc.train_perceptron

    def spy(ds, *a, **kw):
        seen.append(sorted(set(ds.labels.tolist())))
        return real(ds, *a, **kw)

    monkeypatch.setattr(lc, "train_perceptron", spy)
    pool = bagging_generate(_ds([[0.0], [1.0]], [0, 1]), M=3, seed=0, epochs=3)
    assert pool.M == 3 and seen == [[0, 1]] * 3


def test_bagging_redraw_cap():
    ds = _ds(np.arange(1000.0)[:, None], np.r_[np.zeros(999, int), 1])
    with pytest.raises(BootstrapError):
        bagging_generate(ds, M=40, seed=0, epochs=1, max_redraws=0)


def test_bagging_pool_size_precondition(parts):
    with pytest.raises(ValueError):
        bagging_generate(parts[0], M=1)


def test_majority_vote_ties():
    assert majority_vote([0, 1, 1], np.full((3, 2), 0.5), 2) == 1
    post = np.array([[0.9, 0.1], [0.4, 0.6]])
    assert majority_vote([0, 1], post, 2) == 0
    assert majority_vote([0, 1], np.array([[0.5, 0.5], [0.5, 0.5]]), 2) == 0


def test_adaboost_separable_stops_round_one():
    X = np.r_[np.linspace(-1, -0.1, 10), np.linspace(0.1, 1, 10)][:, None]
    y = np.r_[np.zeros(10, int), np.ones(10, int)]
    boost = adaboost_train(_ds(X, y), T=50, seed=0)
    assert len(boost) == 1
    assert np.all(boost.predict(X) == y)


def test_adaboost_half_error_round_discarded(monkeypatch):
    calls = []

    def constant(ds, epochs, lr, seed, n_classes=None):
        calls.append(seed)
        return LinearClassifier(np.array([[0.0, 1.0], [0.0, 0.0]]))   # always class 0

    monkeypatch.setattr(lc, "train_perceptron", constant)
    boost = adaboost_train(_ds([[0.0], [1.0]], [0, 1]), T=10)
    assert len(calls) == 1          # error 0.5 on the first round stops training
    assert len(boost) == 1 and boost.alphas.tolist() == [1.0]


def test_adaboost_weighted_vote():
    a = LinearClassifier(np.array([[0.0, 1.0], [0.0, 0.0]]))   # class 0
    b = LinearClassifier(np.array([[0.0, 0.0], [0.0, 1.0]]))   # class 1
    assert AdaBoostM1([a, b, b], np.array([2.5, 1.0, 1.0]), 2).predict(np.zeros((1, 1)))[0] == 0
    assert AdaBoostM1([a, b, b], np.array([1.5, 1.0, 1.0]), 2).predict(np.zeros((1, 1)))[0] == 1


def test_adaboost_preconditions(parts):
    with pytest.raises(ValueError):
        adaboost_train(parts[0], T=0)
