import numpy as np
import pytest

from metades.meta_classifier import MetaClassifier, lm_normal_equations, sse, train


def _fd_jacobian(model, X, theta, h=1e-6):
    J = np.empty((len(X), len(theta)))
    for p in range(len(theta)):
        e = np.zeros_like(theta)
        e[p] = h
        J[:, p] = (model.forward(X, theta + e) - model.forward(X, theta - e)) / (2 * h)
    return J


@pytest.mark.parametrize("seed", range(5))
def test_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    model = MetaClassifier(5, 3)
    theta = rng.normal(0, 1.0, model.n_params)
    X = rng.random((12, 5))
    J = model.jacobian(X, theta)
    F = _fd_jacobian(model, X, theta)
    assert np.linalg.norm(J - F) / np.linalg.norm(F) < 1e-5


def test_chunked_normal_equations_equal_full():
    rng = np.random.default_rng(0)
    model = MetaClassifier(4, 3)
    theta = model.init_params(rng)
    X, t = rng.random((50, 4)), rng.integers(0, 2, 50).astype(float)
    a = lm_normal_equations(model, X, t, theta, chunk=7)
    b = lm_normal_equations(model, X, t, theta, chunk=1000)
    J = model.jacobian(X, theta)
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)
    np.testing.assert_allclose(b[0], J.T @ J, atol=1e-12)
    np.testing.assert_allclose(a[1], J.T @ (model.forward(X, theta) - t), atol=1e-12)


def _separable(n=600, seed=0, K=7):
    rng = np.random.default_rng(seed)
    f1 = rng.integers(0, 2, (n, K)).astype(float)
    f3 = f1.mean(axis=1, keepdims=True)
    X = np.hstack([f1, rng.random((n, K)), f3, rng.integers(0, 2, (n, 5)), rng.random((n, 1))])
    return X, (f3[:, 0] > 0.5).astype(int)


def test_separable_meta_set_validation_accuracy():
    X, y = _separable()
    model = train(X, y, seed=1)
    Xv, yv = _separable(seed=2)
    assert np.mean((model.forward(Xv) >= 0.5) == yv) >= 0.95


def test_accepted_steps_never_increase_sse():
    X, y = _separable(300, seed=3)
    steps = []
    train(X, y, seed=0, on_step=lambda a, b: steps.append((a, b)))
    assert steps and all(after <= before for before, after in steps)


def test_constant_features_terminate_near_base_rate():
    y = np.r_[np.ones(70, int), np.zeros(30, int)]
    model = train(np.full((100, 6), 0.5), y, seed=0)
    assert len(model.training_log) <= 101
    assert model.forward(np.full((1, 6), 0.5))[0] == pytest.approx(0.7, abs=0.05)


def test_training_deterministic():
    X, y = _separable(200, seed=4)
    a, b = train(X, y, seed=5), train(X, y, seed=5)
    assert np.array_equal(a.theta, b.theta)


def test_training_errors():
    with pytest.raises(ValueError, match="single"):
        train(np.zeros((50, 3)), np.ones(50))
    with pytest.raises(ValueError, match="too small"):
        train(np.zeros((20, 3)), np.arange(20) % 2)


def test_training_log_and_best_weights():
    X, y = _separable(400, seed=6)
    model = train(X, y, seed=0)
    log = model.training_log
    assert log[0]["epoch"] == 0 and all("val_mse" in e for e in log)
    assert len(log) - 1 <= 100


def test_is_competent_threshold():
    model = MetaClassifier(3, 2)
    model.theta = np.zeros(model.n_params)
    assert model.is_competent(np.array([0.2, 0.9, 0.1])) == (True, 0.5)
    # output bias alone sets the confidence
    model.theta[-1] = np.log(0.73 / 0.27)
    ok, conf = model.is_competent(np.zeros(3))
    assert ok and conf == pytest.approx(0.73)
    model.theta[-1] = -1.0
    assert model.is_competent(np.zeros(3))[0] is False


def test_dimension_mismatch():
    model = MetaClassifier(3, 2)
    model.theta = np.zeros(model.n_params)
    with pytest.raises(ValueError):
        model.forward(np.zeros((1, 4)))


def test_init_scale():
    model = MetaClassifier(21, 10)
    theta = model.init_params(np.random.default_rng(0))
    W1, b1, w2, b2 = model.unpack(theta)
    assert np.abs(W1).max() <= 0.5 / np.sqrt(21) and np.abs(w2).max() <= 0.5 / np.sqrt(10)


def test_json_roundtrip(tmp_path):
    X, y = _separable(200, seed=7)
    model = train(X, y, seed=0, max_epochs=3)
    model.save(tmp_path / "sel.json")
    back = MetaClassifier.load(tmp_path / "sel.json")
    np.testing.assert_array_equal(back.forward(X), model.forward(X))
    assert back.training_log == model.training_log


def test_sse():
    model = MetaClassifier(2, 1)
    theta = np.zeros(model.n_params)
    assert sse(model, np.zeros((4, 2)), np.array([0, 1, 1, 0.0]), theta) == pytest.approx(1.0)
