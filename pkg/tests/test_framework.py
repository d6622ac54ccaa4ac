import csv

import numpy as np
import pytest

from metades import baselines
from metades.dataset import Dataset
from metades.framework import (AlwaysCompetent, EmptyMetaSetError, MetaDES, MetaDesParams, build_meta_set,
                               meta_train)
from metades.linear_classifiers import LinearClassifier, Pool
from metades.meta_features import F5Scaler, vector_length


def _const(label, L=2):
    W = np.zeros((L, 2))
    W[label, -1] = 1.0
    return LinearClassifier(W)


def _line(n, labels=None):
    labels = np.arange(n) % 2 if labels is None else labels
    return Dataset(np.linspace(0, 1, n)[:, None], np.asarray(labels), ("a", "b"))


class Rigged:
    """Selector returning fixed per-classifier confidences."""

    def __init__(self, conf):
        self.conf = np.asarray(conf, dtype=float)

    def forward(self, X):
        return np.tile(self.conf, len(X) // len(self.conf))


def _model(pool, selector, n=12):
    dsel = _line(n)
    return MetaDES(pool, selector, dsel, MetaDesParams(K=3, Kp=2),
                   F5Scaler().fit(pool.distance_all(dsel.features)))


@pytest.fixture(scope="module")
def trained(pool, parts):
    return MetaDES.fit(pool, parts[1], parts[2], MetaDesParams(), seed=0)


def test_params_validation():
    for bad in ({"K": 0}, {"Kp": 0}, {"hc": 0.0}, {"hc": 1.5}, {"hidden": 0}):
        with pytest.raises(ValueError):
            MetaDesParams(**bad)


def test_filter_off_admits_everything():
    pool = Pool([_const(0), _const(1)])      # always split, consensus 0.5
    meta, _ = build_meta_set(pool, _line(30), MetaDesParams(K=3, Kp=2, hc=1.0))
    assert len(meta) == 30 * 2
    assert meta.X.shape[1] == vector_length(3, 2)


def test_strict_consensus_boundary():
    pool = Pool([_const(0)] * 3 + [_const(1)] * 7)          # consensus exactly 0.7
    with pytest.raises(EmptyMetaSetError):
        build_meta_set(pool, _line(30), MetaDesParams(K=3, Kp=2, hc=0.7))
    meta, _ = build_meta_set(pool, _line(30), MetaDesParams(K=3, Kp=2, hc=0.71))
    assert len(meta) == 30 * 10


def test_filter_off_includes_unanimous_samples():
    pool = Pool([_const(1)] * 4)
    meta, _ = build_meta_set(pool, _line(30), MetaDesParams(K=3, Kp=2, hc=1.0))
    assert len(meta) == 120


def test_nothing_admitted_raises(pool, parts):
    with pytest.raises(EmptyMetaSetError, match="increase hc"):
        build_meta_set(pool, parts[1], MetaDesParams(hc=0.5))


def test_meta_set_cardinality_200_by_100(parts):
    from metades.linear_classifiers import bagging_generate
    from metades.synthetic import gaussians
    big = bagging_generate(parts[0], M=100, seed=0, epochs=5)
    t_lambda = gaussians(n=200, seed=11)
    meta, _ = build_meta_set(big, t_lambda, MetaDesParams(hc=1.0))
    assert len(meta) == 20_000


def test_meta_set_rows_reproduced_at_query_time(pool, parts, trained):
    # the same extraction path, with T_lambda as reference and self-exclusion
    meta = trained.meta_set
    mt = parts[1]
    probe = MetaDES(pool, trained.selector, mt, trained.params, trained.f5_scaler)
    q = np.unique(meta.query_index)
    V = probe.meta_features(mt.features[q], exclude=q)
    np.testing.assert_allclose(V.reshape(-1, V.shape[2]), meta.X, atol=1e-12)
    assert np.array_equal(meta.alpha.reshape(len(q), -1),
                          (pool.predict_all(mt.features[q]) == mt.labels[q, None]).astype(int))


def test_tie_break_by_summed_posterior():
    # posteriors at x: a = (0.9, 0.1) votes 0, b = (0.4, 0.6) votes 1 -> class 0 (1.3 vs 0.7)
    a = LinearClassifier(np.array([[0.0, np.log(9.0)], [0.0, 0.0]]))
    b = LinearClassifier(np.array([[0.0, np.log(0.4 / 0.6)], [0.0, 0.0]]))
    np.testing.assert_allclose(a.posterior(np.array([0.3])), [0.9, 0.1])
    model = _model(Pool([a, b]), AlwaysCompetent())
    label, diag = model.classify(np.array([0.3]))
    assert label == 0 and diag.votes.tolist() == [1, 1] and not diag.fallback


def test_unanimous_competent():
    model = _model(Pool([_const(1), _const(1), _const(1)]), AlwaysCompetent())
    assert model.classify(np.array([0.5]))[0] == 1


def test_fallback_to_most_confident():
    pool = Pool([_const(0), _const(0), _const(1), _const(0)])
    model = _model(pool, Rigged([0.1, 0.3, 0.45, 0.2]))
    label, diag = model.classify(np.array([0.5]))
    assert diag.fallback and diag.selected.tolist() == [2] and label == 1


def test_always_competent_equals_bagging(pool, parts):
    dsel, test = parts[2], parts[3]
    model = MetaDES(pool, AlwaysCompetent(), dsel, MetaDesParams(), F5Scaler().fit(pool.distance_all(dsel.features)))
    pred, diags = model.classify_batch(test.features)
    assert np.array_equal(pred, baselines.pool_vote_predict(pool, test.features))
    assert all(len(d.selected) == pool.M for d in diags)


def test_selection_is_subset_and_nonempty(trained, parts):
    _, diags = trained.classify_batch(parts[3].features)
    for d in diags:
        assert 1 <= len(d.selected) <= trained.pool.M
        assert set(d.selected.tolist()) <= set(range(trained.pool.M))


def test_classify_deterministic(trained, parts):
    a = trained.classify_batch(parts[3].features)[0]
    b = trained.classify_batch(parts[3].features)[0]
    assert np.array_equal(a, b)


def test_evaluate_perfect_pool_on_memorized_points():
    X = np.r_[np.linspace(0, 0.4, 10), np.linspace(0.6, 1, 10)][:, None]
    y = np.r_[np.zeros(10, int), np.ones(10, int)]
    ds = Dataset(X, y, ("a", "b"))
    pool = Pool([LinearClassifier.from_hyperplane([1.0], -0.5), LinearClassifier.from_hyperplane([2.0], -1.0)])
    model = MetaDES(pool, AlwaysCompetent(), ds, MetaDesParams(), F5Scaler().fit(pool.distance_all(X)))
    assert model.evaluate(ds).accuracy == 1.0


def test_evaluate_edge_cases(trained, parts, tmp_path):
    test = parts[3]
    assert trained.evaluate(test.subset([0])).accuracy in (0.0, 1.0)
    with pytest.raises(ValueError):
        trained.evaluate(test.subset([]))
    res = trained.evaluate(test)
    assert 0 <= res.accuracy <= 1 and len(res.ensemble_sizes) == test.n_samples
    res.write_log(tmp_path / "log.csv")
    rows = list(csv.DictReader(open(tmp_path / "log.csv")))
    assert len(rows) == test.n_samples and set(rows[0]) == {"query_index", "selected", "predicted", "true"}
    assert int(rows[3]["predicted"]) == res.predictions[3]


def test_evaluate_on_dsel_excludes_self(trained):
    res = trained.evaluate_on_dsel()
    assert len(res.predictions) == trained.dsel.n_samples


def test_save_load(trained, parts, tmp_path):
    trained.save(tmp_path / "model.json")
    back = MetaDES.load(tmp_path / "model.json", parts[2])
    assert np.array_equal(back.classify_batch(parts[3].features)[0], trained.classify_batch(parts[3].features)[0])
    with pytest.raises(ValueError, match="D_SEL"):
        MetaDES.load(tmp_path / "model.json", parts[3])
    with pytest.raises(TypeError):
        _model(Pool([_const(0), _const(1)]), AlwaysCompetent()).to_dict()


def test_meta_train_helper(pool, parts):
    model = meta_train(pool, parts[1], parts[2], seed=0)
    assert model.selector.input_dim == vector_length(7, 5)


def test_dsel_too_small(pool, parts):
    with pytest.raises(ValueError):
        MetaDES(pool, AlwaysCompetent(), parts[2].subset(range(4)), MetaDesParams(), F5Scaler())
