import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogoffload.catalog import NetworkProfile, StepKind, StressProfile
from fogoffload.estimators import (
    ForestParams,
    ModelParams,
    PmrParams,
    SvrParams,
    fit_mlr,
    fit_model,
    fit_pmr,
    fit_rfr,
    fit_svr,
    model_from_dict,
    model_to_dict,
    monomial_exponents,
    predict,
)
from fogoffload.estimators.linear import expand
from fogoffload.simulator import CLOUD_1, FOG_1, GroundTruthModel, step_duration

KINDS = ("mlr", "pmr", "rfr", "svr")
FAST = ModelParams(rfr=ForestParams(n_trees=20))


def test_mlr_recovers_a_line():
    x = np.arange(20.0)[:, None]
    m = fit_mlr(x, 2 * x[:, 0] + 3)
    assert m.coef[0] == pytest.approx(2.0, abs=1e-6)
    assert m.intercept == pytest.approx(3.0, abs=1e-5)
    assert predict(m, [100.0]) == pytest.approx(203.0, abs=1e-4)


@pytest.mark.parametrize("kind", ["mlr", "pmr", "svr", "rfr"])
def test_constant_target_is_reproduced(kind):
    X = np.random.default_rng(0).normal(size=(30, 3))
    m = fit_model(kind, X, np.full(30, 5.0), FAST)
    np.testing.assert_allclose(m.predict(X), 5.0, atol=1e-9)


def test_mlr_recovers_transfer_time_from_size_over_bandwidth():
    rng = np.random.default_rng(1)
    model = GroundTruthModel(eta=0.0)

    def sample(n):
        sizes = rng.uniform(50, 800, n)
        bws = rng.choice([3.2e6, 10e6, 25e6, 100e6, 1e9], n)
        lat = rng.uniform(1, 100, n)
        y = [
            step_duration(StepKind.TRANSFER, model, CLOUD_1, FOG_1, NetworkProfile(b, l), StressProfile(), s, rng)
            for s, b, l in zip(sizes, bws, lat)
        ]
        return np.column_stack([sizes / bws, lat]), np.array(y)

    X, y = sample(300)
    Xt, yt = sample(500)
    m = fit_mlr(X, y)
    assert np.abs(m.predict(Xt) - yt).mean() <= 1e-3
    # slope in seconds per (MB / bit/s) is rho * 8e6
    assert m.coef[0] == pytest.approx(0.4 * 8e6, rel=1e-6)


def test_pmr_recovers_a_square():
    x = np.linspace(-3, 5, 40)[:, None]
    m = fit_pmr(x, x[:, 0] ** 2, degree=2)
    raw = m.raw_coefficients()
    assert raw[(2,)] == pytest.approx(1.0, abs=1e-6)
    assert raw[(1,)] == pytest.approx(0.0, abs=1e-5)
    assert raw[(0,)] == pytest.approx(0.0, abs=1e-5)


def test_pmr_degree_one_equals_mlr():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 5))
    y = X @ rng.normal(size=5) + rng.normal(size=60)
    np.testing.assert_allclose(fit_pmr(X, y, 1).predict(X), fit_mlr(X, y).predict(X), atol=1e-9)


def test_term_count_for_21_features_at_degree_2():
    brute = {tuple(sorted(c)) for r in range(3) for c in itertools.combinations_with_replacement(range(21), r)}
    assert len(brute) == 253
    exps = monomial_exponents(21, 2)
    assert len(exps) == 253
    assert len({tuple(e) for e in exps}) == 253
    assert exps[0].sum() == 0 and exps.sum(axis=1).max() == 2


def test_expansion_matches_direct_products():
    Z = np.random.default_rng(3).normal(size=(4, 3))
    Phi = expand(Z, monomial_exponents(3, 2))
    for row, z in zip(Phi, Z):
        expected = [1.0, *z, *(z[i] * z[j] for i in range(3) for j in range(i, 3))]
        assert sorted(row) == pytest.approx(sorted(expected))


def test_pmr_term_budget():
    X = np.random.default_rng(0).normal(size=(10, 21))
    with pytest.raises(ValueError, match="terms"):
        fit_pmr(X, X[:, 0], degree=4, max_terms=5000)


def test_rfr_stump_predicts_the_mean():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(25, 2)), rng.normal(size=25)
    m = fit_rfr(X, y, ForestParams(n_trees=5, max_depth=0, bootstrap=False))
    np.testing.assert_allclose(m.predict(X), y.mean(), rtol=0, atol=1e-12)


def test_rfr_memorizes_distinct_rows():
    rng = np.random.default_rng(5)
    X, y = rng.normal(size=(50, 3)), rng.normal(size=50)
    params = ForestParams(n_trees=3, max_depth=None, min_samples_leaf=1, max_features=3, bootstrap=False)
    assert np.abs(fit_rfr(X, y, params).predict(X) - y).max() <= 1e-9


def test_rfr_beats_mlr_on_a_step_function():
    rng = np.random.default_rng(6)
    X = rng.uniform(-1, 1, size=(400, 2))
    y = np.where(X[:, 0] > 0, 10.0, 0.0)
    Xt = rng.uniform(-1, 1, size=(400, 2))
    yt = np.where(Xt[:, 0] > 0, 10.0, 0.0)
    rf = np.abs(fit_rfr(X, y, ForestParams(n_trees=30)).predict(Xt) - yt).mean()
    lin = np.abs(fit_mlr(X, y).predict(Xt) - yt).mean()
    assert rf < 0.5 * lin


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 40))
def test_rfr_predictions_stay_within_target_range(seed, n):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(n, 3)), rng.normal(size=n)
    m = fit_rfr(X, y, ForestParams(n_trees=5), seed=seed)
    p = m.predict(rng.normal(scale=5, size=(50, 3)))
    assert p.min() >= y.min() - 1e-12 and p.max() <= y.max() + 1e-12


def test_rfr_rejects_oversized_leaves():
    with pytest.raises(ValueError, match="min_samples_leaf"):
        fit_rfr(np.zeros((3, 2)), np.zeros(3), ForestParams(min_samples_leaf=4))


def test_linear_svr_fits_identity_within_epsilon():
    x = np.linspace(0, 10, 60)[:, None]
    m = fit_svr(x, x[:, 0], SvrParams(kernel="linear", C=100.0, epsilon=0.1))
    assert np.abs(m.predict(x) - x[:, 0]).mean() <= 0.1 + 1e-6


def test_svr_constant_target():
    X = np.random.default_rng(0).normal(size=(20, 2))
    m = fit_svr(X, np.full(20, 5.0))
    assert m.bias == pytest.approx(5.0)
    assert len(m.dual_coef) == 0 or np.abs(m.dual_coef).max() == 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 50.0))
def test_svr_dual_feasibility(seed, C):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = np.sin(X[:, 0]) * 5 + rng.normal(size=40)
    m = fit_svr(X, y, SvrParams(C=C, epsilon=0.2))
    assert abs(m.dual_coef.sum()) <= 1e-6
    assert np.abs(m.dual_coef).max(initial=0) <= C + 1e-9
    obj = np.array(m.meta["dual_objective"])
    assert np.all(np.diff(obj) <= 1e-9 * (1 + np.abs(obj[:-1])))


def test_svr_reports_convergence():
    X = np.random.default_rng(1).normal(size=(50, 2))
    m = fit_svr(X, X[:, 0] * 3)
    assert m.meta["converged"] and m.meta["iterations"] <= m.meta["max_iterations"]


@pytest.mark.parametrize("bad", [dict(C=0.0), dict(epsilon=0.0), dict(gamma=-1.0), dict(kernel="poly")])
def test_svr_rejects_bad_parameters(bad):
    with pytest.raises(ValueError):
        fit_svr(np.zeros((4, 1)) + np.arange(4)[:, None], np.arange(4.0), SvrParams(**bad))


@pytest.mark.parametrize("kind", ["mlr", "pmr", "svr"])
def test_standardized_models_ignore_unit_changes(kind):
    rng = np.random.default_rng(7)
    X = rng.uniform(1, 2, size=(60, 3))
    y = X[:, 0] * 4 - X[:, 1] ** 2 + X[:, 2]
    scale = np.array([1e3, 1e-3, 1e6])
    a = fit_model(kind, X, y).predict(X)
    b = fit_model(kind, X * scale, y).predict(X * scale)
    np.testing.assert_allclose(a, b, atol=1e-6 * np.abs(y).max())


@pytest.mark.parametrize("kind", KINDS)
def test_json_round_trip(kind):
    rng = np.random.default_rng(8)
    X, y = rng.normal(size=(40, 4)), rng.normal(size=40)
    m = fit_model(kind, X, y, FAST, seed=3)
    back = model_from_dict(json.loads(json.dumps(model_to_dict(m))))
    Xt = rng.normal(size=(30, 4))
    np.testing.assert_allclose(back.predict(Xt), m.predict(Xt), rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_fitting_is_deterministic(kind):
    rng = np.random.default_rng(9)
    X, y = rng.normal(size=(40, 4)), rng.normal(size=40)
    a = fit_model(kind, X, y, FAST, seed=5).predict(X)
    b = fit_model(kind, X, y, FAST, seed=5).predict(X)
    np.testing.assert_array_equal(a, b)


def test_forest_seed_matters():
    rng = np.random.default_rng(9)
    X, y = rng.normal(size=(40, 4)), rng.normal(size=40)
    assert not np.array_equal(fit_rfr(X, y, seed=1).predict(X), fit_rfr(X, y, seed=2).predict(X))


def test_dimension_mismatch_and_unknown_kind():
    m = fit_mlr(np.eye(3), np.arange(3.0))
    with pytest.raises(ValueError, match="expects 3"):
        predict(m, [1.0, 2.0])
    assert isinstance(predict(m, [1.0, 2.0, 3.0]), float)
    assert predict(m, np.ones((4, 3))).shape == (4,)
    with pytest.raises(ValueError, match="unknown model kind"):
        fit_model("knn", np.eye(3), np.arange(3.0))
    with pytest.raises(ValueError):
        model_from_dict({"kind": "knn"})


def test_fit_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fit_mlr(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        fit_mlr(np.ones((3, 2)), np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ValueError):
        fit_mlr(np.ones((0, 2)), np.ones(0))
