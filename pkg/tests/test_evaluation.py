import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogoffload.catalog import STEPS, FeatureMask, ParameterVector, StepKind
from fogoffload.dataset import dataset_from_arrays
from fogoffload.estimators import ForestParams, ModelParams
from fogoffload.estimators.linear import LinearModel
from fogoffload.evaluation import (
    ComponentModel,
    EvalReport,
    EvalSettings,
    FeatureOptions,
    FeatureSpec,
    IndividualEstimator,
    accuracy,
    compare_reports,
    cross_validate,
    estimator_from_dict,
    evaluate_split,
    format_comparison,
    holdout_evaluate,
    holdout_split,
    kfold_split,
    mae,
    parse_reports,
    predict_offload,
    reports_to_csv,
    train_collective,
    train_estimator,
    train_individual,
)

FAST = ModelParams(rfr=ForestParams(n_trees=10))


def _constant_component(value, columns=21):
    spec = FeatureSpec(FeatureMask(tuple(range(1, columns + 1))))
    return ComponentModel(spec, LinearModel(float(value), np.zeros(columns)))


def _fixed_im(values):
    return IndividualEstimator("mlr", {s: _constant_component(v) for s, v in zip(STEPS, values)})


# -- metrics ------------------------------------------------------------------------


def test_metric_examples():
    assert mae([1, 2, 3], [1, 2, 3]) == 0.0
    assert mae([2, 4], [1, 1]) == 2.0
    assert accuracy([10, 20], [10, 20]) == 100.0
    assert accuracy([11, 18], [10, 20]) == 90.0
    assert accuracy([100.0], [1.0]) == 0.0
    assert accuracy([1, 2, 3], [1, 2, 3], "r2") == 100.0
    assert accuracy([2, 2, 2], [1, 2, 3], "r2") == 0.0


def test_metric_errors():
    with pytest.raises(ValueError):
        mae([1], [1, 2])
    with pytest.raises(ValueError):
        mae([], [])
    with pytest.raises(ValueError):
        accuracy([1.0], [0.0])
    with pytest.raises(ValueError):
        accuracy([1.0, 2.0], [3.0, 3.0], "r2")
    with pytest.raises(ValueError):
        accuracy([1.0], [1.0], "rmse")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0.1, 1e3)), min_size=2, max_size=50))
def test_metric_ranges(pairs):
    p, t = map(np.array, zip(*pairs))
    assert mae(p, t) >= 0
    assert 0 <= accuracy(p, t) <= 100
    if np.ptp(t) > 0:
        assert 0 <= accuracy(p, t, "r2") <= 100


# -- splits -------------------------------------------------------------------------


def test_kfold_examples():
    folds = kfold_split(10, 3, 0)
    assert sorted(len(f) for f in folds) == [3, 3, 4]
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    assert [len(f) for f in kfold_split(5, 5, 1)] == [1] * 5
    for bad in [(5, 1), (5, 6)]:
        with pytest.raises(ValueError):
            kfold_split(*bad, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 300), st.data())
def test_kfold_partition_properties(n, data):
    k = data.draw(st.integers(2, n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    folds = kfold_split(n, k, seed)
    flat = np.concatenate(folds)
    assert len(folds) == k
    assert sorted(flat.tolist()) == list(range(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    again = kfold_split(n, k, seed)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))


def _small_dataset(n=12, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(1, 10, size=(n, 21))
    Y = rng.uniform(0.5, 5, size=(n, 5))
    return dataset_from_arrays(X, Y)


def test_leave_one_out_equals_singleton_holdouts():
    ds = _small_dataset(12)
    for kind in ("mlr", "rfr"):
        cv = cross_validate(ds, kind, "im", 12, seed=3, settings=EvalSettings(params=FAST))
        singles = [evaluate_split(ds, kind, "im", np.setdiff1d(np.arange(12), [i]), [i], 3, EvalSettings(params=FAST)) for i in range(12)]
        assert cv.mae == pytest.approx(math.fsum(s[0] for s in singles) / 12, abs=1e-12)
        assert cv.accuracy == pytest.approx(math.fsum(s[1] for s in singles) / 12, abs=1e-9)
        assert cv.n_test == 1 and cv.n_train == 11


def test_holdout_counts():
    train, test = holdout_split(100, 0.7, 4)
    assert len(train) == 70 and len(test) == 30
    assert sorted(np.concatenate([train, test]).tolist()) == list(range(100))
    with pytest.raises(ValueError):
        holdout_split(3, 0.1, 0)
    with pytest.raises(ValueError):
        holdout_split(10, 1.0, 0)
    r = holdout_evaluate(_small_dataset(20), "mlr", "cm", 0.5, 0)
    assert (r.n_train, r.n_test, r.split_label) == (10, 10, "holdout:0.5")


# -- training -----------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["mlr", "pmr", "svr", "rfr"])
def test_single_instance_training(kind):
    ds = _small_dataset(1)
    params = ModelParams(rfr=ForestParams(n_trees=3, min_samples_leaf=1))
    for method in ("cm", "im"):
        est = train_estimator(ds, kind, method, params=params)
        assert est.predict(ds.X)[0] == pytest.approx(ds.target("offload")[0], abs=1e-6)


def test_transfer_model_sees_three_columns():
    est = train_individual(_small_dataset(), "mlr")
    spec = est.components[StepKind.TRANSFER].spec
    assert spec.mask.included == (13, 20, 21)
    assert spec.transfer_rate and spec.width == 4
    plain = train_individual(_small_dataset(), "mlr", options=FeatureOptions(im_transfer_rate=False))
    assert plain.components[StepKind.TRANSFER].spec.width == 3
    cm = train_collective(_small_dataset(), "mlr")
    assert cm.component.spec.width == 21


def test_constant_step_targets_are_predicted():
    rng = np.random.default_rng(1)
    X = rng.uniform(1, 10, size=(15, 21))
    Y = np.tile([0.5, 2.0, 3.23, 1.1, 0.8], (15, 1))
    ds = dataset_from_arrays(X, Y)
    for kind in ("mlr", "pmr", "rfr", "svr"):
        parts = train_individual(ds, kind, params=FAST).predict_steps(X)
        np.testing.assert_allclose(parts, Y, atol=1e-9)


def test_breakdown_sums_to_total():
    pred = predict_offload(_fixed_im([0.5, 2.0, 3.23, 1.1, 0.8]), np.ones(21))
    assert pred.total == pytest.approx(7.63, abs=1e-12)
    assert abs(pred.total - sum(pred.breakdown.values())) <= 1e-9
    assert predict_offload(_fixed_im([1.0] * 5), ParameterVector.from_sequence([1.0] * 21)).total == 5.0
    with pytest.raises(ValueError):
        predict_offload(_fixed_im([1.0] * 5), np.ones(20))


def test_step_models_ignore_columns_outside_their_mask():
    ds = _small_dataset(40, seed=2)
    est = train_individual(ds, "rfr", params=FAST)
    X = ds.X.copy()
    base = est.predict_steps(X)
    rng = np.random.default_rng(3)
    for i, step in enumerate(STEPS):
        outside = [c for c in range(1, 22) if c not in est.components[step].spec.mask.included]
        Xp = X.copy()
        Xp[:, np.array(outside) - 1] = rng.uniform(1, 10, size=(len(X), len(outside)))
        np.testing.assert_array_equal(est.predict_steps(Xp)[:, i], base[:, i])


def test_estimator_dict_round_trip():
    ds = _small_dataset(20)
    for method in ("cm", "im"):
        est = train_estimator(ds, "pmr", method)
        back = estimator_from_dict(est.to_dict())
        np.testing.assert_allclose(back.predict(ds.X), est.predict(ds.X), rtol=0, atol=1e-12)


def test_unknown_method_and_kind():
    with pytest.raises(ValueError):
        train_estimator(_small_dataset(), "mlr", "xm")
    with pytest.raises(ValueError):
        train_estimator(_small_dataset(), "gbm", "cm")


# -- noiseless pipeline -------------------------------------------------------------


@pytest.mark.xfail(strict=True, reason="default forest (ceil(d/3) features per split) measures about 1.07 s; see decisions ledger")
def test_noiseless_rfr_training_mae_default_forest(noiseless_dataset):
    est = train_collective(noiseless_dataset, "rfr")
    assert mae(est.predict(noiseless_dataset.X), noiseless_dataset.target("offload")) <= 0.5


def test_noiseless_rfr_training_mae_with_all_features_per_split(noiseless_dataset):
    params = ModelParams(rfr=ForestParams(max_depth=None, min_samples_leaf=1, max_features=21))
    est = train_collective(noiseless_dataset, "rfr", params=params)
    assert mae(est.predict(noiseless_dataset.X), noiseless_dataset.target("offload")) <= 0.5


def test_mlr_cannot_fit_the_inverse_bandwidth_term(noiseless_dataset):
    est = train_collective(noiseless_dataset, "mlr")
    assert mae(est.predict(noiseless_dataset.X), noiseless_dataset.target("offload")) > 1.0


def test_noiseless_pmr_disk_steps(noiseless_dataset):
    est = train_individual(noiseless_dataset, "pmr", options=FeatureOptions(im_transfer_rate=False))
    parts = est.predict_steps(noiseless_dataset.X)
    for i, step in enumerate(STEPS):
        if step in (StepKind.COMMIT, StepKind.SAVE, StepKind.LOAD):
            assert mae(parts[:, i], noiseless_dataset.target(step)) < 0.1


@pytest.mark.parametrize("k", [3, 5, 10])
def test_noiseless_im_pmr_accuracy(noiseless_dataset, k):
    assert cross_validate(noiseless_dataset, "pmr", "im", k, seed=0).accuracy >= 99.0


# -- reports ------------------------------------------------------------------------


def _report(method, kind, mae_, acc, split="kfold", value=10.0, steps=None):
    return EvalReport(method, kind, split, value, mae_, acc, "mape", 90, 10, 0, steps)


def test_report_invariants():
    with pytest.raises(ValueError):
        _report("cm", "mlr", -1.0, 50.0)
    with pytest.raises(ValueError):
        _report("cm", "mlr", 1.0, 101.0)


def test_report_csv_round_trip():
    steps = {s.value: 0.1 * (i + 1) for i, s in enumerate(STEPS)}
    reports = [_report("im", "pmr", 1.7, 99.123456789, steps=steps), _report("cm", "rfr", 6.76, 97.0, "holdout", 0.8)]
    assert parse_reports(reports_to_csv(reports)) == reports
    with pytest.raises(ValueError, match="line 1"):
        parse_reports("a,b\n")


def test_compare_picks_lowest_mae_per_method():
    reports = [
        _report("im", "pmr", 1.7, 99.0),
        _report("im", "mlr", 1.9, 99.5),
        _report("cm", "rfr", 6.76, 97.0),
        _report("cm", "pmr", 8.0, 90.0),
    ]
    c = compare_reports(reports)
    assert c.best_per_method["im"].kind == "pmr"
    assert c.best_per_method["cm"].kind == "rfr"
    assert (c.overall_best.method, c.overall_best.kind) == ("im", "pmr")
    assert c.deltas["pmr"] == pytest.approx((-6.3, 9.0))
    text = format_comparison(c)
    assert "best IM: PMR" in text and "best CM: RFR" in text


def test_compare_single_row_and_ties():
    only = compare_reports([_report("cm", "svr", 3.0, 80.0)])
    assert only.overall_best.kind == "svr" and only.deltas == {}
    tie = compare_reports([_report("cm", "svr", 3.0, 80.0), _report("cm", "mlr", 3.0, 85.0), _report("cm", "pmr", 3.0, 85.0)])
    assert tie.best_per_method["cm"].kind == "mlr"
    with pytest.raises(ValueError):
        compare_reports([])
