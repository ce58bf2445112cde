import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogoffload.catalog import NetworkProfile, OffloadTiming, StepKind, StressProfile
from fogoffload.dataset import (
    COLUMNS,
    DatasetFormatError,
    aggregate_trace,
    build_dataset,
    dataset_from_arrays,
    dataset_to_csv,
    parse_dataset,
    raw_data_points,
    read_dataset,
    write_dataset,
)
from fogoffload.simulator import CLOUD_1, FOG_1, OffloadTrace, TraceConfig, write_traces


def _trace(values, steps=None):
    values = np.asarray(values, dtype=float)
    n = len(values)
    steps = steps or [StepKind.COMMIT] * n
    cfg = TraceConfig("t", CLOUD_1, FOG_1, NetworkProfile(25e6, 30.0), StressProfile(), 250.0, 0)
    timing = OffloadTiming.from_steps(0.5, 0.5, n - 2.5, 0.5, 0.5)
    return OffloadTrace(cfg, np.arange(n, dtype=float), tuple(steps), values, timing)


def test_constant_samples_aggregate_to_the_constant():
    row = np.arange(1, 13, dtype=float) * 3.5
    inst = aggregate_trace(_trace(np.tile(row, (7, 1))))
    assert inst.features.as_array()[:12].tolist() == row.tolist()


def test_mean_of_three_samples():
    vals = np.zeros((3, 12))
    vals[:, 0] = [10, 20, 30]
    inst = aggregate_trace(_trace(vals))
    assert inst.features.p1 == 20.0


def test_offline_parameters_come_from_the_configuration():
    inst = aggregate_trace(_trace(np.ones((4, 12))))
    f = inst.features
    assert (f.p13, f.p14, f.p15, f.p16, f.p17, f.p18, f.p19) == (250.0, 6, 6.0, 30.0, 2, 2.0, 20.0)
    assert (f.p20, f.p21) == (25e6, 30.0)


def test_step_window_restricts_the_average():
    vals = np.zeros((4, 12))
    vals[:, 0] = [10, 20, 50, 70]
    steps = [StepKind.COMMIT, StepKind.COMMIT, StepKind.SAVE, StepKind.SAVE]
    assert aggregate_trace(_trace(vals, steps), window=StepKind.SAVE).features.p1 == 60.0
    # a step with no sample falls back to the whole offload
    assert aggregate_trace(_trace(vals, steps), window=StepKind.LOAD).features.p1 == 37.5


def test_aggregates_match_a_file_level_recomputation(tmp_path, quick_traces):
    path = tmp_path / "t.jsonl"
    write_traces(quick_traces[:30], path)
    ds = build_dataset(quick_traces[:30])
    with open(path) as fh:
        for inst, line in zip(ds, fh):
            samples = json.loads(line)["samples"]
            for j in range(12):
                column = [s["values"][j] for s in samples]
                expected = math.fsum(column) / len(column)
                assert inst.features[j + 1] == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_means_lie_between_sample_extremes(quick_traces, quick_dataset):
    for trace, inst in zip(quick_traces, quick_dataset):
        agg = inst.features.as_array()[:12]
        assert np.all(trace.values.min(axis=0) - 1e-9 <= agg)
        assert np.all(agg <= trace.values.max(axis=0) + 1e-9)


def test_one_instance_per_trace_in_order(quick_traces, quick_dataset):
    assert len(quick_dataset) == len(quick_traces)
    for i, (trace, inst) in enumerate(zip(quick_traces, quick_dataset)):
        assert inst.instance_id == i
        assert inst.targets == trace.timing
        assert inst.features.p13 == trace.config.image_mb
    assert raw_data_points(quick_traces) == 21 * sum(len(t) for t in quick_traces)


def test_empty_inputs_rejected():
    with pytest.raises(ValueError):
        build_dataset([])
    with pytest.raises(ValueError):
        aggregate_trace(_trace(np.zeros((0, 12))))


def test_csv_round_trip_is_exact(tmp_path, quick_dataset):
    path = tmp_path / "d.csv"
    write_dataset(quick_dataset, path)
    back = read_dataset(path)
    assert back == quick_dataset
    np.testing.assert_array_equal(back.X, quick_dataset.X)
    assert dataset_to_csv(back) == path.read_text()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-300, 1e300), min_size=26, max_size=26))
def test_csv_round_trip_of_arbitrary_doubles(values):
    X = np.array([values[:21]])
    ds = dataset_from_arrays(X, np.array([values[21:26]]))
    back = parse_dataset(dataset_to_csv(ds))
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.Y, ds.Y)


def test_hand_written_fixture():
    header = ",".join(COLUMNS)
    row1 = ",".join(["0", "p1", *["1.5"] * 21, "1", "2", "3", "4", "5", "15"])
    row2 = ",".join(["7", "p2", *["2"] * 21, "0.5", "0.5", "0.5", "0.5", "0.5", "2.5"])
    ds = parse_dataset(f"{header}\n{row1}\n{row2}\n")
    assert len(ds) == 2
    assert ds[1].instance_id == 7 and ds.platform_ids == ["p1", "p2"]
    assert ds.target("offload").tolist() == [15.0, 2.5]
    assert ds.target(StepKind.TRANSFER).tolist() == [3.0, 0.5]
    assert ds.X.shape == (2, 21) and ds.X[0, 20] == 1.5


def test_missing_target_column_named():
    cols = [c for c in COLUMNS if c != "t_offload"]
    with pytest.raises(DatasetFormatError, match="t_offload"):
        parse_dataset(",".join(cols) + "\n")


def test_bad_cell_reports_line_number():
    header = ",".join(COLUMNS)
    good = ",".join(["0", "p", *["1"] * 21, "1", "1", "1", "1", "1", "5"])
    bad = ",".join(["1", "p", "x", *["1"] * 20, "1", "1", "1", "1", "1", "5"])
    with pytest.raises(DatasetFormatError, match="line 3: p1"):
        parse_dataset(f"{header}\n{good}\n{bad}\n")
    short = ",".join(["1", "p", "1"])
    with pytest.raises(DatasetFormatError, match="line 2"):
        parse_dataset(f"{header}\n{short}\n")
    with pytest.raises(DatasetFormatError, match="line 1"):
        parse_dataset("")


def test_serialization_is_byte_stable(tmp_path, quick_dataset):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset(quick_dataset, a)
    write_dataset(read_dataset(a), b)
    assert a.read_bytes() == b.read_bytes()
