"""Aggregate instances built from traces, and their CSV persistence."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .catalog import PARAM_NAMES, OffloadTiming, ParameterVector, StepKind
from .simulator import OffloadTrace

TARGET_NAMES = ("t_commit", "t_save", "t_transfer", "t_load", "t_start", "t_offload")
COLUMNS = ("instance_id", "platform_id", *PARAM_NAMES, *TARGET_NAMES)


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message carries the offending line number."""


@dataclass(frozen=True)
class DatasetInstance:
    instance_id: int
    platform_id: str
    features: ParameterVector
    targets: OffloadTiming


@dataclass(frozen=True, eq=False)
class Dataset:
    instances: tuple[DatasetInstance, ...]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, i):
        return self.instances[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.instances == other.instances

    @cached_property
    def X(self) -> np.ndarray:
        """Feature matrix, one row per instance, columns P1..P21."""
        return np.array([inst.features.as_array() for inst in self.instances]).reshape(len(self), 21)

    @cached_property
    def Y(self) -> np.ndarray:
        """Target matrix, columns t_commit..t_start, t_offload."""
        return np.array([inst.targets.as_array() for inst in self.instances]).reshape(len(self), 6)

    def target(self, name: StepKind | str) -> np.ndarray:
        if isinstance(name, StepKind):
            name = name.value
        key = name if name.startswith("t_") else f"t_{name}"
        return self.Y[:, TARGET_NAMES.index(key)]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.instances[int(i)] for i in indices))

    @property
    def platform_ids(self) -> list[str]:
        return [inst.platform_id for inst in self.instances]


def aggregate_trace(trace: OffloadTrace, instance_id: int = 0, window: StepKind | None = None) -> DatasetInstance:
    """Average P1-P12 over the trace's samples and attach offline parameters.

    ``window`` restricts the average to samples taken while that step was
    active; it falls back to the whole offload when the step got no sample.
    """
    if len(trace) == 0:
        raise ValueError("trace has no runtime samples")
    values = trace.values
    if window is not None:
        sel = np.array([s is StepKind(window) for s in trace.active_steps])
        if sel.any():
            values = values[sel]
    runtime = values.mean(axis=0)
    cfg = trace.config
    offline = [
        cfg.image_mb,
        cfg.cloud.cores,
        cfg.cloud.memory_gb,
        cfg.cloud.disk_gb,
        cfg.fog.cores,
        cfg.fog.memory_gb,
        cfg.fog.disk_gb,
        cfg.network.bandwidth_bps,
        cfg.network.latency_ms,
    ]
    features = ParameterVector.from_sequence([*runtime, *offline])
    return DatasetInstance(instance_id, cfg.platform_id, features, trace.timing)


def build_dataset(traces: Iterable[OffloadTrace], window: StepKind | None = None) -> Dataset:
    instances = tuple(aggregate_trace(t, i, window) for i, t in enumerate(traces))
    if not instances:
        raise ValueError("cannot build a dataset from zero traces")
    return Dataset(instances)


def raw_data_points(traces: Iterable[OffloadTrace]) -> int:
    """21 readings per runtime sample, summed over all traces."""
    return 21 * sum(len(t) for t in traces)


def dataset_from_arrays(X: np.ndarray, Y: np.ndarray, platform_ids: Sequence[str] | None = None) -> Dataset:
    """Build a dataset from a 21-column feature matrix and 5 step targets (or 6 with total)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if platform_ids is None:
        platform_ids = ["synthetic"] * len(X)
    instances = []
    for i, (x, y) in enumerate(zip(X, Y)):
        timing = OffloadTiming.from_steps(*y[:5]) if len(y) == 5 else OffloadTiming(*y)
        instances.append(DatasetInstance(i, platform_ids[i], ParameterVector.from_sequence(x), timing))
    return Dataset(tuple(instances))


def _format(v: float) -> str:
    # repr is the shortest string that round-trips the double exactly.
    return repr(float(v))


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for inst in ds:
        writer.writerow(
            [
                inst.instance_id,
                inst.platform_id,
                *(_format(v) for v in inst.features.as_array()),
                *(_format(v) for v in inst.targets.as_array()),
            ]
        )
    return buf.getvalue()


def write_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv(ds), encoding="utf-8", newline="\n")


def parse_dataset(text: str) -> Dataset:
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise DatasetFormatError("line 1: empty file, expected header") from None
    if tuple(header) != COLUMNS:
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise DatasetFormatError(f"line 1: header is missing column(s) {', '.join(missing)}")
        extra = [c for c in header if c not in COLUMNS]
        if extra:
            raise DatasetFormatError(f"line 1: unexpected column(s) {', '.join(extra)}")
        raise DatasetFormatError("line 1: columns are out of order")

    instances = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise DatasetFormatError(f"line {lineno}: expected {len(COLUMNS)} columns, got {len(row)}")
        try:
            instance_id = int(row[0])
        except ValueError:
            raise DatasetFormatError(f"line {lineno}: instance_id {row[0]!r} is not an integer") from None
        numbers = []
        for name, cell in zip(COLUMNS[2:], row[2:]):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetFormatError(f"line {lineno}: {name} value {cell!r} is not numeric") from None
            if not math.isfinite(v):
                raise DatasetFormatError(f"line {lineno}: {name} value {cell!r} is not finite")
            numbers.append(v)
        features = ParameterVector.from_sequence(numbers[:21])
        targets = OffloadTiming(*numbers[21:])
        instances.append(DatasetInstance(instance_id, row[1], features, targets))
    if not instances:
        raise DatasetFormatError("dataset has a header but no rows")
    return Dataset(tuple(instances))


def read_dataset(path: str | Path) -> Dataset:
    return parse_dataset(Path(path).read_text(encoding="utf-8"))

