"""Parameter catalogue, step timings and host/network/stress configuration types.

The 21 parameters are kept in a fixed order P1..P21:

    P1-P3    cloud system CPU / memory / disk utilisation (%)
    P4-P6    cloud offloading-process CPU (%), memory (%), disk throughput (B/s)
    P7-P9    fog system CPU / memory / disk utilisation (%)
    P10-P12  fog offloading-process CPU (%), memory (%), disk throughput (B/s)
    P13      container image size (MB)
    P14-P16  cloud cores, memory size (GB), disk size (GB)
    P17-P19  fog cores, memory size (GB), disk size (GB)
    P20      network bandwidth (bit/s)
    P21      network latency (ms)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

N_PARAMS = 21
PARAM_NAMES = tuple(f"p{i}" for i in range(1, N_PARAMS + 1))
RUNTIME_PARAMS = tuple(range(1, 13))
OFFLINE_PARAMS = tuple(range(13, 22))

PERCENT_PARAMS = (1, 2, 3, 4, 5, 7, 8, 9, 10, 11)
THROUGHPUT_PARAMS = (6, 12)
POSITIVE_PARAMS = (13, 15, 16, 18, 19, 20)
CORE_PARAMS = (14, 17)

STRESS_CAP = 0.75


class StepKind(str, enum.Enum):
    """The five Save-and-Load steps, in execution order."""

    COMMIT = "commit"
    SAVE = "save"
    TRANSFER = "transfer"
    LOAD = "load"
    START = "start"


STEPS: tuple[StepKind, ...] = tuple(StepKind)
MASK_NAMES = tuple(s.value for s in STEPS) + ("collective",)


@dataclass(frozen=True)
class ParameterVector:
    p1: float
    p2: float
    p3: float
    p4: float
    p5: float
    p6: float
    p7: float
    p8: float
    p9: float
    p10: float
    p11: float
    p12: float
    p13: float
    p14: float
    p15: float
    p16: float
    p17: float
    p18: float
    p19: float
    p20: float
    p21: float

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "ParameterVector":
        if len(values) != N_PARAMS:
            raise ValueError(f"expected {N_PARAMS} values, got {len(values)}")
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    def __getitem__(self, index: int) -> float:
        """1-based access, ``pv[13]`` is the image size."""
        if not 1 <= index <= N_PARAMS:
            raise IndexError(index)
        return getattr(self, f"p{index}")

    def replace(self, **changes: float) -> "ParameterVector":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update({k: float(v) for k, v in changes.items()})
        return ParameterVector(**values)


def validate_parameter_vector(pv: ParameterVector | Sequence[float]) -> list[str]:
    """Return every invariant violation; an empty list means the vector is valid."""
    values = list(pv.as_array()) if isinstance(pv, ParameterVector) else list(pv)
    if len(values) != N_PARAMS:
        return [f"expected {N_PARAMS} entries, got {len(values)}"]
    problems = []
    for i, v in enumerate(values, start=1):
        if not math.isfinite(v):
            problems.append(f"p{i} is not finite")
            continue
        if i in PERCENT_PARAMS and not 0.0 <= v <= 100.0:
            problems.append(f"p{i} out of [0,100]")
        elif i in THROUGHPUT_PARAMS and v < 0:
            problems.append(f"p{i} must be >= 0")
        elif i in POSITIVE_PARAMS and v <= 0:
            problems.append(f"p{i} must be > 0")
        elif i in CORE_PARAMS and v < 1:
            problems.append(f"p{i} must be >= 1")
        elif i == 21 and v < 0:
            problems.append("p21 must be >= 0")
    return problems


@dataclass(frozen=True)
class FeatureMask:
    """Ascending, 1-based parameter indices fed to one model."""

    included: tuple[int, ...]

    def __post_init__(self):
        inc = tuple(int(i) for i in self.included)
        if not inc:
            raise ValueError("feature mask must not be empty")
        if len(set(inc)) != len(inc):
            raise ValueError(f"duplicate indices in mask {inc}")
        if any(not 1 <= i <= N_PARAMS for i in inc):
            raise ValueError(f"mask indices must lie in 1..{N_PARAMS}: {inc}")
        object.__setattr__(self, "included", tuple(sorted(inc)))

    def __len__(self) -> int:
        return len(self.included)

    def __iter__(self):
        return iter(self.included)

    def __contains__(self, index: object) -> bool:
        return index in self.included

    @property
    def columns(self) -> np.ndarray:
        """0-based column positions into a 21-wide design matrix."""
        return np.asarray(self.included, dtype=int) - 1

    def select(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X[..., self.columns]


_CLOUD_SIDE = (*range(1, 7), *range(13, 20))
_FOG_SIDE = tuple(range(7, 20))

DEFAULT_MASKS: dict[str, tuple[int, ...]] = {
    "commit": _CLOUD_SIDE,
    # The published row for save is garbled; save runs on the cloud like commit.
    "save": _CLOUD_SIDE,
    "transfer": (13, 20, 21),
    "load": _FOG_SIDE,
    "start": _FOG_SIDE,
    "collective": tuple(range(1, N_PARAMS + 1)),
}


def make_feature_mask(step: StepKind | str, overrides: dict[str, Iterable[int]] | None = None) -> FeatureMask:
    name = step.value if isinstance(step, StepKind) else str(step).lower()
    if name not in DEFAULT_MASKS:
        raise ValueError(f"unknown step {step!r}; expected one of {MASK_NAMES}")
    if overrides and name in overrides:
        return FeatureMask(tuple(overrides[name]))
    return FeatureMask(DEFAULT_MASKS[name])


@dataclass(frozen=True)
class OffloadTiming:
    t_commit: float
    t_save: float
    t_transfer: float
    t_load: float
    t_start: float
    t_offload: float

    @classmethod
    def from_steps(cls, t_commit, t_save, t_transfer, t_load, t_start) -> "OffloadTiming":
        parts = (t_commit, t_save, t_transfer, t_load, t_start)
        return cls(*(float(p) for p in parts), total_offload_time(parts))

    def steps(self) -> tuple[float, float, float, float, float]:
        return (self.t_commit, self.t_save, self.t_transfer, self.t_load, self.t_start)

    def step(self, step: StepKind | str) -> float:
        name = step.value if isinstance(step, StepKind) else step
        return getattr(self, f"t_{name}")

    def as_array(self) -> np.ndarray:
        return np.array([*self.steps(), self.t_offload])

    def is_consistent(self, rtol: float = 1e-9) -> bool:
        return math.isclose(self.t_offload, sum(self.steps()), rel_tol=rtol, abs_tol=1e-12)


def total_offload_time(parts: Sequence[float]) -> float:
    """Sum of the five step durations, in commit..start order."""
    parts = tuple(float(p) for p in parts)
    if len(parts) != 5:
        raise ValueError(f"expected 5 step durations, got {len(parts)}")
    for name, p in zip(STEPS, parts):
        if not math.isfinite(p):
            raise ValueError(f"t_{name.value} is not finite: {p}")
        if p < 0:
            raise ValueError(f"t_{name.value} is negative: {p}")
    return parts[0] + parts[1] + parts[2] + parts[3] + parts[4]


@dataclass(frozen=True)
class PlatformSpec:
    """A cloud or fog host. ``base_disk_throughput_mbps`` is in MB/s."""

    cores: int
    memory_gb: float
    disk_gb: float
    base_disk_throughput_mbps: float
    role: str = "cloud"

    def __post_init__(self):
        if self.role not in ("cloud", "fog"):
            raise ValueError(f"role must be 'cloud' or 'fog', got {self.role!r}")
        for name in ("cores", "memory_gb", "disk_gb", "base_disk_throughput_mbps"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{self.role} {name} must be positive, got {v!r}")


@dataclass(frozen=True)
class NetworkProfile:
    bandwidth_bps: float
    latency_ms: float

    def __post_init__(self):
        if not (math.isfinite(self.bandwidth_bps) and self.bandwidth_bps > 0):
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth_bps!r}")
        if not (math.isfinite(self.latency_ms) and self.latency_ms >= 0):
            raise ValueError(f"latency must be >= 0, got {self.latency_ms!r}")


@dataclass(frozen=True)
class StressProfile:
    """Background load on each host as a fraction of capacity."""

    cloud_cpu: float = 0.0
    cloud_memory: float = 0.0
    cloud_disk: float = 0.0
    fog_cpu: float = 0.0
    fog_memory: float = 0.0
    fog_disk: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and 0.0 <= v <= STRESS_CAP + 1e-12):
                raise ValueError(f"{f.name} must lie in [0, {STRESS_CAP}], got {v!r}")

    def host(self, role: str) -> tuple[float, float, float]:
        """(cpu, memory, disk) load for ``role``."""
        return (
            getattr(self, f"{role}_cpu"),
            getattr(self, f"{role}_memory"),
            getattr(self, f"{role}_disk"),
        )
