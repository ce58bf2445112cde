"""Synthetic Save-and-Load offloads: step durations, per-second samples, grids.

The step durations follow a closed-form ground truth (see ``step_duration``)
perturbed by multiplicative truncated-Gaussian noise. Runtime parameters
P1-P12 are synthesised on a 1 s grid with sample-and-hold semantics.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .catalog import (
    STEPS,
    STRESS_CAP,
    NetworkProfile,
    OffloadTiming,
    PlatformSpec,
    StepKind,
    StressProfile,
)


@dataclass(frozen=True)
class GroundTruthModel:
    c0: float = 0.5
    s0: float = 0.3
    l0: float = 0.4
    st0: float = 0.8
    w_commit: float = 1.0
    w_save: float = 0.7
    w_load: float = 0.8
    alpha: float = 1.0
    beta: float = 0.5
    rho: float = 0.4
    kappa: float = 0.05
    eta: float = 0.05
    # 0 keeps memory stress out of the durations.
    memory_slope: float = 0.0

    def __post_init__(self):
        for name in ("c0", "s0", "l0", "st0", "alpha", "kappa", "eta", "memory_slope"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0, got {v!r}")
        for name in ("w_commit", "w_save", "w_load"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta!r}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho!r}")

    def replace(self, **changes) -> "GroundTruthModel":
        return GroundTruthModel(**{**asdict(self), **changes})


def effective_disk_throughput(model: GroundTruthModel, host: PlatformSpec, disk_load: float) -> float:
    d_eff = host.base_disk_throughput_mbps * (1.0 - model.beta * disk_load)
    if not d_eff > 0:
        raise ValueError(f"non-positive effective disk throughput {d_eff}")
    return d_eff


def cpu_factor(model: GroundTruthModel, cpu_load: float, memory_load: float = 0.0) -> float:
    return (1.0 + model.alpha * cpu_load) * (1.0 + model.memory_slope * memory_load)


def step_duration_closed_form(
    step: StepKind,
    model: GroundTruthModel,
    cloud: PlatformSpec,
    fog: PlatformSpec,
    net: NetworkProfile,
    stress: StressProfile,
    image_mb: float,
) -> float:
    """Noise-free duration of one step, in seconds."""
    step = StepKind(step)
    if step is StepKind.TRANSFER:
        return model.rho * image_mb * 8e6 / net.bandwidth_bps + net.latency_ms / 1000.0
    if step is StepKind.START:
        return model.st0 + model.kappa * math.log1p(image_mb)
    if step in (StepKind.COMMIT, StepKind.SAVE):
        host, (cpu, mem, disk) = cloud, stress.host("cloud")
        overhead, work = (model.c0, model.w_commit) if step is StepKind.COMMIT else (model.s0, model.w_save)
    else:
        host, (cpu, mem, disk) = fog, stress.host("fog")
        overhead, work = model.l0, model.w_load
    d_eff = effective_disk_throughput(model, host, disk)
    return overhead + image_mb / (work * d_eff) * cpu_factor(model, cpu, mem)


def sample_noise(eta: float, rng: np.random.Generator) -> float:
    """One draw of N(0, eta^2) truncated to (-1, inf)."""
    if eta == 0:
        return 0.0
    while True:
        eps = rng.normal(0.0, eta)
        if eps > -1.0:
            return float(eps)


def step_duration(
    step: StepKind,
    model: GroundTruthModel,
    cloud: PlatformSpec,
    fog: PlatformSpec,
    net: NetworkProfile,
    stress: StressProfile,
    image_mb: float,
    rng: np.random.Generator,
) -> float:
    if not (math.isfinite(image_mb) and image_mb > 0):
        raise ValueError(f"image size must be > 0 MB, got {image_mb!r}")
    base = step_duration_closed_form(step, model, cloud, fog, net, stress, image_mb)
    return base * (1.0 + sample_noise(model.eta, rng))


# -- runtime sample synthesis -------------------------------------------------

# Idle background of each host: system CPU, memory and disk utilisation fractions.
_IDLE = {"cloud": (0.04, 0.12, 0.02), "fog": (0.06, 0.15, 0.03)}

# Extra system CPU / disk utilisation (percentage points) while a step runs.
_SYSTEM_OFFSET = {
    "cloud": {StepKind.COMMIT: (15.0, 20.0), StepKind.SAVE: (25.0, 20.0), StepKind.TRANSFER: (3.0, 2.0)},
    "fog": {StepKind.TRANSFER: (3.0, 2.0), StepKind.LOAD: (20.0, 25.0), StepKind.START: (10.0, 8.0)},
}

# Offloading process: CPU % (before contention) and resident memory (MB).
_PROCESS = {
    "cloud": {StepKind.COMMIT: (35.0, 150.0), StepKind.SAVE: (60.0, 250.0), StepKind.TRANSFER: (4.0, 60.0)},
    "fog": {StepKind.TRANSFER: (4.0, 60.0), StepKind.LOAD: (50.0, 200.0), StepKind.START: (25.0, 120.0)},
}
_DISK_STEPS = {"cloud": (StepKind.COMMIT, StepKind.SAVE), "fog": (StepKind.LOAD,)}

PERCENT_JITTER = 0.5
THROUGHPUT_JITTER = 0.01


@dataclass(frozen=True)
class RuntimeSample:
    timestamp: float
    active_step: StepKind
    values: tuple[float, ...]  # P1..P12


@dataclass(frozen=True)
class TraceConfig:
    platform_id: str
    cloud: PlatformSpec
    fog: PlatformSpec
    network: NetworkProfile
    stress: StressProfile
    image_mb: float
    seed: int


@dataclass(frozen=True, eq=False)
class OffloadTrace:
    """One simulated offload. ``values`` holds P1..P12, one row per second."""

    config: TraceConfig
    timestamps: np.ndarray
    active_steps: tuple[StepKind, ...]
    values: np.ndarray
    timing: OffloadTiming

    @property
    def samples(self) -> list[RuntimeSample]:
        return [
            RuntimeSample(float(t), s, tuple(float(v) for v in row))
            for t, s, row in zip(self.timestamps, self.active_steps, self.values)
        ]

    def __len__(self) -> int:
        return len(self.timestamps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OffloadTrace):
            return NotImplemented
        return (
            self.config == other.config
            and self.timing == other.timing
            and self.active_steps == other.active_steps
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )


def _host_columns(
    role: str,
    host: PlatformSpec,
    stress: StressProfile,
    model: GroundTruthModel,
    timing: OffloadTiming,
    image_mb: float,
    steps: Sequence[StepKind],
    rng: np.random.Generator,
) -> np.ndarray:
    n = len(steps)
    cpu, mem, disk = stress.host(role)
    idle_cpu, idle_mem, idle_disk = _IDLE[role]
    out = np.empty((n, 6))
    sys_cpu = np.full(n, 100.0 * min(1.0, idle_cpu + cpu))
    sys_disk = np.full(n, 100.0 * min(1.0, idle_disk + disk))
    proc_cpu = np.zeros(n)
    proc_mem = np.zeros(n)
    proc_disk = np.zeros(n)
    contention = cpu_factor(model, cpu, mem)
    for i, step in enumerate(steps):
        if step in _SYSTEM_OFFSET[role]:
            dc, dd = _SYSTEM_OFFSET[role][step]
            sys_cpu[i] += dc
            sys_disk[i] += dd
        if step in _PROCESS[role]:
            pc, pm = _PROCESS[role][step]
            proc_cpu[i] = pc / contention
            proc_mem[i] = 100.0 * pm / (host.memory_gb * 1024.0)
        if step in _DISK_STEPS[role]:
            proc_disk[i] = image_mb * 1e6 / timing.step(step)
    out[:, 0] = sys_cpu
    out[:, 1] = 100.0 * min(1.0, idle_mem + mem)
    out[:, 2] = sys_disk
    out[:, 3] = proc_cpu
    out[:, 4] = proc_mem
    out[:, 5] = proc_disk
    jitter = rng.normal(0.0, PERCENT_JITTER, size=(n, 5))
    out[:, :5] = np.clip(out[:, :5] + jitter, 0.0, 100.0)
    out[:, 5] = np.maximum(0.0, out[:, 5] * (1.0 + rng.normal(0.0, THROUGHPUT_JITTER, size=n)))
    return out


def simulate_offload(
    model: GroundTruthModel,
    cloud: PlatformSpec,
    fog: PlatformSpec,
    net: NetworkProfile,
    stress: StressProfile,
    image_mb: float,
    seed: int,
    platform_id: str = "",
) -> OffloadTrace:
    rng = np.random.default_rng(seed)
    durations = [step_duration(s, model, cloud, fog, net, stress, image_mb, rng) for s in STEPS]
    timing = OffloadTiming.from_steps(*durations)

    n = math.ceil(timing.t_offload)
    timestamps = np.arange(n, dtype=float)
    ends = np.cumsum(durations)
    # Sample at second k sees whichever step is running at instant k.
    idx = np.minimum(np.searchsorted(ends, timestamps, side="right"), len(STEPS) - 1)
    steps = tuple(STEPS[i] for i in idx)

    values = np.hstack(
        [
            _host_columns("cloud", cloud, stress, model, timing, image_mb, steps, rng),
            _host_columns("fog", fog, stress, model, timing, image_mb, steps, rng),
        ]
    )
    config = TraceConfig(platform_id, cloud, fog, net, stress, float(image_mb), int(seed))
    return OffloadTrace(config, timestamps, steps, values, timing)


# -- experiment grid ------------------------------------------------------------


@dataclass(frozen=True)
class StressSchedule:
    """Step sizes of the one-resource-at-a-time stress sweeps."""

    cpu_step: float = 0.10
    cloud_memory_step_gb: float = 1.0
    fog_memory_step_gb: float = 0.5
    cloud_disk_step_gb: float = 4.0
    fog_disk_step_gb: float = 2.0
    cap: float = STRESS_CAP

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"stress {name} must be > 0, got {v!r}")
        if self.cap > STRESS_CAP:
            raise ValueError(f"stress cap must be <= {STRESS_CAP}")


@dataclass(frozen=True)
class PlatformEntry:
    name: str
    cloud: PlatformSpec
    fog: PlatformSpec
    bandwidths_bps: tuple[float, ...]
    latency_ms: float
    image_sizes_mb: tuple[float, ...]

    def __post_init__(self):
        if not self.bandwidths_bps:
            raise ValueError(f"platform {self.name!r}: empty bandwidth list")
        if not self.image_sizes_mb:
            raise ValueError(f"platform {self.name!r}: empty image size list")
        if any(not (math.isfinite(s) and s > 0) for s in self.image_sizes_mb):
            raise ValueError(f"platform {self.name!r}: image sizes must be > 0")
        if self.cloud.role != "cloud" or self.fog.role != "fog":
            raise ValueError(f"platform {self.name!r}: cloud/fog roles swapped")
        for bw in self.bandwidths_bps:
            NetworkProfile(bw, self.latency_ms)


@dataclass(frozen=True)
class GridConfig:
    platforms: tuple[PlatformEntry, ...]
    stress: StressSchedule = field(default_factory=StressSchedule)

    def __post_init__(self):
        if not self.platforms:
            raise ValueError("grid has no platforms")


@dataclass(frozen=True)
class GridCell:
    index: int
    platform: PlatformEntry
    network: NetworkProfile
    stress: StressProfile
    image_mb: float


def _ladder(step: float, capacity: float, cap: float) -> list[float]:
    levels = []
    k = 1
    while k * step / capacity <= cap + 1e-12:
        levels.append(k * step / capacity)
        k += 1
    return levels


def stress_levels(platform: PlatformEntry, schedule: StressSchedule) -> list[StressProfile]:
    """Baseline plus one sweep per host and resource, each up to the cap."""
    levels = [StressProfile()]
    sweeps = [
        ("cloud_cpu", _ladder(schedule.cpu_step, 1.0, schedule.cap)),
        ("fog_cpu", _ladder(schedule.cpu_step, 1.0, schedule.cap)),
        ("cloud_memory", _ladder(schedule.cloud_memory_step_gb, platform.cloud.memory_gb, schedule.cap)),
        ("fog_memory", _ladder(schedule.fog_memory_step_gb, platform.fog.memory_gb, schedule.cap)),
        ("cloud_disk", _ladder(schedule.cloud_disk_step_gb, platform.cloud.disk_gb, schedule.cap)),
        ("fog_disk", _ladder(schedule.fog_disk_step_gb, platform.fog.disk_gb, schedule.cap)),
    ]
    for name, ladder in sweeps:
        levels.extend(StressProfile(**{name: min(v, schedule.cap)}) for v in ladder)
    return levels


def grid_cells(grid: GridConfig, quick: bool = False) -> list[GridCell]:
    """Cartesian product platform x bandwidth x stress level x image size.

    ``quick`` thins the stress ladder to every 4th level and keeps only the
    smallest and largest image, roughly a tenfold reduction.
    """
    cells = []
    for platform in grid.platforms:
        levels = stress_levels(platform, grid.stress)
        images = platform.image_sizes_mb
        if quick:
            levels = levels[::4]
            images = tuple(sorted({min(images), max(images)}))
        for bw in platform.bandwidths_bps:
            net = NetworkProfile(float(bw), float(platform.latency_ms))
            for stress in levels:
                for image in images:
                    cells.append(GridCell(len(cells), platform, net, stress, float(image)))
    return cells


def cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def simulate_cell(cell: GridCell, model: GroundTruthModel, seed: int) -> OffloadTrace:
    return simulate_offload(
        model,
        cell.platform.cloud,
        cell.platform.fog,
        cell.network,
        cell.stress,
        cell.image_mb,
        cell_seed(seed, cell.index),
        platform_id=cell.platform.name,
    )


def run_experiment_grid(
    grid: GridConfig,
    model: GroundTruthModel,
    seed: int,
    quick: bool = False,
    workers: int = 1,
) -> list[OffloadTrace]:
    cells = grid_cells(grid, quick=quick)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda c: simulate_cell(c, model, seed), cells))
    return [simulate_cell(c, model, seed) for c in cells]


MBPS = 1e6

CLOUD_1 = PlatformSpec(cores=6, memory_gb=6.0, disk_gb=30.0, base_disk_throughput_mbps=200.0, role="cloud")
FOG_1 = PlatformSpec(cores=2, memory_gb=2.0, disk_gb=20.0, base_disk_throughput_mbps=100.0, role="fog")
CLOUD_2 = PlatformSpec(cores=4, memory_gb=8.0, disk_gb=80.0, base_disk_throughput_mbps=200.0, role="cloud")
FOG_2 = PlatformSpec(cores=2, memory_gb=4.0, disk_gb=40.0, base_disk_throughput_mbps=100.0, role="fog")


def default_grid() -> GridConfig:
    return GridConfig(
        platforms=(
            PlatformEntry(
                name="platform1",
                cloud=CLOUD_1,
                fog=FOG_1,
                bandwidths_bps=(25 * MBPS, 50 * MBPS, 100 * MBPS, 1000 * MBPS),
                latency_ms=30.0,
                image_sizes_mb=(100.0, 200.0, 300.0, 400.0, 500.0),
            ),
            PlatformEntry(
                name="platform2",
                cloud=CLOUD_2,
                fog=FOG_2,
                bandwidths_bps=(3.2 * MBPS,),
                latency_ms=30.0,
                image_sizes_mb=(100.0, 200.0, 300.0),
            ),
        ),
    )


# -- JSON-lines trace files ---------------------------------------------------------


def trace_to_dict(trace: OffloadTrace) -> dict:
    cfg = trace.config
    return {
        "platform_id": cfg.platform_id,
        "cloud": asdict(cfg.cloud),
        "fog": asdict(cfg.fog),
        "network": asdict(cfg.network),
        "stress": asdict(cfg.stress),
        "image_mb": cfg.image_mb,
        "seed": cfg.seed,
        "timing": asdict(trace.timing),
        "samples": [
            {"t": float(t), "step": s.value, "values": [float(v) for v in row]}
            for t, s, row in zip(trace.timestamps, trace.active_steps, trace.values)
        ],
    }


def trace_from_dict(d: dict) -> OffloadTrace:
    samples = d["samples"]
    config = TraceConfig(
        platform_id=d["platform_id"],
        cloud=PlatformSpec(**d["cloud"]),
        fog=PlatformSpec(**d["fog"]),
        network=NetworkProfile(**d["network"]),
        stress=StressProfile(**d["stress"]),
        image_mb=float(d["image_mb"]),
        seed=int(d["seed"]),
    )
    values = np.array([s["values"] for s in samples], dtype=float).reshape(len(samples), 12)
    return OffloadTrace(
        config=config,
        timestamps=np.array([s["t"] for s in samples], dtype=float),
        active_steps=tuple(StepKind(s["step"]) for s in samples),
        values=values,
        timing=OffloadTiming(**d["timing"]),
    )


def write_traces(traces: Iterable[OffloadTrace], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for trace in traces:
            fh.write(json.dumps(trace_to_dict(trace)) + "\n")


def read_traces(path) -> Iterator[OffloadTrace]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield trace_from_dict(json.loads(line))
