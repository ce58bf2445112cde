"""JSON experiment configuration.

Every section is optional and falls back to the defaults below; unknown keys
are rejected at every level. Layout::

    {
      "seed": 2019,
      "platforms": [{"name": ..., "cloud": {...}, "fog": {...},
                     "bandwidths_bps": [...], "latency_ms": 30,
                     "image_sizes_mb": [...]}],
      "stress": {"cpu_step": 0.1, "cloud_memory_step_gb": 1, ...},
      "ground_truth": {"c0": 0.5, ..., "eta": 0.05},
      "models": {"mlr": {...}, "pmr": {...}, "rfr": {...}, "svr": {...}},
      "features": {"im_transfer_rate": true, "cm_transfer_rate": false,
                   "masks": {"save": [1, 2, ...]}},
      "evaluation": {"kinds": [...], "methods": [...],
                     "train_fractions": [...], "k_values": [...],
                     "accuracy_mode": "mape"}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .catalog import MASK_NAMES, PlatformSpec
from .estimators import KINDS, ForestParams, MlrParams, ModelParams, PmrParams, SvrParams
from .evaluation import ACCURACY_MODES, METHODS, EvalPlan, EvalSettings, FeatureOptions
from .simulator import GridConfig, GroundTruthModel, PlatformEntry, StressSchedule, default_grid

DEFAULT_SEED = 2019


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=default_grid)
    ground_truth: GroundTruthModel = field(default_factory=GroundTruthModel)
    models: ModelParams = field(default_factory=ModelParams)
    features: FeatureOptions = field(default_factory=FeatureOptions)
    plan: EvalPlan = field(default_factory=EvalPlan)
    accuracy_mode: str = "mape"
    seed: int = DEFAULT_SEED

    @property
    def settings(self) -> EvalSettings:
        return EvalSettings(self.models, self.features, self.accuracy_mode)


def _obj(data: Any, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    return data


def _check_keys(data: dict, allowed, where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _dataclass(cls, data: Any, where: str, **extra):
    data = _obj(data, where)
    names = [f.name for f in fields(cls) if f.name not in extra]
    _check_keys(data, names, where)
    try:
        return cls(**data, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _number_list(data: Any, where: str, integer: bool = False) -> tuple:
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{where}: expected a non-empty list")
    kinds = (int,) if integer else (int, float)
    if any(isinstance(v, bool) or not isinstance(v, kinds) for v in data):
        raise ConfigError(f"{where}: expected numbers")
    return tuple(int(v) if integer else float(v) for v in data)


def _platform(data: Any, where: str) -> PlatformEntry:
    data = _obj(data, where)
    _check_keys(data, ("name", "cloud", "fog", "bandwidths_bps", "latency_ms", "image_sizes_mb"), where)
    for key in ("name", "cloud", "fog", "bandwidths_bps", "latency_ms", "image_sizes_mb"):
        if key not in data:
            raise ConfigError(f"{where}: missing key {key}")
    hosts = {}
    for role in ("cloud", "fog"):
        host = dict(_obj(data[role], f"{where}.{role}"))
        if host.pop("role", role) != role:
            raise ConfigError(f"{where}.{role}: role must be {role!r}")
        hosts[role] = _dataclass(PlatformSpec, host, f"{where}.{role}", role=role)
    bandwidths = _number_list(data["bandwidths_bps"], f"{where}.bandwidths_bps")
    images = _number_list(data["image_sizes_mb"], f"{where}.image_sizes_mb")
    try:
        return PlatformEntry(
            name=str(data["name"]),
            cloud=hosts["cloud"],
            fog=hosts["fog"],
            bandwidths_bps=bandwidths,
            latency_ms=float(data["latency_ms"]),
            image_sizes_mb=images,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _models(data: Any) -> ModelParams:
    data = _obj(data, "models")
    _check_keys(data, KINDS, "models")
    default = ModelParams()
    return ModelParams(
        mlr=_dataclass(MlrParams, data["mlr"], "models.mlr") if "mlr" in data else default.mlr,
        pmr=_dataclass(PmrParams, data["pmr"], "models.pmr") if "pmr" in data else default.pmr,
        rfr=_dataclass(ForestParams, data["rfr"], "models.rfr") if "rfr" in data else default.rfr,
        svr=_dataclass(SvrParams, data["svr"], "models.svr") if "svr" in data else default.svr,
    )


def _features(data: Any) -> FeatureOptions:
    data = _obj(data, "features")
    _check_keys(data, ("im_transfer_rate", "cm_transfer_rate", "masks"), "features")
    masks = data.get("masks")
    if masks is not None:
        masks = _obj(masks, "features.masks")
        _check_keys(masks, MASK_NAMES, "features.masks")
        masks = {k: _number_list(v, f"features.masks.{k}", integer=True) for k, v in masks.items()}
    options = FeatureOptions(
        im_transfer_rate=bool(data.get("im_transfer_rate", True)),
        cm_transfer_rate=bool(data.get("cm_transfer_rate", False)),
        mask_overrides=masks,
    )
    try:
        for name in MASK_NAMES:
            options.spec(name)
    except ValueError as exc:
        raise ConfigError(f"features: {exc}") from None
    return options


def _evaluation(data: Any) -> tuple[EvalPlan, str]:
    data = _obj(data, "evaluation")
    _check_keys(data, ("kinds", "methods", "train_fractions", "k_values", "accuracy_mode"), "evaluation")
    plan = EvalPlan()
    kinds = tuple(data.get("kinds", plan.kinds))
    methods = tuple(data.get("methods", plan.methods))
    if not kinds or any(k not in KINDS for k in kinds):
        raise ConfigError(f"evaluation.kinds: expected a non-empty subset of {KINDS}")
    if not methods or any(m not in METHODS for m in methods):
        raise ConfigError(f"evaluation.methods: expected a non-empty subset of {METHODS}")
    fractions = _number_list(data["train_fractions"], "evaluation.train_fractions") if "train_fractions" in data else plan.train_fractions
    if any(not 0 < f < 1 for f in fractions):
        raise ConfigError("evaluation.train_fractions: values must lie in (0, 1)")
    ks = _number_list(data["k_values"], "evaluation.k_values", integer=True) if "k_values" in data else plan.k_values
    if any(k < 2 for k in ks):
        raise ConfigError("evaluation.k_values: k must be >= 2")
    mode = data.get("accuracy_mode", "mape")
    if mode not in ACCURACY_MODES:
        raise ConfigError(f"evaluation.accuracy_mode: expected one of {ACCURACY_MODES}")
    return EvalPlan(kinds, methods, fractions, ks), mode


def config_from_dict(data: Any) -> ExperimentConfig:
    data = _obj(data, "config")
    _check_keys(data, ("seed", "platforms", "stress", "ground_truth", "models", "features", "evaluation"), "config")
    base = ExperimentConfig()
    grid = base.grid
    if "platforms" in data or "stress" in data:
        platforms = grid.platforms
        if "platforms" in data:
            if not isinstance(data["platforms"], list) or not data["platforms"]:
                raise ConfigError("platforms: expected a non-empty list")
            platforms = tuple(_platform(p, f"platforms[{i}]") for i, p in enumerate(data["platforms"]))
        stress = _dataclass(StressSchedule, data["stress"], "stress") if "stress" in data else grid.stress
        grid = GridConfig(platforms, stress)
    truth = _dataclass(GroundTruthModel, data["ground_truth"], "ground_truth") if "ground_truth" in data else base.ground_truth
    models = _models(data["models"]) if "models" in data else base.models
    features = _features(data["features"]) if "features" in data else base.features
    plan, mode = _evaluation(data["evaluation"]) if "evaluation" in data else (base.plan, base.accuracy_mode)
    seed = data.get("seed", base.seed)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: expected a non-negative integer")
    return ExperimentConfig(grid, truth, models, features, plan, mode, seed)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    def host(spec: PlatformSpec) -> dict:
        d = asdict(spec)
        d.pop("role")
        return d

    features: dict[str, Any] = {
        "im_transfer_rate": cfg.features.im_transfer_rate,
        "cm_transfer_rate": cfg.features.cm_transfer_rate,
    }
    if cfg.features.mask_overrides:
        features["masks"] = {k: list(v) for k, v in cfg.features.mask_overrides.items()}
    return {
        "seed": cfg.seed,
        "platforms": [
            {
                "name": p.name,
                "cloud": host(p.cloud),
                "fog": host(p.fog),
                "bandwidths_bps": list(p.bandwidths_bps),
                "latency_ms": p.latency_ms,
                "image_sizes_mb": list(p.image_sizes_mb),
            }
            for p in cfg.grid.platforms
        ],
        "stress": asdict(cfg.grid.stress),
        "ground_truth": asdict(cfg.ground_truth),
        "models": {k: asdict(getattr(cfg.models, k)) for k in KINDS},
        "features": features,
        "evaluation": {
            "kinds": list(cfg.plan.kinds),
            "methods": list(cfg.plan.methods),
            "train_fractions": list(cfg.plan.train_fractions),
            "k_values": list(cfg.plan.k_values),
            "accuracy_mode": cfg.accuracy_mode,
        },
    }
