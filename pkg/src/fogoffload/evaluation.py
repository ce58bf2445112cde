"""Collective and individual offload-time estimators, metrics and CV harness."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import STEPS, FeatureMask, ParameterVector, StepKind, make_feature_mask
from .dataset import Dataset
from .estimators import KINDS, Model, ModelParams, fit_model, model_from_dict, model_to_dict

METHODS = ("cm", "im")
ACCURACY_MODES = ("mape", "r2")
# Accuracy is reported on a 1e-9 percentage-point grid.
ACCURACY_DECIMALS = 9

_IMAGE, _BANDWIDTH = 13, 20


@dataclass(frozen=True)
class FeatureSpec:
    """Which catalogue columns a model sees, plus the optional size/bandwidth ratio."""

    mask: FeatureMask
    transfer_rate: bool = False

    def __post_init__(self):
        if self.transfer_rate and not (_IMAGE in self.mask and _BANDWIDTH in self.mask):
            raise ValueError("transfer-rate feature needs P13 and P20 in the mask")

    @property
    def width(self) -> int:
        return len(self.mask) + int(self.transfer_rate)

    def design(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 21:
            raise ValueError(f"expected 21 catalogue columns, got {X.shape[1]}")
        cols = self.mask.select(X)
        if self.transfer_rate:
            rate = X[:, _IMAGE - 1] / X[:, _BANDWIDTH - 1]
            cols = np.column_stack([cols, rate])
        return cols

    def to_dict(self) -> dict:
        return {"mask": list(self.mask.included), "transfer_rate": self.transfer_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        return cls(FeatureMask(tuple(d["mask"])), bool(d["transfer_rate"]))


@dataclass(frozen=True)
class FeatureOptions:
    """Feature engineering switches for the two estimation methods.

    The size/bandwidth ratio is on by default for the individual transfer
    model only; the collective model sees the raw 21 parameters.
    """

    im_transfer_rate: bool = True
    cm_transfer_rate: bool = False
    mask_overrides: Mapping[str, Sequence[int]] | None = None

    def spec(self, name: str) -> FeatureSpec:
        mask = make_feature_mask(name, self.mask_overrides)
        if name == "collective":
            return FeatureSpec(mask, self.cm_transfer_rate)
        wants_rate = self.im_transfer_rate and name == StepKind.TRANSFER.value
        return FeatureSpec(mask, wants_rate and _IMAGE in mask and _BANDWIDTH in mask)


@dataclass(frozen=True, eq=False)
class ComponentModel:
    spec: FeatureSpec
    model: Model

    def predict(self, X) -> np.ndarray:
        return self.model.predict(self.spec.design(X))

    def to_dict(self) -> dict:
        return {"features": self.spec.to_dict(), "model": model_to_dict(self.model)}

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentModel":
        return cls(FeatureSpec.from_dict(d["features"]), model_from_dict(d["model"]))


def _fit_component(kind, spec, X, y, params, seed) -> ComponentModel:
    return ComponentModel(spec, fit_model(kind, spec.design(X), y, params, seed))


@dataclass(frozen=True, eq=False)
class CollectiveEstimator:
    kind: str
    component: ComponentModel

    method = "cm"

    def predict(self, X) -> np.ndarray:
        return self.component.predict(X)

    def to_dict(self) -> dict:
        return {"method": self.method, "kind": self.kind, "components": {"collective": self.component.to_dict()}}


@dataclass(frozen=True, eq=False)
class IndividualEstimator:
    kind: str
    components: Mapping[StepKind, ComponentModel]

    method = "im"

    def predict_steps(self, X) -> np.ndarray:
        """Per-step predictions, columns commit..start."""
        return np.column_stack([self.components[s].predict(X) for s in STEPS])

    def predict(self, X) -> np.ndarray:
        parts = self.predict_steps(X)
        return parts[:, 0] + parts[:, 1] + parts[:, 2] + parts[:, 3] + parts[:, 4]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind,
            "components": {s.value: self.components[s].to_dict() for s in STEPS},
        }


Estimator = CollectiveEstimator | IndividualEstimator


def estimator_from_dict(d: dict) -> Estimator:
    comps = d["components"]
    if d["method"] == "cm":
        return CollectiveEstimator(d["kind"], ComponentModel.from_dict(comps["collective"]))
    if d["method"] == "im":
        return IndividualEstimator(d["kind"], {s: ComponentModel.from_dict(comps[s.value]) for s in STEPS})
    raise ValueError(f"unknown estimation method {d['method']!r}")


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")


def train_collective(
    train: Dataset,
    kind: str,
    params: ModelParams | None = None,
    seed: int = 0,
    options: FeatureOptions | None = None,
) -> CollectiveEstimator:
    _check_kind(kind)
    if len(train) == 0:
        raise ValueError("empty training set")
    options = options or FeatureOptions()
    comp = _fit_component(kind, options.spec("collective"), train.X, train.target("offload"), params, seed)
    return CollectiveEstimator(kind, comp)


def train_individual(
    train: Dataset,
    kind: str,
    params: ModelParams | None = None,
    seed: int = 0,
    options: FeatureOptions | None = None,
) -> IndividualEstimator:
    _check_kind(kind)
    if len(train) == 0:
        raise ValueError("empty training set")
    options = options or FeatureOptions()
    comps = {}
    for i, step in enumerate(STEPS):
        step_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        comps[step] = _fit_component(kind, options.spec(step.value), train.X, train.target(step), params, step_seed)
    return IndividualEstimator(kind, comps)


def train_estimator(train: Dataset, kind: str, method: str, **kwargs) -> Estimator:
    if method == "cm":
        return train_collective(train, kind, **kwargs)
    if method == "im":
        return train_individual(train, kind, **kwargs)
    raise ValueError(f"unknown method {method!r}; expected 'cm' or 'im'")


@dataclass(frozen=True)
class OffloadPrediction:
    total: float
    breakdown: dict[StepKind, float] | None = None


def predict_offload(estimator: Estimator, features: ParameterVector | Sequence[float]) -> OffloadPrediction:
    x = features.as_array() if isinstance(features, ParameterVector) else np.asarray(features, dtype=float)
    if x.shape != (21,):
        raise ValueError(f"expected a 21-entry feature vector, got shape {x.shape}")
    if isinstance(estimator, IndividualEstimator):
        parts = estimator.predict_steps(x[None, :])[0]
        breakdown = {s: float(v) for s, v in zip(STEPS, parts)}
        return OffloadPrediction(float(parts[0] + parts[1] + parts[2] + parts[3] + parts[4]), breakdown)
    return OffloadPrediction(float(estimator.predict(x[None, :])[0]))


# -- metrics ------------------------------------------------------------------------


def _pair(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(truths, dtype=float).ravel()
    if len(p) != len(t):
        raise ValueError(f"length mismatch: {len(p)} predictions vs {len(t)} truths")
    if len(p) == 0:
        raise ValueError("no predictions to score")
    return p, t


def mae(predictions, truths) -> float:
    p, t = _pair(predictions, truths)
    return math.fsum(np.abs(p - t)) / len(p)


def accuracy(predictions, truths, mode: str = "mape") -> float:
    """Accuracy in percent: 100(1 - MAPE) or 100 R^2, clamped to [0, 100]."""
    p, t = _pair(predictions, truths)
    if mode == "mape":
        if np.any(t <= 0):
            raise ValueError("mape accuracy needs strictly positive truths")
        score = 1.0 - math.fsum(np.abs(p - t) / t) / len(t)
    elif mode == "r2":
        sst = math.fsum((t - t.mean()) ** 2)
        if sst == 0:
            raise ValueError("r2 accuracy is undefined for constant truths")
        score = 1.0 - math.fsum((p - t) ** 2) / sst
    else:
        raise ValueError(f"unknown accuracy mode {mode!r}; expected one of {ACCURACY_MODES}")
    return round(100.0 * min(1.0, max(0.0, score)), ACCURACY_DECIMALS)


# -- evaluation harness -------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    method: str
    kind: str
    split: str  # "holdout" or "kfold"
    split_value: float  # train fraction or k
    mae: float
    accuracy: float
    accuracy_mode: str
    n_train: int
    n_test: int
    seed: int
    step_mae: dict[str, float] | None = None

    def __post_init__(self):
        if self.mae < 0 or not 0 <= self.accuracy <= 100:
            raise ValueError(f"inconsistent report mae={self.mae} accuracy={self.accuracy}")

    @property
    def split_label(self) -> str:
        if self.split == "kfold":
            return f"kfold:{int(self.split_value)}"
        return f"holdout:{self.split_value:g}"


@dataclass(frozen=True)
class EvalSettings:
    params: ModelParams = field(default_factory=ModelParams)
    options: FeatureOptions = field(default_factory=FeatureOptions)
    accuracy_mode: str = "mape"


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle 0..n-1 by ``seed`` and cut it into k folds whose sizes differ by at most 1."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.asarray(f) for f in np.array_split(perm, k)]


def evaluate_split(
    ds: Dataset,
    kind: str,
    method: str,
    train_idx: Sequence[int],
    test_idx: Sequence[int],
    seed: int,
    settings: EvalSettings | None = None,
) -> tuple[float, float, dict[str, float] | None]:
    """Fit on ``train_idx`` (used in ascending order), score on ``test_idx``."""
    settings = settings or EvalSettings()
    train = ds.subset(np.sort(np.asarray(train_idx, dtype=int)))
    test = ds.subset(np.asarray(test_idx, dtype=int))
    est = train_estimator(train, kind, method, params=settings.params, seed=seed, options=settings.options)
    truth = test.target("offload")
    pred = est.predict(test.X)
    step_mae = None
    if isinstance(est, IndividualEstimator):
        parts = est.predict_steps(test.X)
        step_mae = {s.value: mae(parts[:, i], test.target(s)) for i, s in enumerate(STEPS)}
    return mae(pred, truth), accuracy(pred, truth, settings.accuracy_mode), step_mae


def _mean_steps(rows: list[dict[str, float] | None]) -> dict[str, float] | None:
    if rows[0] is None:
        return None
    return {s.value: math.fsum(r[s.value] for r in rows) / len(rows) for s in STEPS}


def cross_validate(
    ds: Dataset,
    kind: str,
    method: str,
    k: int,
    seed: int,
    settings: EvalSettings | None = None,
) -> EvalReport:
    """k-fold CV with unweighted fold means of MAE and accuracy."""
    settings = settings or EvalSettings()
    n = len(ds)
    folds = kfold_split(n, k, seed)
    results = []
    for fold in folds:
        train_idx = np.setdiff1d(np.arange(n), fold)
        results.append(evaluate_split(ds, kind, method, train_idx, fold, seed, settings))
    largest = max(len(f) for f in folds)
    return EvalReport(
        method=method,
        kind=kind,
        split="kfold",
        split_value=float(k),
        mae=math.fsum(r[0] for r in results) / k,
        accuracy=math.fsum(r[1] for r in results) / k,
        accuracy_mode=settings.accuracy_mode,
        n_train=n - largest,
        n_test=largest,
        seed=seed,
        step_mae=_mean_steps([r[2] for r in results]),
    )


def holdout_split(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(f"train fraction {train_fraction} leaves an empty split of {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def holdout_evaluate(
    ds: Dataset,
    kind: str,
    method: str,
    train_fraction: float,
    seed: int,
    settings: EvalSettings | None = None,
) -> EvalReport:
    settings = settings or EvalSettings()
    train_idx, test_idx = holdout_split(len(ds), train_fraction, seed)
    m, acc, steps = evaluate_split(ds, kind, method, train_idx, test_idx, seed, settings)
    return EvalReport(
        method=method,
        kind=kind,
        split="holdout",
        split_value=float(train_fraction),
        mae=m,
        accuracy=acc,
        accuracy_mode=settings.accuracy_mode,
        n_train=len(train_idx),
        n_test=len(test_idx),
        seed=seed,
        step_mae=steps,
    )


@dataclass(frozen=True)
class EvalPlan:
    kinds: tuple[str, ...] = KINDS
    methods: tuple[str, ...] = METHODS
    train_fractions: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8, 0.9)
    k_values: tuple[int, ...] = (3, 5, 10)


def run_plan(ds: Dataset, plan: EvalPlan, seed: int, settings: EvalSettings | None = None) -> list[EvalReport]:
    """One report per (method, kind, split), hold-out fractions first."""
    reports = []
    for method in plan.methods:
        for kind in plan.kinds:
            for frac in plan.train_fractions:
                reports.append(holdout_evaluate(ds, kind, method, frac, seed, settings))
            for k in plan.k_values:
                reports.append(cross_validate(ds, kind, method, k, seed, settings))
    return reports


# -- report files -----------------------------------------------------------------

REPORT_COLUMNS = (
    "method",
    "kind",
    "split",
    "split_value",
    "mae",
    "accuracy",
    "accuracy_mode",
    *(f"mae_{s.value}" for s in STEPS),
    "n_train",
    "n_test",
    "seed",
)


def reports_to_csv(reports: Iterable[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        steps = [repr(r.step_mae[s.value]) if r.step_mae else "" for s in STEPS]
        w.writerow(
            [r.method, r.kind, r.split, f"{r.split_value:g}", repr(r.mae), repr(r.accuracy), r.accuracy_mode,
             *steps, r.n_train, r.n_test, r.seed]
        )
    return buf.getvalue()


def write_reports(reports: Iterable[EvalReport], path: str | Path) -> None:
    Path(path).write_text(reports_to_csv(reports), encoding="utf-8", newline="\n")


def parse_reports(text: str) -> list[EvalReport]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != REPORT_COLUMNS:
        raise ValueError("line 1: not a report file (unexpected header)")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(REPORT_COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(REPORT_COLUMNS)} columns, got {len(row)}")
        rec = dict(zip(REPORT_COLUMNS, row))
        try:
            steps = None
            if rec["mae_commit"]:
                steps = {s.value: float(rec[f"mae_{s.value}"]) for s in STEPS}
            out.append(
                EvalReport(
                    method=rec["method"],
                    kind=rec["kind"],
                    split=rec["split"],
                    split_value=float(rec["split_value"]),
                    mae=float(rec["mae"]),
                    accuracy=float(rec["accuracy"]),
                    accuracy_mode=rec["accuracy_mode"],
                    n_train=int(rec["n_train"]),
                    n_test=int(rec["n_test"]),
                    seed=int(rec["seed"]),
                    step_mae=steps,
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not out:
        raise ValueError("report file has no rows")
    return out


def read_reports(path: str | Path) -> list[EvalReport]:
    return parse_reports(Path(path).read_text(encoding="utf-8"))


def summarize(reports: Sequence[EvalReport]) -> str:
    lines = [f"{'method':<6} {'kind':<4} {'split':<13} {'MAE (s)':>10} {'accuracy (%)':>13}"]
    for r in reports:
        lines.append(f"{r.method:<6} {r.kind:<4} {r.split_label:<13} {r.mae:>10.3f} {r.accuracy:>13.2f}")
    return "\n".join(lines) + "\n"


# -- comparison ---------------------------------------------------------------------


def _rank_key(r: EvalReport):
    # Lowest MAE, then highest accuracy, then kind name.
    return (r.mae, -r.accuracy, r.kind)


@dataclass(frozen=True)
class Comparison:
    best_per_method: dict[str, EvalReport]
    overall_best: EvalReport
    deltas: dict[str, tuple[float, float]]  # kind -> (mean IM-CM MAE, mean IM-CM accuracy)


def compare_reports(reports: Sequence[EvalReport]) -> Comparison:
    if not reports:
        raise ValueError("no reports to compare")
    best = {}
    for method in sorted({r.method for r in reports}):
        best[method] = min((r for r in reports if r.method == method), key=_rank_key)
    overall = min(best.values(), key=_rank_key)

    deltas = {}
    by_key = {(r.method, r.kind, r.split, r.split_value): r for r in reports}
    for kind in sorted({r.kind for r in reports}):
        pairs = [
            (by_key[("im", kind, s, v)], by_key[("cm", kind, s, v)])
            for (m, k, s, v) in by_key
            if m == "im" and k == kind and ("cm", kind, s, v) in by_key
        ]
        if pairs:
            dm = math.fsum(im.mae - cm.mae for im, cm in pairs) / len(pairs)
            da = math.fsum(im.accuracy - cm.accuracy for im, cm in pairs) / len(pairs)
            deltas[kind] = (dm, da)
    return Comparison(best, overall, deltas)


def format_comparison(c: Comparison) -> str:
    lines = []
    for method, r in c.best_per_method.items():
        lines.append(
            f"best {method.upper()}: {r.kind.upper()} ({r.split_label}) MAE {r.mae:.3f} s, "
            f"accuracy {r.accuracy:.2f}% [{r.accuracy_mode}]"
        )
    o = c.overall_best
    lines.append(f"overall best: {o.method.upper()}-{o.kind.upper()} ({o.split_label}) MAE {o.mae:.3f} s")
    for kind, (dm, da) in c.deltas.items():
        lines.append(f"IM - CM {kind.upper()}: MAE {dm:+.3f} s, accuracy {da:+.2f} points")
    return "\n".join(lines) + "\n"
