"""Four regression families behind one fit/predict surface."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .forest import ForestModel, ForestParams, Tree, fit_rfr
from .linear import LinearModel, PolyModel, fit_mlr, fit_pmr, monomial_exponents
from .scaling import Scaler
from .svr import SvrModel, SvrParams, fit_svr

KINDS = ("mlr", "pmr", "rfr", "svr")

Model = Union[LinearModel, PolyModel, ForestModel, SvrModel]


@dataclass(frozen=True)
class MlrParams:
    ridge: float = 1e-6


@dataclass(frozen=True)
class PmrParams:
    degree: int = 2
    ridge: float = 1e-6
    max_terms: int = 5000


@dataclass(frozen=True)
class ModelParams:
    mlr: MlrParams = field(default_factory=MlrParams)
    pmr: PmrParams = field(default_factory=PmrParams)
    rfr: ForestParams = field(default_factory=ForestParams)
    svr: SvrParams = field(default_factory=SvrParams)


def fit_model(kind: str, X, y, params: ModelParams | None = None, seed: int = 0) -> Model:
    params = params or ModelParams()
    if kind == "mlr":
        return fit_mlr(X, y, params.mlr.ridge)
    if kind == "pmr":
        return fit_pmr(X, y, params.pmr.degree, params.pmr.ridge, params.pmr.max_terms)
    if kind == "rfr":
        return fit_rfr(X, y, params.rfr, seed)
    if kind == "svr":
        return fit_svr(X, y, params.svr)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")


def predict(model: Model, x) -> float | np.ndarray:
    """Scalar for a single feature vector, array for a matrix of rows."""
    x = np.asarray(x, dtype=float)
    width = x.shape[-1] if x.ndim else 1
    if x.ndim > 2 or width != model.n_features:
        raise ValueError(f"model expects {model.n_features} inputs, got {width}")
    out = model.predict(np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


_LOADERS = {"mlr": LinearModel, "pmr": PolyModel, "rfr": ForestModel, "svr": SvrModel}


def model_to_dict(model: Model) -> dict:
    return model.to_dict()


def model_from_dict(d: dict) -> Model:
    try:
        cls = _LOADERS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind tag {d.get('kind')!r}") from None
    return cls.from_dict(d)


__all__ = [
    "KINDS",
    "ForestModel",
    "ForestParams",
    "LinearModel",
    "MlrParams",
    "Model",
    "ModelParams",
    "PmrParams",
    "PolyModel",
    "Scaler",
    "SvrModel",
    "SvrParams",
    "Tree",
    "fit_mlr",
    "fit_model",
    "fit_pmr",
    "fit_rfr",
    "fit_svr",
    "model_from_dict",
    "model_to_dict",
    "monomial_exponents",
    "predict",
]
