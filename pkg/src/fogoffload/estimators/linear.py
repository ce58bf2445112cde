"""Ridge-regularised multivariate linear and polynomial regression."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .scaling import Scaler, check_xy

RIDGE_FLOOR = 1e-8


def _ridge_solve(Phi: np.ndarray, y: np.ndarray, ridge: float) -> tuple[float, np.ndarray]:
    """Ridge fit with an unpenalised intercept; returns (intercept, coefficients)."""
    lam = max(float(ridge), RIDGE_FLOOR)
    phi_mean = Phi.mean(axis=0)
    y_mean = float(y.mean())
    Pc = Phi - phi_mean
    A = Pc.T @ Pc
    A[np.diag_indices_from(A)] += lam
    beta = np.linalg.solve(A, Pc.T @ (y - y_mean))
    return y_mean - float(phi_mean @ beta), beta


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Straight-line model in raw input units: ``intercept + x @ coef``."""

    intercept: float
    coef: np.ndarray
    scaler: Scaler | None = None
    ridge: float = 0.0

    kind = "mlr"

    @property
    def n_features(self) -> int:
        return len(self.coef)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + X @ np.asarray(self.coef, dtype=float)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "intercept": float(self.intercept),
            "coef": [float(c) for c in self.coef],
            "scaler": self.scaler.to_dict() if self.scaler is not None else None,
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        scaler = Scaler.from_dict(d["scaler"]) if d.get("scaler") else None
        return cls(float(d["intercept"]), np.array(d["coef"], dtype=float), scaler, float(d["ridge"]))


def fit_mlr(X, y, ridge: float = 1e-6) -> LinearModel:
    X, y = check_xy(X, y)
    scaler = Scaler.fit(X)
    intercept_std, beta = _ridge_solve(scaler.transform(X), y, ridge)
    coef = beta / scaler.scale
    intercept = intercept_std - float(scaler.mean @ coef)
    return LinearModel(intercept, coef, scaler, float(ridge))


def monomial_exponents(n_features: int, degree: int) -> np.ndarray:
    """All exponent vectors of total degree <= ``degree``, constant first."""
    rows = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_features), total):
            e = [0] * n_features
            for j in combo:
                e[j] += 1
            rows.append(e)
    return np.array(rows, dtype=int).reshape(len(rows), n_features)


def expand(Z: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(Z)
    out = np.ones((Z.shape[0], len(exponents)))
    for t, e in enumerate(exponents):
        for j in np.flatnonzero(e):
            out[:, t] *= Z[:, j] ** e[j]
    return out


@dataclass(frozen=True, eq=False)
class PolyModel:
    """Polynomial over standardised inputs; ``coef[0]`` belongs to the constant term."""

    degree: int
    exponents: np.ndarray
    coef: np.ndarray
    scaler: Scaler
    ridge: float

    kind = "pmr"

    @property
    def n_features(self) -> int:
        return self.exponents.shape[1]

    def predict(self, X) -> np.ndarray:
        Z = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        return expand(Z, self.exponents) @ self.coef

    def raw_coefficients(self) -> dict[tuple[int, ...], float]:
        """The same polynomial re-expressed over raw (unscaled) inputs."""
        d = self.n_features
        out: dict[tuple[int, ...], float] = defaultdict(float)
        for e, c in zip(self.exponents, self.coef):
            poly = {(0,) * d: float(c)}
            for j in np.flatnonzero(e):
                mu, s, p = self.scaler.mean[j], self.scaler.scale[j], int(e[j])
                factor = {k: math.comb(p, k) * (-mu) ** (p - k) / s**p for k in range(p + 1)}
                nxt: dict[tuple[int, ...], float] = defaultdict(float)
                for exp, val in poly.items():
                    for k, f in factor.items():
                        new = list(exp)
                        new[j] += k
                        nxt[tuple(new)] += val * f
                poly = nxt
            for exp, val in poly.items():
                out[exp] += val
        return dict(out)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degree": self.degree,
            "exponents": self.exponents.tolist(),
            "coef": [float(c) for c in self.coef],
            "scaler": self.scaler.to_dict(),
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolyModel":
        exps = np.array(d["exponents"], dtype=int)
        return cls(int(d["degree"]), exps, np.array(d["coef"], dtype=float), Scaler.from_dict(d["scaler"]), float(d["ridge"]))


def fit_pmr(X, y, degree: int = 2, ridge: float = 1e-6, max_terms: int = 5000) -> PolyModel:
    X, y = check_xy(X, y)
    if degree < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {degree}")
    n_terms = math.comb(X.shape[1] + degree, degree)
    if n_terms > max_terms:
        raise ValueError(
            f"degree-{degree} expansion of {X.shape[1]} inputs has {n_terms} terms, "
            f"over the budget of {max_terms}; use a lower degree"
        )
    scaler = Scaler.fit(X)
    exponents = monomial_exponents(X.shape[1], degree)
    Phi = expand(scaler.transform(X), exponents[1:])
    intercept, beta = _ridge_solve(Phi, y, ridge)
    return PolyModel(degree, exponents, np.concatenate([[intercept], beta]), scaler, float(ridge))
