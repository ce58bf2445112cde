"""epsilon-insensitive support vector regression trained by SMO.

The dual is solved over 2n variables ``beta = [alpha, alpha*]`` with signs
``s = [+1, -1]``:

    min 1/2 beta' Q beta + p' beta,   Q_ab = s_a s_b K(a mod n, b mod n),
    p = [eps - y, eps + y],   s' beta = 0,   0 <= beta <= C,

selecting at every step the pair that violates the KKT conditions most.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .scaling import Scaler, check_xy

TAU = 1e-12


@numba.njit(cache=True)
def _dual_objective(beta, G, p):
    # 1/2 b'Qb + p'b, with G = Qb + p
    return 0.5 * np.sum(beta * (G + p))


@numba.njit(cache=True)
def _smo(K, y, C, eps, tol, max_iter, record_every):
    n = y.shape[0]
    m = 2 * n
    s = np.empty(m)
    p = np.empty(m)
    for t in range(n):
        s[t] = 1.0
        s[t + n] = -1.0
        p[t] = eps - y[t]
        p[t + n] = eps + y[t]
    beta = np.zeros(m)
    G = p.copy()
    trace = np.empty(max_iter // record_every + 2)
    n_trace = 0
    trace[n_trace] = 0.0
    n_trace += 1

    it = 0
    gap = np.inf
    while it < max_iter:
        g_max = -np.inf
        g_max2 = -np.inf
        i = -1
        j = -1
        for t in range(m):
            if (s[t] > 0 and beta[t] < C) or (s[t] < 0 and beta[t] > 0):
                v = -s[t] * G[t]
                if v > g_max:
                    g_max = v
                    i = t
            if (s[t] > 0 and beta[t] > 0) or (s[t] < 0 and beta[t] < C):
                v = s[t] * G[t]
                if v > g_max2:
                    g_max2 = v
                    j = t
        gap = g_max + g_max2
        if i < 0 or j < 0 or gap < tol:
            break

        ki = i % n
        kj = j % n
        q_ii = K[ki, ki]
        q_jj = K[kj, kj]
        q_ij = s[i] * s[j] * K[ki, kj]
        old_i = beta[i]
        old_j = beta[j]
        if s[i] != s[j]:
            quad = q_ii + q_jj + 2.0 * q_ij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = diff
            else:
                if beta[i] < 0:
                    beta[i] = 0.0
                    beta[j] = -diff
            if diff > 0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            else:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = C + diff
        else:
            quad = q_ii + q_jj - 2.0 * q_ij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if total > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = total - C
            else:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = total
            if total > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = total - C
            else:
                if beta[i] < 0:
                    beta[i] = 0.0
                    beta[j] = total

        d_i = beta[i] - old_i
        d_j = beta[j] - old_j
        for t in range(m):
            kt = t % n
            G[t] += s[t] * (s[i] * K[kt, ki] * d_i + s[j] * K[kt, kj] * d_j)
        it += 1
        if it % record_every == 0:
            trace[n_trace] = _dual_objective(beta, G, p)
            n_trace += 1

    trace[n_trace] = _dual_objective(beta, G, p)
    n_trace += 1

    # Offset from free variables, or the middle of the feasible interval.
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(m):
        yg = s[t] * G[t]
        if beta[t] >= C:
            if s[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif beta[t] <= 0:
            if s[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    rho = sum_free / n_free if n_free > 0 else 0.5 * (ub + lb)
    return beta, rho, it, gap, trace[:n_trace]


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvrParams:
    kernel: str = "rbf"
    C: float = 10.0
    epsilon: float = 0.1
    # None means 1 / n_features.
    gamma: float | None = None
    tol: float = 1e-3
    # One pass is n pair updates.
    max_passes: int = 10_000


@dataclass(frozen=True, eq=False)
class SvrModel:
    kernel: str
    gamma: float
    dual_coef: np.ndarray  # alpha - alpha*, support vectors only
    support: np.ndarray  # standardised support inputs
    bias: float
    C: float
    epsilon: float
    scaler: Scaler
    meta: dict = field(default_factory=dict)

    kind = "svr"

    @property
    def n_features(self) -> int:
        return len(self.scaler.mean)

    def predict(self, X) -> np.ndarray:
        Z = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        if len(self.dual_coef) == 0:
            return np.full(Z.shape[0], self.bias)
        return kernel_matrix(Z, self.support, self.kernel, self.gamma) @ self.dual_coef + self.bias

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "dual_coef": self.dual_coef.tolist(),
            "support": self.support.tolist(),
            "bias": self.bias,
            "C": self.C,
            "epsilon": self.epsilon,
            "scaler": self.scaler.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        scaler = Scaler.from_dict(d["scaler"])
        support = np.array(d["support"], dtype=float).reshape(-1, len(scaler.mean))
        return cls(
            d["kernel"],
            float(d["gamma"]),
            np.array(d["dual_coef"], dtype=float),
            support,
            float(d["bias"]),
            float(d["C"]),
            float(d["epsilon"]),
            scaler,
            dict(d.get("meta", {})),
        )


def fit_svr(X, y, params: SvrParams | None = None) -> SvrModel:
    params = params or SvrParams()
    X, y = check_xy(X, y)
    if params.kernel not in ("rbf", "linear"):
        raise ValueError(f"unknown kernel {params.kernel!r}")
    if not params.C > 0:
        raise ValueError(f"C must be > 0, got {params.C}")
    if not params.epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {params.epsilon}")
    gamma = params.gamma if params.gamma is not None else 1.0 / X.shape[1]
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")

    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    K = np.ascontiguousarray(kernel_matrix(Z, Z, params.kernel, gamma))
    n = len(y)
    max_iter = params.max_passes * n
    beta, rho, n_iter, gap, trace = _smo(K, y, float(params.C), float(params.epsilon), float(params.tol), max_iter, n)

    coef = beta[:n] - beta[n:]
    sv = np.flatnonzero(coef != 0.0)
    meta = {
        "iterations": int(n_iter),
        "max_iterations": int(max_iter),
        "converged": bool(gap < params.tol),
        "kkt_gap": float(gap),
        "dual_objective": [float(v) for v in trace],
    }
    return SvrModel(params.kernel, float(gamma), coef[sv], Z[sv], -float(rho), float(params.C), float(params.epsilon), scaler, meta)
