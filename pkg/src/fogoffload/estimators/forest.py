"""Random forest regression: bootstrap-bagged CART trees with variance splits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .scaling import check_xy

LEAF = -1


@numba.njit(cache=True)
def _best_split(X, y, idx, features, n_required, min_leaf):
    """Best (feature, threshold, position) over ``features`` for the rows ``idx``.

    Evaluates features in the given order; stops after ``n_required`` features
    once some valid split has been seen. Returns feature -1 if none exists.
    """
    n = idx.shape[0]
    best_f = -1
    best_thr = 0.0
    best_cost = np.inf
    xs = np.empty(n)
    ys = np.empty(n)
    tried = 0
    for f in features:
        if tried >= n_required and best_f >= 0:
            break
        tried += 1
        for i in range(n):
            xs[i] = X[idx[i], f]
        order = np.argsort(xs, kind="mergesort")
        total = 0.0
        total_sq = 0.0
        for i in range(n):
            v = y[idx[order[i]]]
            ys[i] = v
            total += v
            total_sq += v * v
        left = 0.0
        left_sq = 0.0
        for i in range(n - 1):
            left += ys[i]
            left_sq += ys[i] * ys[i]
            n_left = i + 1
            n_right = n - n_left
            if n_left < min_leaf:
                continue
            if n_right < min_leaf:
                break
            a = xs[order[i]]
            b = xs[order[i + 1]]
            if not a < b:
                continue
            right = total - left
            right_sq = total_sq - left_sq
            cost = (left_sq - left * left / n_left) + (right_sq - right * right / n_right)
            if cost < best_cost:
                best_cost = cost
                best_f = f
                thr = 0.5 * (a + b)
                if not thr < b:
                    thr = a
                best_thr = thr
    return best_f, best_thr


@numba.njit(cache=True)
def _build_tree(X, y, rows, max_depth, min_leaf, n_features_split, seed):
    np.random.seed(seed)
    d = X.shape[1]
    cap = 2 * rows.shape[0] + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    # Explicit stack of (node id, depth, row subset).
    stack_nodes = [0]
    stack_depth = [0]
    stack_rows = [rows]
    n_nodes = 1
    while len(stack_nodes) > 0:
        node = stack_nodes.pop()
        depth = stack_depth.pop()
        idx = stack_rows.pop()
        n = idx.shape[0]
        s = 0.0
        for i in range(n):
            s += y[idx[i]]
        mean = s / n
        value[node] = mean
        count[node] = n
        if depth >= max_depth or n < 2 * min_leaf:
            continue
        pure = True
        for i in range(n):
            if y[idx[i]] != y[idx[0]]:
                pure = False
                break
        if pure:
            continue
        features = np.random.permutation(d)
        f, thr = _best_split(X, y, idx, features, n_features_split, min_leaf)
        if f < 0:
            continue
        mask = np.empty(n, dtype=np.bool_)
        for i in range(n):
            mask[i] = X[idx[i], f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_nodes.append(n_nodes + 1)
        stack_depth.append(depth + 1)
        stack_rows.append(idx[~mask])
        stack_nodes.append(n_nodes)
        stack_depth.append(depth + 1)
        stack_rows.append(idx[mask])
        n_nodes += 2
    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        count[:n_nodes],
    )


@numba.njit(cache=True)
def _predict_tree(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf holding ``value``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == LEAF)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "count": self.count.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        ints = {k: np.array(d[k], dtype=np.int64) for k in ("feature", "left", "right", "count")}
        return cls(
            ints["feature"],
            np.array(d["threshold"], dtype=float),
            ints["left"],
            ints["right"],
            np.array(d["value"], dtype=float),
            ints["count"],
        )


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = 12
    min_samples_leaf: int = 2
    # None means ceil(d / 3) candidate features per split.
    max_features: int | None = None
    bootstrap: bool = True


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    n_features: int
    params: ForestParams = field(default_factory=ForestParams)
    seed: int = 0

    kind = "rfr"

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "seed": self.seed,
            "params": vars(self.params).copy(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        trees = tuple(Tree.from_dict(t) for t in d["trees"])
        return cls(trees, int(d["n_features"]), ForestParams(**d["params"]), int(d["seed"]))


def fit_rfr(X, y, params: ForestParams | None = None, seed: int = 0) -> ForestModel:
    params = params or ForestParams()
    X, y = check_xy(X, y)
    n, d = X.shape
    if params.n_trees < 1:
        raise ValueError(f"need at least one tree, got {params.n_trees}")
    if params.min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    if params.min_samples_leaf > n:
        raise ValueError(f"min_samples_leaf={params.min_samples_leaf} exceeds the {n} training rows")
    if params.max_depth is not None and params.max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    m = params.max_features if params.max_features is not None else math.ceil(d / 3)
    m = min(max(1, int(m)), d)
    depth = params.max_depth if params.max_depth is not None else n + 1

    X = np.ascontiguousarray(X)
    trees = []
    for t, child in enumerate(np.random.SeedSequence([seed, 0xF0]).spawn(params.n_trees)):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree_seed = int(child.generate_state(1)[0] & 0x7FFFFFFF)
        arrays = _build_tree(X, y, rows.astype(np.int64), depth, params.min_samples_leaf, m, tree_seed)
        trees.append(Tree(*arrays))
    return ForestModel(tuple(trees), d, params, int(seed))
