"""Gradient-boosted regression trees on logistic loss.

Second-order (Newton) boosting: each tree fits the gradient/hessian of the
log loss and leaves take the regularized Newton value.  Missing feature
values are routed to whichever child gives the higher gain and the chosen
default direction is stored with the split.  Training is exact greedy over
sorted values and fully deterministic: features are scanned in index order,
thresholds in value order, and only a strictly better gain replaces the
incumbent split.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

_LAMBDA = 1e-6  # leaf regularizer; keeps Newton values finite on pure nodes
_MIN_GAIN = 1e-12


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60, 60)))


@dataclass
class _Split:
    gain: float
    feature: int
    threshold: float
    missing_left: bool


class _Node:
    __slots__ = ("feature", "threshold", "missing_left", "left", "right", "value")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.missing_left = True
        self.left: "_Node | None" = None
        self.right: "_Node | None" = None
        self.value = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "missing_left": self.missing_left,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "_Node":
        node = cls()
        if "value" in data:
            node.value = data["value"]
            return node
        node.feature = data["feature"]
        node.threshold = data["threshold"]
        node.missing_left = data["missing_left"]
        node.left = cls.from_dict(data["left"])
        node.right = cls.from_dict(data["right"])
        return node


def _best_split(x: np.ndarray, g: np.ndarray, h: np.ndarray,
                min_leaf: int) -> _Split | None:
    """Best threshold for one feature column, trying missing both ways."""
    missing = np.isnan(x)
    known = ~missing
    n_known = int(known.sum())
    if n_known < 2:
        return None
    xs = x[known]
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    gs = g[known][order]
    hs = h[known][order]
    G, H = float(g.sum()), float(h.sum())
    g_miss = float(g[missing].sum())
    h_miss = float(h[missing].sum())
    n_miss = int(missing.sum())

    cut = np.nonzero(xs[:-1] != xs[1:])[0]  # split after position i
    if len(cut) == 0:
        return None
    g_prefix = np.cumsum(gs)[cut]
    h_prefix = np.cumsum(hs)[cut]
    n_prefix = cut + 1
    parent = G * G / (H + _LAMBDA)

    best: _Split | None = None
    for miss_left in (True, False):
        gl = g_prefix + (g_miss if miss_left else 0.0)
        hl = h_prefix + (h_miss if miss_left else 0.0)
        nl = n_prefix + (n_miss if miss_left else 0)
        gr = G - gl
        hr = H - hl
        nr = (n_known + n_miss) - nl
        ok = (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        gain = np.where(
            ok,
            gl * gl / (hl + _LAMBDA) + gr * gr / (hr + _LAMBDA) - parent,
            -np.inf)
        idx = int(np.argmax(gain))
        if gain[idx] > (_MIN_GAIN if best is None else best.gain + _MIN_GAIN):
            threshold = 0.5 * (xs[cut[idx]] + xs[cut[idx] + 1])
            best = _Split(float(gain[idx]), -1, float(threshold), miss_left)
    return best


class GbdtModel:
    """Reference boosted-tree classifier with predict_proba in (0, 1)."""

    def __init__(self, n_trees: int = 200, depth: int = 3, shrinkage: float = 0.1,
                 min_leaf: int = 20, seed: int = 0):
        self.n_trees = n_trees
        self.depth = depth
        self.shrinkage = shrinkage
        self.min_leaf = min_leaf
        self.seed = seed  # recorded for provenance; training is deterministic
        self.base_score = 0.0
        self.trees: list[_Node] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GbdtModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        base_rate = float(np.clip(y.mean() if len(y) else 0.5, 1e-6, 1 - 1e-6))
        self.base_score = math.log(base_rate / (1.0 - base_rate))
        self.trees = []
        if self.n_trees == 0 or len(y) == 0 or len(np.unique(y)) < 2:
            if len(np.unique(y)) < 2 and self.n_trees > 0 and len(y):
                warnings.warn("single-class training labels; constant model")
            return self
        margin = np.full(len(y), self.base_score)
        for _ in range(self.n_trees):
            p = _sigmoid(margin)
            grad = y - p               # ascent direction of the log likelihood
            hess = p * (1.0 - p)
            tree = self._build(X, grad, hess, np.arange(len(y)), 0)
            self.trees.append(tree)
            margin += self.shrinkage * self._tree_predict(tree, X)
        return self

    def _build(self, X, grad, hess, indices, level) -> _Node:
        node = _Node()
        g = grad[indices]
        h = hess[indices]
        node.value = float(g.sum() / (h.sum() + _LAMBDA))
        if level >= self.depth or len(indices) < 2 * self.min_leaf:
            return node
        best: _Split | None = None
        for j in range(X.shape[1]):
            split = _best_split(X[indices, j], g, h, self.min_leaf)
            if split is not None and (best is None or split.gain > best.gain + _MIN_GAIN):
                split.feature = j
                best = split
        if best is None:
            return node
        x = X[indices, best.feature]
        missing = np.isnan(x)
        goes_left = (x <= best.threshold) | (missing & best.missing_left)
        left_idx = indices[goes_left]
        right_idx = indices[~goes_left]
        if len(left_idx) < self.min_leaf or len(right_idx) < self.min_leaf:
            return node
        node.feature = best.feature
        node.threshold = best.threshold
        node.missing_left = best.missing_left
        node.left = self._build(X, grad, hess, left_idx, level + 1)
        node.right = self._build(X, grad, hess, right_idx, level + 1)
        return node

    @staticmethod
    def _tree_predict(tree: _Node, X: np.ndarray) -> np.ndarray:
        out = np.zeros(len(X))
        stack = [(tree, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            if node.is_leaf:
                out[idx] = node.value
                continue
            x = X[idx, node.feature]
            missing = np.isnan(x)
            goes_left = (x <= node.threshold) | (missing & node.missing_left)
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out

    def decision_margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        margin = np.full(len(X), self.base_score)
        for tree in self.trees:
            margin += self.shrinkage * self._tree_predict(tree, X)
        return margin

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.clip(_sigmoid(self.decision_margin(X)), 1e-9, 1 - 1e-9)

    def to_dict(self) -> dict:
        return {
            "kind": "gbdt",
            "hyper": {"n_trees": self.n_trees, "depth": self.depth,
                      "shrinkage": self.shrinkage, "min_leaf": self.min_leaf,
                      "seed": self.seed},
            "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GbdtModel":
        model = cls(**data["hyper"])
        model.base_score = data["base_score"]
        model.trees = [_Node.from_dict(t) for t in data["trees"]]
        return model


class LogisticModel:
    """L2-regularized logistic regression trained by full-batch gradient
    descent on internally standardized columns (missing values imputed to the
    training column mean; the companion presence flags carry missingness)."""

    def __init__(self, lr: float = 0.1, l2: float = 1e-4, epochs: int = 500,
                 seed: int = 0):
        self.lr = lr
        self.l2 = l2
        self.epochs = epochs
        self.seed = seed
        self.mean = np.zeros(0)
        self.scale = np.ones(0)
        self.weights = np.zeros(0)
        self.bias = 0.0
        self.constant: float | None = None

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return np.nan_to_num(Z, nan=0.0)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) == 0 or len(np.unique(y)) < 2:
            if len(y):
                warnings.warn("single-class training labels; constant model")
            self.constant = float(np.clip(y.mean() if len(y) else 0.5, 1e-9, 1 - 1e-9))
            return self
        self.constant = None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            self.mean = np.nanmean(X, axis=0)
        self.mean = np.nan_to_num(self.mean, nan=0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sd = np.nanstd(X, axis=0)
        sd = np.nan_to_num(sd, nan=0.0)
        self.scale = np.where(sd > 0, sd, 1.0)
        Z = self._standardize(X)
        n, d = Z.shape
        self.weights = np.zeros(d)
        self.bias = 0.0
        for _ in range(self.epochs):
            p = _sigmoid(Z @ self.weights + self.bias)
            err = p - y
            grad_w = Z.T @ err / n + self.l2 * self.weights
            grad_b = float(err.mean())
            self.weights -= self.lr * grad_w
            self.bias -= self.lr * grad_b
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.constant is not None:
            return np.full(len(X), self.constant)
        Z = self._standardize(X)
        return np.clip(_sigmoid(Z @ self.weights + self.bias), 1e-9, 1 - 1e-9)

    def to_dict(self) -> dict:
        return {
            "kind": "logistic",
            "hyper": {"lr": self.lr, "l2": self.l2, "epochs": self.epochs,
                      "seed": self.seed},
            "constant": self.constant,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LogisticModel":
        model = cls(**data["hyper"])
        model.constant = data["constant"]
        model.mean = np.asarray(data["mean"], dtype=float)
        model.scale = np.asarray(data["scale"], dtype=float)
        model.weights = np.asarray(data["weights"], dtype=float)
        model.bias = data["bias"]
        return model


def save_model(path, model) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_dict(), f, sort_keys=True)
        f.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if data["kind"] == "gbdt":
        return GbdtModel.from_dict(data)
    if data["kind"] == "logistic":
        return LogisticModel.from_dict(data)
    raise ValueError(f"unknown model kind {data['kind']!r}")


def make_model(kind: str, seed: int = 0, **hyper):
    if kind == "gbdt":
        return GbdtModel(seed=seed, **hyper)
    if kind == "logistic":
        return LogisticModel(seed=seed, **hyper)
    raise ValueError(f"unknown model kind {kind!r} (expected gbdt or logistic)")
