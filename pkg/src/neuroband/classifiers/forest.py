"""Random forest of Gini decision trees on bootstrap samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..errors import BadHyperparameters, DimensionMismatch, EmptyTrainingSet
from ..rng import Xoshiro256, derive_stream

_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_depth: int = 0  # 0 = unlimited
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # None = floor(sqrt(d))

    def validate(self) -> None:
        if self.n_estimators < 1:
            raise BadHyperparameters("n_estimators must be >= 1")
        if self.max_depth < 0:
            raise BadHyperparameters("max_depth must be >= 0 (0 = unlimited)")
        if self.min_samples_leaf < 1:
            raise BadHyperparameters("min_samples_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise BadHyperparameters("features_per_split must be >= 1")


@dataclass(frozen=True)
class DecisionTree:
    """Array-backed binary tree; ``feature[i] == -1`` marks a leaf.

    ``counts[i]`` holds the class counts of the training samples that reached
    node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.counts[self.apply(X)], axis=1)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DecisionTree:
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["counts"], dtype=np.int64).reshape(len(d["feature"]), -1),
        )


def grow_tree(X: np.ndarray, y: np.ndarray, sample: np.ndarray, n_classes: int,
              params: ForestParams, rng: Xoshiro256) -> DecisionTree:
    """Grow one tree on the rows ``sample`` of ``X`` (duplicates allowed)."""
    d = X.shape[1]
    mtry = params.features_per_split or max(1, math.isqrt(d))
    mtry = min(mtry, d)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(sample), sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        m = idx.shape[0]
        if np.count_nonzero(c) <= 1:
            continue
        if params.max_depth and depth >= params.max_depth:
            continue
        if m < 2 * params.min_samples_leaf:
            continue
        cand = np.array(rng.sample(d, mtry), dtype=np.int64)
        f, thr, score = _kernels.best_split(X, y, idx, cand, n_classes, params.min_samples_leaf)
        parent = float(np.dot(c, c)) / m
        if f < 0 or score - parent <= _MIN_GAIN * m:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(len(feature), n_classes),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    params: ForestParams
    seed: int
    n_classes: int
    n_features: int

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.params.n_estimators,
            "max_depth": self.params.max_depth,
            "min_samples_leaf": self.params.min_samples_leaf,
            "features_per_split": self.params.features_per_split,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ForestModel:
        params = ForestParams(d["n_estimators"], d["max_depth"], d["min_samples_leaf"],
                              d["features_per_split"])
        return cls(tuple(DecisionTree.from_dict(t) for t in d["trees"]), params,
                   int(d["seed"]), int(d["n_classes"]), int(d["n_features"]))


def fit_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0,
               n_classes: int | None = None) -> ForestModel:
    """Fit ``params.n_estimators`` trees, tree ``t`` drawing from stream ``(seed, t)``.

    Each tree sees an n-row bootstrap sample and considers ``floor(sqrt(d))``
    random features per split.
    """
    params.validate()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("forest needs a non-empty (n, d) training matrix")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("one label per training row required")
    n = X.shape[0]
    if n < 2:
        raise EmptyTrainingSet("forest needs at least two training rows")
    K = int(y.max()) + 1 if n_classes is None else n_classes
    trees = []
    for t in range(params.n_estimators):
        rng = derive_stream(seed, t)
        sample = np.array([rng.randbelow(n) for _ in range(n)], dtype=np.int64)
        trees.append(grow_tree(X, y, sample, K, params, rng))
    return ForestModel(tuple(trees), params, int(seed), K, X.shape[1])


def forest_predict(model: ForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote labels (ties to the lower class) and vote fractions."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got shape {X.shape}")
    votes = np.zeros((X.shape[0], model.n_classes))
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        votes[rows, tree.predict(X)] += 1
    proba = votes / len(model.trees)
    return np.argmax(votes, axis=1), proba
