"""Regression trees and bagged random forests with out-of-bag bookkeeping."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from ._rng import BOOTSTRAP, stream

FOREST_FORMAT = "wavegroup-forest"
FOREST_VERSION = 1


class EmptyOOBError(ValueError):
    """Raised when a tree has no out-of-bag rows."""


@dataclass
class Dataset:
    """Design matrix ``features`` (n x P), response and column labels."""

    features: np.ndarray
    response: np.ndarray
    column_names: list[str] = field(default=None)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.response = np.ascontiguousarray(self.response, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, p = self.features.shape
        if self.response.shape != (n,):
            raise ValueError(f"response has shape {self.response.shape}, expected ({n},)")
        if n < 2:
            raise ValueError("a dataset needs at least 2 rows")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.response))):
            raise ValueError("missing or non-finite values are not supported")
        if self.column_names is None:
            self.column_names = [f"x{j}" for j in range(p)]
        self.column_names = [str(c) for c in self.column_names]
        if len(self.column_names) != p:
            raise ValueError("one column name per feature is required")
        if len(set(self.column_names)) != p:
            raise ValueError("column names must be unique")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take_rows(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.response[rows], list(self.column_names))

    def take_columns(self, columns) -> "Dataset":
        columns = np.asarray(columns, dtype=np.int64)
        return Dataset(self.features[:, columns], self.response,
                       [self.column_names[c] for c in columns])


@dataclass
class ForestConfig:
    """Forest hyper-parameters.  ``mtry=None`` means ``max(1, P // 3)``."""

    num_trees: int = 100
    mtry: Optional[int] = None
    min_leaf_size: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if self.min_leaf_size < 1:
            raise ValueError("min_leaf_size must be >= 1")

    def resolve_mtry(self, n_features: int) -> int:
        mtry = max(1, n_features // 3) if self.mtry is None else self.mtry
        if mtry > n_features:
            raise ValueError(f"mtry={mtry} exceeds the number of features ({n_features})")
        return mtry

    def to_dict(self) -> dict:
        return {"num_trees": self.num_trees, "mtry": self.mtry,
                "min_leaf_size": self.min_leaf_size, "seed": self.seed}


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    bootstrap_indices: np.ndarray
    oob_indices: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply_predict(self, X, rows, source=None, columns=None) -> np.ndarray:
        """Predict ``X[rows]``; columns in ``columns`` are read from ``X[source]``."""
        rows = np.asarray(rows, dtype=np.int64)
        mask = np.zeros(X.shape[1], dtype=np.bool_)
        if columns is not None and source is not None:
            mask[np.asarray(columns, dtype=np.int64)] = True
            source = np.asarray(source, dtype=np.int64)
        else:
            source = rows
        return _kernels.predict_rows(self.feature, self.threshold, self.left, self.right,
                                     self.value, X, rows, source, mask)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.apply_predict(X, np.arange(X.shape[0]))


@dataclass
class Forest:
    trees: list[Tree]
    config: ForestConfig
    n_features: int
    n_rows: int

    def predict(self, X) -> np.ndarray:
        """Mean tree prediction for each row of ``X`` (or a single vector)."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        X = np.ascontiguousarray(X)
        rows = np.arange(X.shape[0])
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.apply_predict(X, rows)
        out = acc / len(self.trees)
        return out[0] if single else out


def fit_tree(data: Dataset, rows, mtry: int, rng: np.random.Generator,
             min_leaf_size: int = 1) -> Tree:
    """Grow one unpruned CART regression tree on the row multiset ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("empty training set")
    if not 1 <= mtry <= data.n_features:
        raise ValueError(f"mtry must lie in [1, {data.n_features}]")
    key = int(rng.integers(0, 2**63 - 1))
    feature, threshold, left, right, value, _ = _kernels.build_tree(
        data.features, data.response, rows, int(mtry), int(min_leaf_size), key)
    in_bag = np.zeros(data.n_rows, dtype=bool)
    in_bag[rows] = True
    return Tree(feature, threshold, left, right, value, rows, np.flatnonzero(~in_bag))


def _fit_one(data, config, mtry, m):
    g = stream(config.seed, BOOTSTRAP, m)
    rows = g.integers(0, data.n_rows, data.n_rows)
    return fit_tree(data, rows, mtry, g, config.min_leaf_size)


def fit_forest(data: Dataset, config: ForestConfig, threads: int = 1) -> Forest:
    """Fit ``config.num_trees`` trees on independent bootstrap samples.

    Tree ``m`` draws its bootstrap and feature subsets from the stream keyed by
    ``(config.seed, m)``, so the result does not depend on ``threads``.
    """
    if data.n_rows < 2:
        raise ValueError("a forest needs at least 2 rows")
    mtry = config.resolve_mtry(data.n_features)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            trees = list(ex.map(lambda m: _fit_one(data, config, mtry, m),
                                range(config.num_trees)))
    else:
        trees = [_fit_one(data, config, mtry, m) for m in range(config.num_trees)]
    return Forest(trees, config, data.n_features, data.n_rows)


def predict(forest: Forest, x) -> float:
    """Forest prediction for one length-P vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict expects a single feature vector")
    return float(forest.predict(x))


def oob_risk(tree: Tree, data: Dataset, permutation: Optional[np.ndarray] = None,
             columns: Optional[Sequence[int]] = None) -> float:
    """Mean squared error of ``tree`` over its out-of-bag rows.

    If ``permutation`` (a permutation of ``range(len(tree.oob_indices))``) and
    ``columns`` are given, those columns of OOB row ``i`` are replaced by the
    values of OOB row ``permutation[i]``.
    """
    oob = tree.oob_indices
    if oob.size == 0:
        raise EmptyOOBError("no OOB rows")
    source = None
    if permutation is not None:
        source = oob[np.asarray(permutation, dtype=np.int64)]
    pred = tree.apply_predict(data.features, oob, source, columns)
    return float(_kernels.squared_error(pred, data.response, oob))


def forest_to_json(forest: Forest) -> str:
    trees = []
    for t in forest.trees:
        trees.append({
            "feature": t.feature.tolist(),
            "threshold": t.threshold.tolist(),
            "left": t.left.tolist(),
            "right": t.right.tolist(),
            "value": t.value.tolist(),
            "bootstrap": t.bootstrap_indices.tolist(),
        })
    doc = {"format": FOREST_FORMAT, "version": FOREST_VERSION,
           "config": forest.config.to_dict(), "n_features": forest.n_features,
           "n_rows": forest.n_rows, "trees": trees}
    return json.dumps(doc)


def forest_from_json(text: str) -> Forest:
    doc = json.loads(text)
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError("not a serialized forest")
    if doc.get("version") != FOREST_VERSION:
        raise ValueError(f"unsupported forest version {doc.get('version')}")
    n_rows = int(doc["n_rows"])
    trees = []
    for t in doc["trees"]:
        boot = np.asarray(t["bootstrap"], dtype=np.int64)
        in_bag = np.zeros(n_rows, dtype=bool)
        in_bag[boot] = True
        trees.append(Tree(np.asarray(t["feature"], dtype=np.int64),
                          np.asarray(t["threshold"], dtype=np.float64),
                          np.asarray(t["left"], dtype=np.int64),
                          np.asarray(t["right"], dtype=np.int64),
                          np.asarray(t["value"], dtype=np.float64),
                          boot, np.flatnonzero(~in_bag)))
    return Forest(trees, ForestConfig(**doc["config"]), int(doc["n_features"]), n_rows)
