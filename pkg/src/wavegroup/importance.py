"""Out-of-bag permutation importance of single columns and column groups."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._rng import PERMUTATION, stream
from .forest import Dataset, Forest, oob_risk


@dataclass
class ImportanceReport:
    target: str
    columns: tuple
    raw: float
    rescaled: float
    per_tree: np.ndarray = field(repr=False)
    trees_used: int
    trees_skipped: int = 0

    @property
    def size(self) -> int:
        return len(self.columns)


def _baseline_risks(forest: Forest, data: Dataset) -> list:
    return [oob_risk(t, data) if t.oob_indices.size else None for t in forest.trees]


def _grouped(forest, data, columns, label, seed, key, repeats, permute, baseline):
    columns = tuple(int(c) for c in columns)
    if not columns:
        raise ValueError("empty group")
    if len(set(columns)) != len(columns):
        raise ValueError("duplicate columns in group")
    if min(columns) < 0 or max(columns) >= data.n_features:
        raise ValueError("group column outside the design matrix")
    if data.n_features != forest.n_features or data.n_rows != forest.n_rows:
        raise ValueError("dataset does not match the data the forest was fitted on")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if baseline is None:
        baseline = _baseline_risks(forest, data)
    increments = []
    for m, tree in enumerate(forest.trees):
        base = baseline[m]
        if base is None:
            continue
        rng = stream(seed, PERMUTATION, key, m)
        n_oob = tree.oob_indices.size
        acc = 0.0
        for _ in range(repeats):
            perm = rng.permutation(n_oob) if permute is None else permute(m, n_oob, rng)
            acc += oob_risk(tree, data, perm, columns) - base
        increments.append(acc / repeats)
    if not increments:
        raise ValueError("every tree has an empty out-of-bag set")
    per_tree = np.asarray(increments)
    raw = float(per_tree.mean())
    return ImportanceReport(label, columns, raw, raw / len(columns), per_tree,
                            len(increments), len(forest.trees) - len(increments))


def grouped_importance(forest: Forest, data: Dataset, columns: Sequence[int],
                       seed: int = 0, key: int = 0, label: Optional[str] = None,
                       repeats: int = 1, permute: Optional[Callable] = None) -> ImportanceReport:
    """Permutation importance of a column group.

    Each tree's OOB rows are shuffled by one permutation that is applied to all
    columns of the group at once.  The permutation of tree ``m`` comes from the
    stream ``(seed, key, m)``; ``permute(m, n_oob, rng)`` can override it.
    """
    if label is None:
        label = "{" + ",".join(str(c) for c in columns) + "}"
    return _grouped(forest, data, columns, label, seed, key, repeats, permute, None)


def individual_importance(forest: Forest, data: Dataset, column: int, seed: int = 0,
                          key: int = 0, repeats: int = 1,
                          permute: Optional[Callable] = None) -> ImportanceReport:
    """Permutation importance of a single column (Breiman's OOB estimator)."""
    return _grouped(forest, data, (column,), data.column_names[column], seed, key,
                    repeats, permute, None)


def importance_table(forest: Forest, data: Dataset, family, seed: int = 0,
                     repeats: int = 1, shared_key: Optional[int] = None) -> list:
    """Grouped importance for every group of ``family``.

    Group ``i`` draws its permutations from key ``i``.  With ``shared_key``
    every group reuses the same per-tree permutations, which pairs the
    comparison of overlapping groups (common random numbers).
    """
    baseline = _baseline_risks(forest, data)
    return [_grouped(forest, data, g.columns, g.label, seed,
                     i if shared_key is None else shared_key, repeats, None, baseline)
            for i, g in enumerate(family)]


def reports_to_csv(reports: Sequence[ImportanceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "size", "raw", "rescaled", "trees_used"])
    for r in reports:
        w.writerow([r.target, r.size, repr(r.raw), repr(r.rescaled), r.trees_used])
    return buf.getvalue()
