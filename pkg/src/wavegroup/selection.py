"""Backward grouped elimination (RFE and its non-recursive variant) guided by
grouped permutation importance, repeated over random train/validation splits."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ._rng import FOREST, PERMUTATION, SPLIT, derive_seed, stream
from .forest import Dataset, ForestConfig, fit_forest
from .groups import Group, GroupFamily, restrict
from .importance import ImportanceReport, importance_table


@dataclass
class SelectionConfig:
    train_fraction: float = 0.9
    forest: ForestConfig = field(default_factory=ForestConfig)
    use_rescaled: bool = True
    runs: int = 1
    seed: int = 0
    importance_repeats: int = 1
    threads: int = 1

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class SelectionStep:
    active: list               # labels of the groups in the model
    validation_mse: float
    importances: list          # ImportanceReport per active group (empty if not computed)
    eliminated: str


@dataclass
class SelectionTrace:
    steps: list
    method: str = "rfe"

    @property
    def chosen_step(self) -> int:
        return _argmin_prefer_late([s.validation_mse for s in self.steps])

    @property
    def error_curve(self) -> list:
        """Validation MSE indexed by model size, largest model first."""
        return [s.validation_mse for s in self.steps]

    def groups_to_reach(self, tolerance: float = 0.10) -> int:
        """Smallest model size whose error is within ``tolerance`` of the minimum."""
        curve = np.asarray(self.error_curve)
        ok = np.flatnonzero(curve <= curve.min() * (1.0 + tolerance))
        return len(self.steps[int(ok.max())].active)


def _argmin_prefer_late(values) -> int:
    # later steps have fewer groups, so ties resolve toward the sparser model
    values = list(values)
    best = 0
    for i, v in enumerate(values):
        if v <= values[best]:
            best = i
    return best


def choose_model(trace: SelectionTrace) -> list:
    """Active group labels at the step with minimum validation error."""
    if not trace.steps:
        raise ValueError("empty selection trace")
    return list(trace.steps[trace.chosen_step].active)


def split_rows(n: int, train_fraction: float, seed: int, run: int):
    rng = stream(seed, SPLIT, run)
    perm = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 2), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _score(groups, train: Dataset, valid: Dataset, config: SelectionConfig, run, step,
           with_importance: bool):
    columns = sorted({c for g in groups for c in g.columns})
    pos = {c: i for i, c in enumerate(columns)}
    sub_train = train.take_columns(columns)
    fconf = ForestConfig(config.forest.num_trees,
                         None if config.forest.mtry is None else min(config.forest.mtry, len(columns)),
                         config.forest.min_leaf_size,
                         derive_seed(config.seed, FOREST, run, step))
    forest = fit_forest(sub_train, fconf, threads=config.threads)
    pred = forest.predict(valid.features[:, columns])
    mse = float(np.mean((valid.response - pred) ** 2))
    reports = []
    if with_importance:
        local = GroupFamily([Group(g.label, tuple(pos[c] for c in g.columns)) for g in groups])
        reports = importance_table(forest, sub_train, local,
                                   seed=derive_seed(config.seed, PERMUTATION, run, step),
                                   repeats=config.importance_repeats)
    return mse, reports


def _least_important(reports, use_rescaled: bool) -> ImportanceReport:
    def key(r):
        return (r.rescaled if use_rescaled else r.raw, -r.size, r.target)
    return min(reports, key=key)


def _check_family(family: GroupFamily, data: Dataset):
    if len(family) == 0:
        raise ValueError("empty group family")
    if not family.is_disjoint():
        raise ValueError("RFE requires a partition")
    cols = family.columns()
    if cols[0] < 0 or cols[-1] >= data.n_features:
        raise ValueError("group columns outside the design matrix")


def rfe_select(data: Dataset, family: GroupFamily, config: SelectionConfig = None,
               run: int = 0) -> SelectionTrace:
    """Recursive elimination: refit, score, recompute importances, drop the weakest group."""
    config = config or SelectionConfig()
    _check_family(family, data)
    train_rows, valid_rows = split_rows(data.n_rows, config.train_fraction, config.seed, run)
    train, valid = data.take_rows(train_rows), data.take_rows(valid_rows)
    active = list(family)
    steps = []
    step = 0
    while active:
        mse, reports = _score(active, train, valid, config, run, step, True)
        worst = _least_important(reports, config.use_rescaled)
        steps.append(SelectionStep([g.label for g in active], mse, reports, worst.target))
        active = [g for g in active if g.label != worst.target]
        step += 1
    return SelectionTrace(steps, "rfe")


def nrfe_select(data: Dataset, family: GroupFamily, config: SelectionConfig = None,
                run: int = 0) -> SelectionTrace:
    """Non-recursive elimination: rank once on the full model, then drop in that order."""
    config = config or SelectionConfig()
    _check_family(family, data)
    train_rows, valid_rows = split_rows(data.n_rows, config.train_fraction, config.seed, run)
    train, valid = data.take_rows(train_rows), data.take_rows(valid_rows)
    active = list(family)
    mse, reports = _score(active, train, valid, config, run, 0, True)
    remaining = list(reports)
    order = []
    while remaining:
        worst = _least_important(remaining, config.use_rescaled)
        order.append(worst.target)
        remaining = [r for r in remaining if r.target != worst.target]
    steps = [SelectionStep([g.label for g in active], mse, reports, order[0])]
    for step, label in enumerate(order[:-1], start=1):
        active = [g for g in active if g.label != label]
        mse, _ = _score(active, train, valid, config, run, step, False)
        steps.append(SelectionStep([g.label for g in active], mse, [], order[step]))
    return SelectionTrace(steps, "nrfe")


@dataclass
class AggregateReport:
    labels: list
    sizes: list
    selection_frequency: dict        # label -> number of runs selecting it
    mean_curve: list                 # mean validation MSE for |family|, |family|-1, ..., 1 groups
    step1_importances: dict          # label -> list of step-1 rescaled importances, one per run
    traces: list
    runs: int

    @property
    def chosen_size(self) -> int:
        """Model size minimising the mean error curve (ties toward fewer groups)."""
        return len(self.labels) - _argmin_prefer_late(self.mean_curve)

    def to_json(self) -> str:
        return json.dumps({"runs": self.runs, "chosen_size": self.chosen_size,
                           "selection_frequency": self.selection_frequency,
                           "mean_curve": self.mean_curve}, indent=1)


def repeat_selection(data: Union[Dataset, Callable[[int], Dataset]], family: GroupFamily,
                     config: SelectionConfig = None, method: str = "rfe") -> AggregateReport:
    """Run the selection ``config.runs`` times on fresh splits (and fresh data
    when ``data`` is a callable ``run_index -> Dataset``)."""
    config = config or SelectionConfig()
    select = {"rfe": rfe_select, "nrfe": nrfe_select}.get(method)
    if select is None:
        raise ValueError(f"unknown selection method {method!r}")
    labels = family.labels
    freq = {label: 0 for label in labels}
    imps = {label: [] for label in labels}
    curves = []
    traces = []
    for run in range(config.runs):
        try:
            run_data = data(run) if callable(data) else data
            trace = select(run_data, family, config, run)
        except Exception as exc:
            raise RuntimeError(f"selection run {run} failed: {exc}") from exc
        traces.append(trace)
        for label in choose_model(trace):
            freq[label] += 1
        for r in trace.steps[0].importances:
            imps[r.target].append(r.rescaled)
        curves.append(trace.error_curve)
    mean_curve = [float(v) for v in np.mean(np.asarray(curves), axis=0)]
    return AggregateReport(labels, [g.size for g in family], freq, mean_curve, imps,
                           traces, config.runs)


# CSV emitters

def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["run", "method", "step", "n_groups", "validation_mse", "eliminated", "active"])
    for run, t in enumerate(traces):
        for s, step in enumerate(t.steps):
            w.writerow([run, t.method, s, len(step.active), repr(step.validation_mse),
                        step.eliminated, ";".join(step.active)])
    return buf.getvalue()


def importances_to_csv(traces) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["run", "step", "group", "size", "raw", "rescaled", "trees_used"])
    for run, t in enumerate(traces):
        for s, step in enumerate(t.steps):
            for r in step.importances:
                w.writerow([run, s, r.target, r.size, repr(r.raw), repr(r.rescaled),
                            r.trees_used])
    return buf.getvalue()


def aggregate_to_csv(report: AggregateReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["group", "size", "selected_runs", "selection_frequency",
                "mean_step1_rescaled"])
    for label, size in zip(report.labels, report.sizes):
        vals = report.step1_importances[label]
        mean_imp = repr(float(np.mean(vals))) if vals else ""
        w.writerow([label, size, report.selection_frequency[label],
                    repr(report.selection_frequency[label] / report.runs), mean_imp])
    return buf.getvalue()


def curve_to_csv(report: AggregateReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["n_groups", "mean_validation_mse"])
    n = len(report.labels)
    for i, v in enumerate(report.mean_curve):
        w.writerow([n - i, repr(v)])
    return buf.getvalue()


def drop_constant_columns(data: Dataset, family: Optional[GroupFamily] = None,
                          rtol: float = 1e-9):
    """Remove columns whose spread is at round-off level.

    Coefficients that are exactly zero in the wavelet domain come back from an
    inverse/forward transform round trip as ~1e-16 noise; trees must not split
    on them.  Returns ``(data, family, kept_columns)``.
    """
    X = data.features
    spread = X.max(axis=0) - X.min(axis=0)
    scale = max(1.0, float(np.abs(X).max()))
    keep = np.flatnonzero(spread > rtol * scale)
    if keep.size == 0:
        raise ValueError("every column is constant")
    reduced = data.take_columns(keep)
    if family is not None:
        family = restrict(family, keep)
    return reduced, family, keep
