"""Reproduction drivers: simulate, select or scan, and write the tables behind each figure."""
from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, groups, selection, simulation
from ._rng import FOREST, PERMUTATION, derive_seed
from .forest import ForestConfig, fit_forest
from .importance import grouped_importance, individual_importance
from .io import atomic_write, fmt, sha256

EXPERIMENTS = ("exp1s1", "exp1s2", "exp2lin", "exp2log", "exp3",
               "b1a", "b1b", "b1c", "b1d", "b2a", "b2b", "b3")


@dataclass(frozen=True)
class Scale:
    n: int
    trees: int
    runs: int
    replicates: int
    exp3_q: int
    b_ps: tuple
    b_n: int


SCALES = {
    "desk": Scale(n=400, trees=100, runs=20, replicates=10, exp3_q=5, b_ps=(1, 2, 4, 8),
                  b_n=1000),
    "paper": Scale(n=1000, trees=100, runs=100, replicates=100, exp3_q=10,
                   b_ps=tuple(range(1, 17)), b_n=1000),
}
# runs for experiment 3 at desk scale
EXP3_DESK_RUNS = 10
B_DESK_REPLICATES = 20
B_PAPER_REPLICATES = 500


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# Experiment 1: time scans

def run_time_scan(name: str, n: int, replicates: int, trees: int, seed: int,
                  num_points: int = 50, threads: int = 1) -> simulation.TimeScan:
    make = {"exp1s1": simulation.experiment1_sim1, "exp1s2": simulation.experiment1_sim2}[name]
    layout = groups.CoefficientLayout(1, 8)

    def replicate(r):
        return make(derive_seed(seed, r), n=n).design()

    return simulation.time_importance_scan(replicate, layout, ForestConfig(num_trees=trees),
                                           num_points=num_points, seed=seed,
                                           n_replicates=replicates, threads=threads)


def timescan_to_csv(scan: simulation.TimeScan) -> str:
    rows = [[fmt(t), fmt(m), fmt(a), fmt(b)]
            for t, m, a, b in zip(scan.times, scan.mean, scan.q25, scan.q75)]
    return _csv(["t", "mean", "q25", "q75"], rows)


def timescan_replicates_to_csv(scan: simulation.TimeScan) -> str:
    rows = []
    for r, row in enumerate(scan.per_replicate):
        rows.extend([r, fmt(t), fmt(v)] for t, v in zip(scan.times, row))
    return _csv(["replicate", "t", "importance"], rows)


# Experiment 2: level selection

def run_level_selection(link: str, n: int, runs: int, trees: int, seed: int,
                        threads: int = 1) -> selection.AggregateReport:
    layout = groups.CoefficientLayout(1, 8)
    family = groups.level_family(layout)

    def dataset(run):
        return simulation.experiment2(link, derive_seed(seed, run), n=n).design()

    config = selection.SelectionConfig(forest=ForestConfig(num_trees=trees), runs=runs,
                                       seed=seed, threads=threads)
    return selection.repeat_selection(dataset, family, config)


# Experiment 3: variable selection under correlation

@dataclass
class VariableSelectionResult:
    rfe: selection.AggregateReport
    nrfe: selection.AggregateReport
    n_columns: int

    def groups_to_reach(self, tolerance=0.10):
        return ([t.groups_to_reach(tolerance) for t in self.rfe.traces],
                [t.groups_to_reach(tolerance) for t in self.nrfe.traces])


def mean_curve_groups_to_reach(report: selection.AggregateReport, tolerance=0.10) -> int:
    curve = np.asarray(report.mean_curve)
    ok = np.flatnonzero(curve <= curve.min() * (1.0 + tolerance))
    return len(report.labels) - int(ok.max())


def run_variable_selection(n: int, q: int, runs: int, trees: int, seed: int,
                           threads: int = 1) -> VariableSelectionResult:
    cache = {}

    def dataset(run):
        if run not in cache:
            panel = simulation.experiment3(derive_seed(seed, run), n=n, q=q)
            data, fam, _ = selection.drop_constant_columns(
                panel.design(), groups.variable_family(panel.layout))
            cache.clear()
            cache[run] = (data, fam)
        return cache[run]

    data0, family = dataset(0)
    config = selection.SelectionConfig(forest=ForestConfig(num_trees=trees), runs=runs,
                                       seed=seed, threads=threads)
    rfe = selection.repeat_selection(lambda r: dataset(r)[0], family, config, "rfe")
    nrfe = selection.repeat_selection(lambda r: dataset(r)[0], family, config, "nrfe")
    return VariableSelectionResult(rfe, nrfe, data0.n_features)


# Appendix B: grouped vs individual importances

def run_grouped_vs_individual(case: str, ps, replicates: int, n: int, trees: int, seed: int,
                              mtry_all: bool = True, threads: int = 1) -> list:
    """Rows ``(p, replicate, grouped, rescaled, sum_individual, population)``.

    ``mtry_all`` grows bagged trees (every feature is a split candidate).
    """
    rows = []
    for p in ps:
        for r in range(replicates):
            design = simulation.appendix_b(case, p, derive_seed(seed, p, r), n=n)
            data = design.data
            conf = ForestConfig(num_trees=trees, mtry=data.n_features if mtry_all else None,
                                seed=derive_seed(seed, FOREST, p, r))
            forest = fit_forest(data, conf, threads=threads)
            pseed = derive_seed(seed, PERMUTATION, p, r)
            g = grouped_importance(forest, data, design.w_columns, seed=pseed, key=0, label="W")
            ind = sum(individual_importance(forest, data, c, seed=pseed, key=1 + c).raw
                      for c in design.w_columns)
            rows.append((p, r, g.raw, g.rescaled, ind, design.population_importance))
    return rows


def grouped_rows_to_csv(rows) -> str:
    out = [[p, r, fmt(g), fmt(s), fmt(i), "" if pop is None else fmt(pop)]
           for p, r, g, s, i, pop in rows]
    return _csv(["p", "replicate", "grouped", "rescaled", "sum_individual", "population"], out)


# bundle writer

def _selection_files(report: selection.AggregateReport, suffix=""):
    return {
        f"trace{suffix}.csv": selection.traces_to_csv(report.traces),
        f"importances{suffix}.csv": selection.importances_to_csv(report.traces),
        f"aggregate{suffix}.csv": selection.aggregate_to_csv(report),
        f"curve{suffix}.csv": selection.curve_to_csv(report),
    }


def run_experiment(name: str, out_dir, scale: str = "desk", seed: int = 0, threads: int = 1,
                   overrides: dict = None) -> dict:
    """Run one named experiment and write its bundle; return ``{file: sha256}``."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    sc = SCALES[scale]
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    n = ov.get("n", sc.n)
    trees = ov.get("trees", sc.trees)
    out_dir = Path(out_dir)
    started = time.time()
    files = {}
    params = {"n": n, "trees": trees}

    if name in ("exp1s1", "exp1s2"):
        reps = ov.get("runs", sc.replicates)
        points = ov.get("points", 50)
        scan = run_time_scan(name, n, reps, trees, seed, points, threads)
        files["timescan.csv"] = timescan_to_csv(scan)
        files["timescan_replicates.csv"] = timescan_replicates_to_csv(scan)
        params.update(replicates=reps, points=points)
    elif name in ("exp2lin", "exp2log"):
        runs = ov.get("runs", sc.runs)
        report = run_level_selection("linear" if name == "exp2lin" else "logistic",
                                     n, runs, trees, seed, threads)
        files.update(_selection_files(report))
        files["chosen.json"] = report.to_json()
        params.update(runs=runs)
    elif name == "exp3":
        runs = ov.get("runs", EXP3_DESK_RUNS if scale == "desk" else sc.runs)
        q = ov.get("q", sc.exp3_q)
        res = run_variable_selection(n, q, runs, trees, seed, threads)
        files.update(_selection_files(res.rfe, "_rfe"))
        files.update(_selection_files(res.nrfe, "_nrfe"))
        rfe_k, nrfe_k = res.groups_to_reach()
        files["groups_to_reach.csv"] = _csv(["run", "rfe", "nrfe"],
                                            [[r, a, b] for r, (a, b) in
                                             enumerate(zip(rfe_k, nrfe_k))])
        files["chosen.json"] = json.dumps({
            "rfe": json.loads(res.rfe.to_json()), "nrfe": json.loads(res.nrfe.to_json()),
            "rfe_mean_curve_groups_to_reach": mean_curve_groups_to_reach(res.rfe),
            "nrfe_mean_curve_groups_to_reach": mean_curve_groups_to_reach(res.nrfe),
        }, indent=1)
        params.update(runs=runs, q=q, columns_after_constant_drop=res.n_columns)
    else:
        case = name[1:]
        reps = ov.get("runs", B_DESK_REPLICATES if scale == "desk" else B_PAPER_REPLICATES)
        ps = tuple(ov.get("ps", sc.b_ps))
        n = ov.get("n", sc.b_n)
        rows = run_grouped_vs_individual(case, ps, reps, n, trees, seed, threads=threads)
        files["importances.csv"] = grouped_rows_to_csv(rows)
        params.update(n=n, replicates=reps, ps=list(ps))

    digests = {}
    for fname, text in sorted(files.items()):
        path = atomic_write(out_dir / fname, text)
        digests[fname] = sha256(path)
    manifest = {
        "experiment": name, "scale": scale, "seed": seed, "threads": threads,
        "parameters": params, "generator": simulation.GENERATOR,
        "versions": {"wavegroup": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "elapsed_seconds": round(time.time() - started, 3),
        "outputs": digests,
    }
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=1))
    return digests
