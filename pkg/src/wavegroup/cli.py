"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 invalid input data, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, experiments, groups, shrinkage, simulation, wavelets
from .forest import Dataset, ForestConfig
from .io import (DataError, atomic_write, coefficients_to_csv, outcome_to_csv,
                 panel_to_csv, read_coefficients_csv, read_dataset_csv, read_outcome_csv,
                 read_panel_csv, sha256)
from .selection import SelectionConfig, drop_constant_columns, repeat_selection
from .selection import aggregate_to_csv, curve_to_csv, importances_to_csv, traces_to_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

SCHEMES = ("by_variable", "by_level", "by_level_and_variable", "by_column")
TIME_SCHEMES = ("at_time", "on_interval", "by_time")
SIMULATIONS = ("exp1s1", "exp1s2", "exp2lin", "exp2log", "exp3")


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_common(p, forest=False):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--filter", choices=("db2", "db4"), default="db4")
    if forest:
        p.add_argument("--trees", type=_positive_int, default=100)
        p.add_argument("--mtry", type=_positive_int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavegroup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dwt", help="wavelet coefficients of a curve panel")
    p.add_argument("panel")
    _add_common(p)

    p = sub.add_parser("idwt", help="curves from a coefficient file")
    p.add_argument("coefficients")
    _add_common(p)

    p = sub.add_parser("shrink", help="simultaneous hard thresholding of coefficient vectors")
    p.add_argument("coefficients")
    p.add_argument("--q", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=None, help="known noise level (else MAD)")
    _add_common(p)

    p = sub.add_parser("select", help="grouped RFE / NRFE")
    p.add_argument("input", help="dataset CSV (last column Y) or coefficient CSV")
    p.add_argument("--outcome", help="outcome CSV, required with a coefficient CSV")
    p.add_argument("--scheme", default="by_variable",
                   help=f"one of {', '.join(SCHEMES)}")
    p.add_argument("--groups", help="JSON group family (overrides --scheme)")
    p.add_argument("--variable", help="restrict grouping to one functional variable")
    p.add_argument("--method", choices=("rfe", "nrfe", "both"), default="rfe")
    p.add_argument("--train-frac", type=float, default=0.9)
    p.add_argument("--runs", type=_positive_int, default=1)
    p.add_argument("--raw", action="store_true", help="eliminate on raw importance")
    _add_common(p, forest=True)

    p = sub.add_parser("timescan", help="grouped importance of G(t) along the time grid")
    p.add_argument("panel")
    p.add_argument("--outcome", required=True)
    p.add_argument("--points", type=_positive_int, default=50)
    p.add_argument("--replicates", type=_positive_int, default=1,
                   help="forests refit with independent seeds")
    _add_common(p, forest=True)

    p = sub.add_parser("simulate", help="write a simulated panel and outcome")
    p.add_argument("name", choices=SIMULATIONS)
    p.add_argument("--n", type=_positive_int, default=1000)
    _add_common(p)

    p = sub.add_parser("experiment", help="run a reproduction experiment end to end")
    p.add_argument("name", choices=experiments.EXPERIMENTS)
    p.add_argument("--scale", choices=tuple(experiments.SCALES), default="desk")
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--trees", type=_positive_int, default=None)
    p.add_argument("--runs", type=_positive_int, default=None,
                   help="selection runs or replicates")
    p.add_argument("--points", type=_positive_int, default=None)
    p.add_argument("--q", type=_positive_int, default=None,
                   help="replicated copies per variable (exp3)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    return parser


# helpers

def _finish(args, outputs: dict, inputs: dict, started: float, extra=None):
    """Write ``outputs`` and a manifest into ``args.out``."""
    out = Path(args.out)
    digests = {}
    for name, text in sorted(outputs.items()):
        digests[name] = sha256(atomic_write(out / name, text))
    config = {k: v for k, v in vars(args).items() if k not in ("out", "threads")}
    manifest = {
        "command": args.command, "config": config, "seed": getattr(args, "seed", None),
        "versions": {"wavegroup": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "elapsed_seconds": round(time.time() - started, 3),
        "inputs": {str(k): sha256(v) for k, v in inputs.items()},
        "outputs": digests,
    }
    if extra:
        manifest.update(extra)
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=1))


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {what}")


def _load_design(args) -> Dataset:
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path) as fh:
        header = fh.readline().strip()
    if header.startswith("curve_id,variable,level,position,value"):
        if not args.outcome:
            raise UsageError("--outcome is required with a coefficient CSV")
        coeffs, ids, variables = read_coefficients_csv(path)
        y = read_outcome_csv(args.outcome, ids)
        layout = groups.CoefficientLayout(len(variables), wavelets.n_levels(coeffs.shape[-1]),
                                          tuple(variables))
        return Dataset(coeffs.reshape(len(ids), -1), y, layout.column_names())
    if args.outcome:
        raise UsageError("--outcome only applies to coefficient CSV input")
    return read_dataset_csv(path)


def _family_for(args, data: Dataset):
    if args.groups:
        try:
            fam = groups.GroupFamily.from_json(Path(args.groups).read_text())
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise DataError(f"{args.groups}: invalid group file ({exc})") from None
        return data, fam
    if args.scheme in TIME_SCHEMES:
        raise UsageError(f"scheme {args.scheme!r} overlaps and cannot drive RFE; "
                         f"use the timescan command")
    if args.scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {args.scheme!r}; expected one of {', '.join(SCHEMES)}")
    try:
        fam = groups.family_from_columns(data.column_names, args.scheme, args.variable)
    except ValueError as exc:
        if args.scheme == "by_column":
            raise
        raise DataError(str(exc)) from None
    if args.scheme != "by_column":
        data, fam, _ = drop_constant_columns(data, fam)
    return data, fam


# commands

def cmd_dwt(args):
    started = time.time()
    curves, ids, variables = read_panel_csv(args.panel)
    coeffs = wavelets.dwt_vector(curves, args.filter)
    _check_finite(coeffs, "coefficients")
    _finish(args, {"coefficients.csv": coefficients_to_csv(coeffs, ids, variables)},
            {args.panel: args.panel}, started)


def cmd_idwt(args):
    started = time.time()
    coeffs, ids, variables = read_coefficients_csv(args.coefficients)
    curves = wavelets.idwt_vector(coeffs, args.filter)
    _finish(args, {"panel.csv": panel_to_csv(curves, ids, variables)},
            {args.coefficients: args.coefficients}, started)


def cmd_shrink(args):
    started = time.time()
    try:
        config = shrinkage.ShrinkageConfig(q=args.q, sigma=args.sigma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    coeffs, ids, variables = read_coefficients_csv(args.coefficients)
    reduced = np.empty_like(coeffs)
    results = {}
    for u, var in enumerate(variables):
        res = shrinkage.simultaneous_shrink(coeffs[:, u, :], config)
        if not np.isfinite(res.threshold):
            raise NumericalError("non-finite threshold")
        results[var] = res
        reduced[:, u, :] = shrinkage.apply_shrinkage(coeffs[:, u, :], res)
    _finish(args, {"reduced.csv": coefficients_to_csv(reduced, ids, variables)},
            {args.coefficients: args.coefficients}, started,
            {"shrinkage": {v: r.manifest() for v, r in results.items()}})


def cmd_select(args):
    started = time.time()
    data = _load_design(args)
    data, family = _family_for(args, data)
    if not family.is_disjoint():
        raise UsageError("the group family must be a partition for RFE")
    try:
        config = SelectionConfig(train_fraction=args.train_frac,
                                 forest=ForestConfig(num_trees=args.trees, mtry=args.mtry),
                                 use_rescaled=not args.raw, runs=args.runs, seed=args.seed,
                                 threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    methods = ("rfe", "nrfe") if args.method == "both" else (args.method,)
    outputs, chosen = {}, {}
    for method in methods:
        try:
            report = repeat_selection(data, family, config, method)
        except RuntimeError as exc:
            cause = exc.__cause__
            if isinstance(cause, ValueError):
                raise DataError(str(exc)) from None
            raise NumericalError(str(exc)) from None
        _check_finite(report.mean_curve, "validation errors")
        suffix = "" if len(methods) == 1 else f"_{method}"
        outputs[f"trace{suffix}.csv"] = traces_to_csv(report.traces)
        outputs[f"importances{suffix}.csv"] = importances_to_csv(report.traces)
        outputs[f"aggregate{suffix}.csv"] = aggregate_to_csv(report)
        outputs[f"curve{suffix}.csv"] = curve_to_csv(report)
        chosen[method] = json.loads(report.to_json())
        chosen[method]["chosen_groups"] = [
            [s for s in t.steps[t.chosen_step].active] for t in report.traces]
    outputs["chosen.json"] = json.dumps(chosen if len(methods) > 1 else chosen[methods[0]],
                                        indent=1)
    inputs = {args.input: args.input}
    if args.outcome:
        inputs[args.outcome] = args.outcome
    _finish(args, outputs, inputs, started, {"groups": json.loads(family.to_json())})


def cmd_timescan(args):
    started = time.time()
    curves, ids, variables = read_panel_csv(args.panel)
    y = read_outcome_csv(args.outcome, ids)
    N = curves.shape[-1]
    layout = groups.CoefficientLayout(len(variables), wavelets.n_levels(N), tuple(variables))
    coeffs = wavelets.dwt_vector(curves, args.filter)
    data = Dataset(coeffs.reshape(len(ids), -1), y, layout.column_names())
    scan = simulation.time_importance_scan(
        lambda r: data, layout, ForestConfig(num_trees=args.trees, mtry=args.mtry),
        num_points=args.points, seed=args.seed, n_replicates=args.replicates,
        filt=args.filter, threads=args.threads)
    _check_finite(scan.per_replicate, "importances")
    _finish(args, {"timescan.csv": experiments.timescan_to_csv(scan)},
            {args.panel: args.panel, args.outcome: args.outcome}, started)


def cmd_simulate(args):
    started = time.time()
    if args.name in ("exp1s1", "exp1s2"):
        make = {"exp1s1": simulation.experiment1_sim1, "exp1s2": simulation.experiment1_sim2}
        panel = make[args.name](args.seed, n=args.n)
    elif args.name in ("exp2lin", "exp2log"):
        panel = simulation.experiment2("linear" if args.name == "exp2lin" else "logistic",
                                       args.seed, n=args.n)
    else:
        panel = simulation.experiment3(args.seed, n=args.n)
    ids = [f"c{i}" for i in range(panel.n)]
    variables = list(panel.layout.variable_names)
    _finish(args, {"panel.csv": panel_to_csv(panel.curves, ids, variables),
                   "outcome.csv": outcome_to_csv(ids, panel.response)},
            {}, started, {"generator": simulation.GENERATOR, "relevant": panel.relevant})


def cmd_experiment(args):
    overrides = {"n": args.n, "trees": args.trees, "runs": args.runs, "points": args.points,
                 "q": args.q}
    experiments.run_experiment(args.name, args.out, scale=args.scale, seed=args.seed,
                               threads=args.threads, overrides=overrides)


COMMANDS = {"dwt": cmd_dwt, "idwt": cmd_idwt, "shrink": cmd_shrink, "select": cmd_select,
            "timescan": cmd_timescan, "simulate": cmd_simulate, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"wavegroup: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"wavegroup: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"wavegroup: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
