"""CSV/JSON file formats.

* panel CSV (long form): ``curve_id,variable,t_index,value`` with
  ``t_index = 0..N-1``; outcome CSV: ``curve_id,Y``
* coefficient CSV: ``curve_id,variable,level,position,value``; the scaling
  coefficient has ``level = -1, position = 0``
* dataset CSV: a header of column names whose last entry is ``Y``
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from . import wavelets
from .forest import Dataset


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def fmt(v) -> str:
    return repr(float(v))


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rows(path, expected_header):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header != list(expected_header):
            raise DataError(f"{path}: expected header {','.join(expected_header)}, "
                            f"got {','.join(header)}")
        rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _float(text, path, line):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"{path}:{line}: not a number: {text!r}") from None
    if not np.isfinite(v):
        raise DataError(f"{path}:{line}: non-finite value")
    return v


def _int(text, path, line):
    try:
        return int(text)
    except ValueError:
        raise DataError(f"{path}:{line}: not an integer: {text!r}") from None


# panels

def read_panel_csv(path):
    """Return ``(curves, curve_ids, variables)`` with curves shaped ``n x p x N``."""
    rows = _rows(path, ("curve_id", "variable", "t_index", "value"))
    ids, variables = {}, {}
    entries = []
    for line, (cid, var, t, val) in enumerate(rows, start=2):
        ids.setdefault(cid, len(ids))
        variables.setdefault(var, len(variables))
        entries.append((ids[cid], variables[var], _int(t, path, line), _float(val, path, line)))
    t_max = max(e[2] for e in entries)
    N = t_max + 1
    try:
        wavelets.n_levels(N)
    except ValueError:
        raise DataError(f"{path}: curve length {N} is not a power of two") from None
    curves = np.full((len(ids), len(variables), N), np.nan)
    for i, u, t, v in entries:
        if t < 0:
            raise DataError(f"{path}: negative t_index")
        if not np.isnan(curves[i, u, t]):
            raise DataError(f"{path}: duplicate sample for curve index {i}, variable {u}, t {t}")
        curves[i, u, t] = v
    if np.isnan(curves).any():
        raise DataError(f"{path}: ragged panel (every curve needs t_index 0..{N - 1} "
                        f"for every variable)")
    return curves, list(ids), list(variables)


def panel_to_csv(curves, curve_ids, variables) -> str:
    curves = np.asarray(curves)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "variable", "t_index", "value"])
    for i, cid in enumerate(curve_ids):
        for u, var in enumerate(variables):
            for t, v in enumerate(curves[i, u]):
                w.writerow([cid, var, t, fmt(v)])
    return buf.getvalue()


def read_outcome_csv(path, curve_ids=None) -> np.ndarray:
    """Outcome vector, reordered to ``curve_ids`` when given."""
    rows = _rows(path, ("curve_id", "Y"))
    values = {}
    for line, (cid, y) in enumerate(rows, start=2):
        if cid in values:
            raise DataError(f"{path}:{line}: duplicate curve_id {cid!r}")
        values[cid] = _float(y, path, line)
    if curve_ids is None:
        return np.asarray(list(values.values()))
    missing = [c for c in curve_ids if c not in values]
    if missing:
        raise DataError(f"{path}: no outcome for curve(s) {missing[:5]}")
    return np.asarray([values[c] for c in curve_ids])


def outcome_to_csv(curve_ids, y) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "Y"])
    for cid, v in zip(curve_ids, y):
        w.writerow([cid, fmt(v)])
    return buf.getvalue()


# wavelet coefficients

def coefficients_to_csv(coeffs, curve_ids, variables) -> str:
    """``coeffs`` is ``n x p x N`` in the flat layout of :mod:`wavegroup.wavelets`."""
    coeffs = np.asarray(coeffs)
    N = coeffs.shape[-1]
    keys = [(-1, 0)] + [(j, k) for j in range(wavelets.n_levels(N)) for k in range(2**j)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "variable", "level", "position", "value"])
    for i, cid in enumerate(curve_ids):
        for u, var in enumerate(variables):
            for c, (j, k) in enumerate(keys):
                w.writerow([cid, var, j, k, fmt(coeffs[i, u, c])])
    return buf.getvalue()


def read_coefficients_csv(path):
    rows = _rows(path, ("curve_id", "variable", "level", "position", "value"))
    ids, variables = {}, {}
    entries = []
    for line, (cid, var, j, k, val) in enumerate(rows, start=2):
        ids.setdefault(cid, len(ids))
        variables.setdefault(var, len(variables))
        j, k = _int(j, path, line), _int(k, path, line)
        if j < -1 or k < 0 or (j == -1 and k != 0) or (j >= 0 and k >= 2**j):
            raise DataError(f"{path}:{line}: invalid (level, position) = ({j}, {k})")
        entries.append((ids[cid], variables[var], 0 if j == -1 else 2**j + k,
                        _float(val, path, line)))
    N = max(e[2] for e in entries) + 1
    try:
        wavelets.n_levels(N)
    except ValueError:
        raise DataError(f"{path}: incomplete coefficient layout") from None
    coeffs = np.full((len(ids), len(variables), N), np.nan)
    for i, u, c, v in entries:
        coeffs[i, u, c] = v
    if np.isnan(coeffs).any():
        raise DataError(f"{path}: missing coefficients (ragged layout)")
    return coeffs, list(ids), list(variables)


# plain datasets

def dataset_to_csv(data: Dataset, row_ids=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    lead = [] if row_ids is None else ["curve_id"]
    w.writerow(lead + list(data.column_names) + ["Y"])
    for i in range(data.n_rows):
        w.writerow(([] if row_ids is None else [row_ids[i]])
                   + [fmt(v) for v in data.features[i]] + [fmt(data.response[i])])
    return buf.getvalue()


def read_dataset_csv(path) -> Dataset:
    """Read a dataset CSV; a leading ``curve_id`` column is ignored."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file")
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if header[-1] != "Y":
        raise DataError(f"{path}: the last column must be named Y")
    skip = 1 if header[0] == "curve_id" else 0
    names = header[skip:-1]
    if not names:
        raise DataError(f"{path}: no feature columns")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names")
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows")
    values = np.empty((len(rows), len(names) + 1))
    for line, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(r)}")
        values[line - 2] = [_float(v, path, line) for v in r[skip:]]
    return Dataset(values[:, :-1], values[:, -1], names)
