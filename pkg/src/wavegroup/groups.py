"""Groups of wavelet-coefficient columns.

The design matrix holds, for each functional variable ``u``, its ``N`` flat
coefficients ``[zeta, d_0, ..., d_{J-1}]`` (see :mod:`wavegroup.wavelets`),
variable after variable.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import wavelets

ZETA_LEVEL = -1


@dataclass(frozen=True)
class CoefficientLayout:
    """Bijection between ``(variable u, level j, position k)`` and columns.

    The scaling coefficient of variable ``u`` is keyed ``(u, -1, 0)``.
    """

    p: int
    J: int
    variable_names: tuple = None

    def __post_init__(self):
        if self.p < 1 or self.J < 1:
            raise ValueError("layout needs p >= 1 and J >= 1")
        names = self.variable_names
        if names is None:
            names = tuple(f"X{u + 1}" for u in range(self.p))
        names = tuple(str(n) for n in names)
        if len(names) != self.p or len(set(names)) != self.p:
            raise ValueError("need p distinct variable names")
        object.__setattr__(self, "variable_names", names)

    @property
    def N(self) -> int:
        return 2**self.J

    @property
    def n_columns(self) -> int:
        return self.p * self.N

    def _check_variable(self, u):
        if not 0 <= u < self.p:
            raise ValueError(f"variable index {u} outside [0, {self.p})")

    def _check_level(self, j):
        if not 0 <= j < self.J:
            raise ValueError(f"level {j} outside [0, {self.J})")

    def column(self, u: int, j: int, k: int = 0) -> int:
        self._check_variable(u)
        if j == ZETA_LEVEL:
            if k != 0:
                raise ValueError("the scaling coefficient has position 0")
            return u * self.N
        self._check_level(j)
        if not 0 <= k < 2**j:
            raise ValueError(f"position {k} outside level {j}")
        return u * self.N + 2**j + k

    def key(self, column: int) -> tuple:
        if not 0 <= column < self.n_columns:
            raise ValueError(f"column {column} outside the layout")
        u, off = divmod(column, self.N)
        if off == 0:
            return (u, ZETA_LEVEL, 0)
        j = off.bit_length() - 1
        return (u, j, off - 2**j)

    def column_names(self) -> list:
        out = []
        for c in range(self.n_columns):
            u, j, k = self.key(c)
            name = self.variable_names[u]
            out.append(f"{name}:zeta" if j == ZETA_LEVEL else f"{name}:d{j}_{k}")
        return out

    def index_of(self, variable) -> int:
        """Variable index from an index or a name."""
        if isinstance(variable, str):
            try:
                return self.variable_names.index(variable)
            except ValueError:
                raise ValueError(f"unknown variable {variable!r}") from None
        u = int(variable)
        self._check_variable(u)
        return u


@dataclass(frozen=True)
class Group:
    label: str
    columns: tuple

    def __post_init__(self):
        cols = tuple(int(c) for c in self.columns)
        if not cols:
            raise ValueError(f"group {self.label!r} is empty")
        if len(set(cols)) != len(cols):
            raise ValueError(f"group {self.label!r} has duplicate columns")
        if min(cols) < 0:
            raise ValueError(f"group {self.label!r} has a negative column")
        object.__setattr__(self, "columns", tuple(sorted(cols)))

    @property
    def size(self) -> int:
        return len(self.columns)


@dataclass
class GroupFamily:
    groups: list
    partition: bool = False
    universe: Optional[frozenset] = None

    def __post_init__(self):
        self.groups = list(self.groups)
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be unique")
        if self.partition:
            seen = set()
            for g in self.groups:
                if seen.intersection(g.columns):
                    raise ValueError(f"group {g.label!r} overlaps another group")
                seen.update(g.columns)
            if self.universe is not None and seen != set(self.universe):
                raise ValueError("groups do not cover the declared universe")

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, i):
        return self.groups[i]

    @property
    def labels(self) -> list:
        return [g.label for g in self.groups]

    def is_disjoint(self) -> bool:
        seen = set()
        for g in self.groups:
            if seen.intersection(g.columns):
                return False
            seen.update(g.columns)
        return True

    def columns(self) -> list:
        return sorted({c for g in self.groups for c in g.columns})

    def to_json(self) -> str:
        return json.dumps({"partition": self.partition,
                           "groups": [{"label": g.label, "columns": list(g.columns)}
                                      for g in self.groups]}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GroupFamily":
        doc = json.loads(text)
        groups = [Group(g["label"], tuple(g["columns"])) for g in doc["groups"]]
        return cls(groups, bool(doc.get("partition", False)))


def by_variable(layout: CoefficientLayout, u) -> Group:
    u = layout.index_of(u)
    start = u * layout.N
    return Group(f"G({layout.variable_names[u]})", tuple(range(start, start + layout.N)))


def by_level_and_variable(layout: CoefficientLayout, j: int, u) -> Group:
    u = layout.index_of(u)
    layout._check_level(j)
    cols = [layout.column(u, j, k) for k in range(2**j)]
    return Group(f"G({j},{layout.variable_names[u]})", tuple(cols))


def by_level(layout: CoefficientLayout, j: int) -> Group:
    layout._check_level(j)
    cols = [layout.column(u, j, k) for u in range(layout.p) for k in range(2**j)]
    return Group(f"G({j})", tuple(cols))


def scaling_group(layout: CoefficientLayout, u=None) -> Group:
    """``G_zeta``: scaling coefficient(s) of one variable or of all variables."""
    if u is None:
        return Group("G_zeta", tuple(layout.column(v, ZETA_LEVEL) for v in range(layout.p)))
    u = layout.index_of(u)
    return Group(f"G_zeta({layout.variable_names[u]})", (layout.column(u, ZETA_LEVEL),))


def _time_columns(layout, indices, filt):
    filt = wavelets.get_filter(filt)
    support = set()
    for i in indices:
        support |= wavelets._support_at(i, layout.N, filt.name)
    cols = set()
    for u in range(layout.p):
        cols.add(layout.column(u, ZETA_LEVEL))
        cols.update(layout.column(u, j, k) for j, k in support)
    return tuple(sorted(cols))


def at_time(layout: CoefficientLayout, t, filt="db4") -> Group:
    """Scaling columns of every variable plus all details active at time ``t``."""
    i = wavelets.grid_index(t, layout.N)
    return Group(f"G(t={t:.6g})", _time_columns(layout, [i], filt))


def on_interval(layout: CoefficientLayout, a, b, filt="db4") -> Group:
    indices = wavelets.grid_indices_between(a, b, layout.N)
    return Group(f"G([{a:.6g},{b:.6g}])", _time_columns(layout, indices, filt))


# families used by the selection procedures

def variable_family(layout: CoefficientLayout, variables: Optional[Sequence] = None) -> GroupFamily:
    us = range(layout.p) if variables is None else [layout.index_of(v) for v in variables]
    return GroupFamily([by_variable(layout, u) for u in us], partition=True)


def level_family(layout: CoefficientLayout, u=None) -> GroupFamily:
    """``[G_zeta, G(0), ..., G(J-1)]``, pooled over variables or for variable ``u``."""
    if u is None:
        groups = [scaling_group(layout)] + [by_level(layout, j) for j in range(layout.J)]
        universe = frozenset(range(layout.n_columns))
    else:
        groups = [scaling_group(layout, u)] + [by_level_and_variable(layout, j, u)
                                               for j in range(layout.J)]
        universe = frozenset(by_variable(layout, u).columns)
    return GroupFamily(groups, partition=True, universe=universe)


def level_variable_family(layout: CoefficientLayout) -> GroupFamily:
    groups = []
    for u in range(layout.p):
        groups.append(scaling_group(layout, u))
        groups.extend(by_level_and_variable(layout, j, u) for j in range(layout.J))
    return GroupFamily(groups, partition=True, universe=frozenset(range(layout.n_columns)))


def time_family(layout: CoefficientLayout, indices: Iterable[int], filt="db4") -> GroupFamily:
    """Non-partitioning family of ``G(t)`` at the given sample indices."""
    groups = []
    for i in indices:
        t = wavelets.grid_time(i, layout.N)
        groups.append(Group(f"G(t={t:.6g})", _time_columns(layout, [i], filt)))
    return GroupFamily(groups, partition=False)


def restrict(family: GroupFamily, keep_columns: Sequence[int]) -> GroupFamily:
    """Re-index ``family`` onto the sub-matrix ``keep_columns``.

    Dropped columns vanish from every group; groups left empty are removed.
    """
    position = {int(c): i for i, c in enumerate(keep_columns)}
    groups = []
    for g in family:
        cols = tuple(position[c] for c in g.columns if c in position)
        if cols:
            groups.append(Group(g.label, cols))
    return GroupFamily(groups, partition=family.partition)


_NAME_RE = re.compile(r"^(?P<var>.+):(?:zeta|d(?P<j>\d+)_(?P<k>\d+))$")


def parse_column_name(name: str) -> tuple:
    """``"X1:d3_5" -> ("X1", 3, 5)``; ``"X1:zeta" -> ("X1", -1, 0)``."""
    m = _NAME_RE.match(name)
    if m is None:
        raise ValueError(f"column {name!r} is not a wavelet coefficient name")
    if m.group("j") is None:
        return m.group("var"), ZETA_LEVEL, 0
    return m.group("var"), int(m.group("j")), int(m.group("k"))


def family_from_columns(names: Sequence[str], scheme: str, variable=None) -> GroupFamily:
    """Partition named coefficient columns by ``scheme``.

    Schemes: ``by_variable``, ``by_level`` (scaling coefficients pooled in
    ``G_zeta``), ``by_level_and_variable`` and ``by_column``.  Works on any
    subset of a layout, e.g. after constant columns were dropped.  With
    ``variable`` set, only that variable's columns are grouped.
    """
    if scheme == "by_column":
        return GroupFamily([Group(n, (i,)) for i, n in enumerate(names)], partition=True)
    keys = [parse_column_name(n) for n in names]
    if variable is not None and variable not in {v for v, _, _ in keys}:
        raise ValueError(f"unknown variable {variable!r}")
    buckets = {}
    for i, (var, j, _) in enumerate(keys):
        if variable is not None and var != variable:
            continue
        if scheme == "by_variable":
            label = f"G({var})"
        elif scheme == "by_level":
            label = "G_zeta" if j == ZETA_LEVEL else f"G({j})"
        elif scheme == "by_level_and_variable":
            label = f"G_zeta({var})" if j == ZETA_LEVEL else f"G({j},{var})"
        else:
            raise ValueError(f"unknown grouping scheme {scheme!r}")
        buckets.setdefault(label, []).append(i)
    return GroupFamily([Group(lab, tuple(cols)) for lab, cols in buckets.items()],
                       partition=True)
