import pytest

from wavegroup import groups, wavelets
from wavegroup.groups import CoefficientLayout, Group, GroupFamily


@pytest.fixture
def layout():
    return CoefficientLayout(3, 5)


def test_layout_bijection(layout):
    seen = set()
    for c in range(layout.n_columns):
        key = layout.key(c)
        u, j, k = key
        assert layout.column(u, j, k) == c
        seen.add(key)
    assert len(seen) == layout.n_columns == 3 * 32
    assert layout.column(1, -1) == 32
    assert layout.column(0, 2, 3) == 7


def test_column_names(layout):
    names = layout.column_names()
    assert names[0] == "X1:zeta" and names[1] == "X1:d0_0" and names[33] == "X2:d0_0"
    assert groups.parse_column_name("X1:d3_5") == ("X1", 3, 5)
    assert groups.parse_column_name("a:b:zeta") == ("a:b", -1, 0)
    with pytest.raises(ValueError):
        groups.parse_column_name("X1")


def test_layout_errors(layout):
    with pytest.raises(ValueError):
        layout.column(3, 0, 0)
    with pytest.raises(ValueError):
        layout.column(0, 5, 0)
    with pytest.raises(ValueError):
        layout.column(0, 2, 4)
    with pytest.raises(ValueError):
        layout.index_of("nope")
    with pytest.raises(ValueError):
        CoefficientLayout(2, 3, ("a", "a"))


def test_level_group_sizes(layout):
    assert groups.by_level_and_variable(layout, 0, 1).size == 1
    assert groups.by_level_and_variable(layout, 3, "X2").size == 8
    assert groups.by_level(layout, 3).size == 24
    union = set(groups.scaling_group(layout, 0).columns)
    for j in range(layout.J):
        union |= set(groups.by_level_and_variable(layout, j, 0).columns)
    assert union == set(groups.by_variable(layout, 0).columns)


def test_families_partition(layout):
    for fam in (groups.variable_family(layout), groups.level_family(layout),
                groups.level_family(layout, 1), groups.level_variable_family(layout)):
        assert fam.is_disjoint()
    assert len(groups.level_family(layout)) == layout.J + 1
    assert groups.level_family(layout).columns() == list(range(layout.n_columns))


def test_family_from_columns_matches_layout(layout):
    names = layout.column_names()
    for scheme, ref in (("by_variable", groups.variable_family(layout)),
                        ("by_level", groups.level_family(layout)),
                        ("by_level_and_variable", groups.level_variable_family(layout))):
        fam = groups.family_from_columns(names, scheme)
        assert [g.columns for g in fam] == [g.columns for g in ref]
        assert fam.labels == ref.labels
    assert len(groups.family_from_columns(names, "by_column")) == layout.n_columns
    one = groups.family_from_columns(names, "by_level", variable="X2")
    assert one.columns() == list(range(32, 64))
    with pytest.raises(ValueError):
        groups.family_from_columns(names, "by_magic")


def test_time_groups(layout):
    N = layout.N
    g = groups.at_time(layout, 10 / N, "db4")
    support = wavelets.wavelet_support(10 / N, "db4", layout.J)
    assert g.size == layout.p * (1 + len(support))
    assert set(groups.scaling_group(layout).columns) <= set(g.columns)
    single = groups.on_interval(layout, 10 / N, 10 / N, "db4")
    assert single.columns == g.columns
    small = set(groups.on_interval(layout, 10 / N, 12 / N).columns)
    large = set(groups.on_interval(layout, 8 / N, 14 / N).columns)
    assert small <= large
    full = groups.on_interval(layout, 1 / N, 1.0)
    assert full.columns == tuple(range(layout.n_columns))
    fam = groups.time_family(layout, [0, 5, 9])
    assert not fam.is_disjoint()
    with pytest.raises(ValueError):
        groups.on_interval(layout, 0.30, 0.301)


def test_group_validation():
    with pytest.raises(ValueError):
        Group("e", ())
    with pytest.raises(ValueError):
        Group("d", (1, 1))
    assert Group("s", (3, 1, 2)).columns == (1, 2, 3)
    with pytest.raises(ValueError):
        GroupFamily([Group("a", (0,)), Group("a", (1,))])
    with pytest.raises(ValueError):
        GroupFamily([Group("a", (0, 1)), Group("b", (1,))], partition=True)
    with pytest.raises(ValueError):
        GroupFamily([Group("a", (0,))], partition=True, universe=frozenset({0, 1}))


def test_restrict_and_json(layout):
    fam = groups.level_family(CoefficientLayout(1, 3))
    r = groups.restrict(fam, [0, 1, 4, 5])
    assert r.labels == ["G_zeta", "G(0)", "G(2)"]
    assert [g.columns for g in r] == [(0,), (1,), (2, 3)]
    back = GroupFamily.from_json(r.to_json())
    assert back.labels == r.labels and back.partition
