import numpy as np
import pytest

from wavegroup.forest import Dataset, ForestConfig
from wavegroup.groups import Group, GroupFamily
from wavegroup import selection
from wavegroup.selection import (SelectionConfig, SelectionStep, SelectionTrace, choose_model,
                                 nrfe_select, repeat_selection, rfe_select)


@pytest.fixture(scope="module")
def grouped_data():
    rng = np.random.default_rng(3)
    n = 300
    X = rng.normal(size=(n, 6))
    y = 2 * X[:, 0] + 2 * X[:, 1] + X[:, 2] + 0.2 * rng.normal(size=n)
    data = Dataset(X, y, [f"x{i}" for i in range(6)])
    fam = GroupFamily([Group("A", (0, 1)), Group("B", (2,)), Group("N1", (3, 4)),
                       Group("N2", (5,))], partition=True)
    return data, fam


@pytest.fixture
def config():
    return SelectionConfig(forest=ForestConfig(num_trees=30), seed=1)


def test_rfe_trace_shape(grouped_data, config):
    data, fam = grouped_data
    trace = rfe_select(data, fam, config)
    assert [len(s.active) for s in trace.steps] == [4, 3, 2, 1]
    assert sorted(s.eliminated for s in trace.steps) == sorted(fam.labels)
    assert trace.steps[-1].active == ["A"]
    assert set(choose_model(trace)) >= {"A", "B"}
    assert all(len(s.importances) == len(s.active) for s in trace.steps)


def test_nrfe_ranks_once(grouped_data, config):
    data, fam = grouped_data
    trace = nrfe_select(data, fam, config)
    assert len(trace.steps) == 4
    assert trace.steps[0].importances and not trace.steps[1].importances
    first = rfe_select(data, fam, config)
    # both start from the same split and forest
    assert trace.steps[0].validation_mse == first.steps[0].validation_mse


def test_deterministic(grouped_data, config):
    data, fam = grouped_data
    a = selection.traces_to_csv([rfe_select(data, fam, config)])
    b = selection.traces_to_csv([rfe_select(data, fam, config)])
    assert a == b


def test_argmin_prefers_fewer_groups():
    steps = [SelectionStep(["a", "b", "c"], 1.0, [], "c"), SelectionStep(["a", "b"], 0.5, [], "b"),
             SelectionStep(["a"], 0.5, [], "a")]
    trace = SelectionTrace(steps)
    assert choose_model(trace) == ["a"]
    assert trace.groups_to_reach(0.10) == 1
    trace2 = SelectionTrace([SelectionStep(["a", "b"], 1.0, [], "b"),
                             SelectionStep(["a"], 1.5, [], "a")])
    assert trace2.groups_to_reach(0.10) == 2
    with pytest.raises(ValueError):
        choose_model(SelectionTrace([]))


def test_overlapping_family_rejected(grouped_data, config):
    data, _ = grouped_data
    fam = GroupFamily([Group("a", (0, 1)), Group("b", (1, 2))])
    with pytest.raises(ValueError, match="partition"):
        rfe_select(data, fam, config)


def test_split_rows():
    tr, va = selection.split_rows(100, 0.9, seed=0, run=0)
    assert len(tr) == 90 and len(va) == 10
    assert not set(tr) & set(va)
    tr2, _ = selection.split_rows(100, 0.9, seed=0, run=1)
    assert not np.array_equal(tr, tr2)
    with pytest.raises(ValueError):
        SelectionConfig(train_fraction=1.0)


def test_repeat_selection_aggregates(grouped_data):
    data, fam = grouped_data
    cfg = SelectionConfig(forest=ForestConfig(num_trees=20), runs=3, seed=2)
    rep = repeat_selection(data, fam, cfg, "rfe")
    assert rep.runs == 3 and len(rep.traces) == 3
    assert rep.selection_frequency["A"] == 3
    assert len(rep.mean_curve) == 4
    assert 1 <= rep.chosen_size <= 4
    assert len(rep.step1_importances["N2"]) == 3
    text = selection.aggregate_to_csv(rep)
    assert text.splitlines()[0] == ("group,size,selected_runs,selection_frequency,"
                                    "mean_step1_rescaled")
    assert selection.curve_to_csv(rep).splitlines()[1].startswith("4,")
    with pytest.raises(ValueError):
        repeat_selection(data, fam, cfg, "lasso")


def test_repeat_selection_reports_failing_run(grouped_data):
    data, fam = grouped_data
    cfg = SelectionConfig(forest=ForestConfig(num_trees=5), runs=2)

    def make(run):
        if run == 1:
            raise ValueError("broken replicate")
        return data

    with pytest.raises(RuntimeError, match="selection run 1 failed"):
        repeat_selection(make, fam, cfg)


def test_drop_constant_columns():
    X = np.column_stack([np.arange(5.0), np.full(5, 2.0), 1e-17 * np.arange(5.0)])
    data = Dataset(X, np.arange(5.0), ["a", "b", "c"])
    fam = GroupFamily([Group("g1", (0, 1)), Group("g2", (2,))], partition=True)
    reduced, fam2, keep = selection.drop_constant_columns(data, fam)
    assert keep.tolist() == [0]
    assert reduced.column_names == ["a"]
    assert fam2.labels == ["g1"]
