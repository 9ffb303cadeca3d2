import json

import numpy as np
import pytest

from wavegroup import cli, io
from wavegroup.forest import Dataset


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert cli.main(["simulate", "exp2lin", "--n", "80", "--seed", "3", "--out", str(out)]) == 0
    return out


def write(path, text):
    path.write_text(text)
    return str(path)


def test_panel_round_trip(tmp_path, rng):
    curves = rng.normal(size=(3, 2, 8))
    path = write(tmp_path / "p.csv", io.panel_to_csv(curves, ["a", "b", "c"], ["U", "V"]))
    back, ids, variables = io.read_panel_csv(path)
    assert np.array_equal(back, curves)
    assert ids == ["a", "b", "c"] and variables == ["U", "V"]


@pytest.mark.parametrize("body, message", [
    ("", "empty"),
    ("curve_id,variable,t_index,value\n", "no data"),
    ("curve_id,variable,t_index,value\na,X,0,1\na,X,1,2\na,X,2,3\n", "power of two"),
    ("curve_id,variable,t_index,value\na,X,0,1\na,X,1,2\nb,X,0,1\n", "ragged"),
    ("curve_id,variable,t_index,value\na,X,0,1\na,X,1,oops\n", "not a number"),
    ("id,t,value\na,0,1\n", "expected header"),
])
def test_panel_errors(tmp_path, body, message):
    path = write(tmp_path / "bad.csv", body)
    with pytest.raises(io.DataError, match=message):
        io.read_panel_csv(path)


def test_coefficients_and_outcome_round_trip(tmp_path, rng):
    coeffs = rng.normal(size=(2, 1, 16))
    path = write(tmp_path / "c.csv", io.coefficients_to_csv(coeffs, ["a", "b"], ["X1"]))
    back, ids, _ = io.read_coefficients_csv(path)
    assert np.array_equal(back, coeffs)
    ypath = write(tmp_path / "y.csv", io.outcome_to_csv(["b", "a"], [2.0, 1.0]))
    assert io.read_outcome_csv(ypath, ["a", "b"]).tolist() == [1.0, 2.0]
    with pytest.raises(io.DataError):
        io.read_outcome_csv(ypath, ["a", "z"])


def test_dataset_round_trip(tmp_path, rng):
    d = Dataset(rng.normal(size=(4, 2)), rng.normal(size=4), ["p", "q"])
    path = write(tmp_path / "d.csv", io.dataset_to_csv(d, row_ids=list("wxyz")))
    back = io.read_dataset_csv(path)
    assert np.array_equal(back.features, d.features) and back.column_names == ["p", "q"]
    with pytest.raises(io.DataError):
        io.read_dataset_csv(write(tmp_path / "e.csv", "a,b\n1,2\n3,4\n"))


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "x" / "f.txt", "hello")
    assert [p.name for p in (tmp_path / "x").iterdir()] == ["f.txt"]


def test_dwt_idwt_commands(sim_dir, tmp_path):
    panel = str(sim_dir / "panel.csv")
    assert cli.main(["dwt", panel, "--out", str(tmp_path / "d")]) == 0
    assert cli.main(["idwt", str(tmp_path / "d" / "coefficients.csv"),
                     "--out", str(tmp_path / "i")]) == 0
    a = io.read_panel_csv(panel)[0]
    b = io.read_panel_csv(tmp_path / "i" / "panel.csv")[0]
    assert np.max(np.abs(a - b)) < 1e-9
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert "coefficients.csv" in manifest["outputs"]


def test_dwt_of_constant_panel(tmp_path):
    text = "curve_id,variable,t_index,value\n" + "".join(
        f"{c},X,{t},{1.5 + c}\n" for c in range(2) for t in range(16))
    path = write(tmp_path / "const.csv", text)
    assert cli.main(["dwt", path, "--filter", "db2", "--out", str(tmp_path / "o")]) == 0
    coeffs, _, _ = io.read_coefficients_csv(tmp_path / "o" / "coefficients.csv")
    assert np.max(np.abs(coeffs[:, :, 1:])) < 1e-12
    assert coeffs[0, 0, 0] == pytest.approx(1.5 * 4)


def test_shrink_command(sim_dir, tmp_path):
    cli.main(["dwt", str(sim_dir / "panel.csv"), "--out", str(tmp_path / "d")])
    coeffs = str(tmp_path / "d" / "coefficients.csv")
    for q in ("0.01", "0.5"):
        assert cli.main(["shrink", coeffs, "--q", q, "--out", str(tmp_path / q)]) == 0
    lo = json.loads((tmp_path / "0.01" / "manifest.json").read_text())["shrinkage"]["X1"]
    hi = json.loads((tmp_path / "0.5" / "manifest.json").read_text())["shrinkage"]["X1"]
    assert {tuple(k) for k in lo["kept"]} <= {tuple(k) for k in hi["kept"]}
    assert lo["threshold"] > hi["threshold"] > 0 and lo["sigma_hat"] > 0
    assert cli.main(["shrink", coeffs, "--q", "2", "--out", str(tmp_path / "x")]) == 2


def test_select_and_errors(sim_dir, tmp_path):
    cli.main(["dwt", str(sim_dir / "panel.csv"), "--out", str(tmp_path / "d")])
    coeffs = str(tmp_path / "d" / "coefficients.csv")
    y = str(sim_dir / "outcome.csv")
    out = tmp_path / "sel"
    assert cli.main(["select", coeffs, "--outcome", y, "--scheme", "by_level",
                     "--trees", "10", "--out", str(out)]) == 0
    for name in ("trace.csv", "importances.csv", "aggregate.csv", "curve.csv", "chosen.json"):
        assert (out / name).exists()
    assert json.loads((out / "chosen.json").read_text())["runs"] == 1
    assert cli.main(["select", coeffs, "--outcome", y, "--scheme", "nope",
                     "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["select", coeffs, "--outcome", y, "--scheme", "at_time",
                     "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["select", coeffs, "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["select", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x")]) == 3
    assert cli.main(["bogus"]) == 2


def test_timescan_single_point(sim_dir, tmp_path):
    assert cli.main(["timescan", str(sim_dir / "panel.csv"), "--outcome",
                     str(sim_dir / "outcome.csv"), "--points", "1", "--trees", "5",
                     "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "timescan.csv").read_text().splitlines()
    assert lines[0] == "t,mean,q25,q75" and len(lines) == 2


def test_experiment_bundle_is_reproducible(tmp_path):
    args = ["experiment", "b1a", "--n", "100", "--trees", "5", "--runs", "1", "--seed", "4"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]
    header = (tmp_path / "a" / "importances.csv").read_text().splitlines()[0]
    assert header == "p,replicate,grouped,rescaled,sum_individual,population"
