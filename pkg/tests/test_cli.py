import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from charmat.cli import dumps, fmt, main
from charmat.problemfile import fixture_names, load_fixture

from conftest import exact_values, two_point_doc


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fmt():
    assert fmt(0.1) == "1.0000000000000001e-01"
    assert float(fmt(math.pi)) == math.pi
    assert fmt(math.inf) == "Infinity" and fmt(math.nan) == "NaN"
    text = dumps({"a": [1, 2.5], "b": np.array([1 + 2j]), "c": True})
    doc = json.loads(text)
    assert doc["a"] == [1, 2.5] and doc["b"] == {"re": [1.0], "im": [2.0]} and doc["c"] is True


def test_solve_cauchy(capsys):
    code, out, _ = run(capsys, "solve", "@cauchy_scalar", "--format", "csv", "--layers", "1")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "y1", "y1_d1"]
    t = np.array([float(r[0]) for r in rows[1:]])
    y = np.array([float(r[1]) for r in rows[1:]])
    assert len(t) == 1025 and np.max(np.abs(y - t)) < 1e-12
    assert all(float(r[2]) == pytest.approx(1.0) for r in rows[1:])


def test_solve_report(capsys):
    code, out, _ = run(capsys, "solve", "@exp_endpoint")
    rep = json.loads(out)
    assert code == 0 and rep["unique"] and rep["solvability"]["invertible"]
    assert rep["xi"][0] == pytest.approx(math.e, rel=1e-8)


def test_solve_periodic(capsys):
    code, out, _ = run(capsys, "solve", "@periodic_defect")
    rep = json.loads(out)
    assert code == 2 and rep["kernel_dimension"] == 1 and not rep["unique"]


def test_malformed_expression(capsys, tmp_path):
    doc = two_point_doc([["1"]], ["sin(t"], [[1]], [[0]], [0])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "solve", str(path))
    assert code == 1 and "f[0][0]" in err and "offset" in err


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "solve", str(tmp_path / "missing.json"))[0] == 1
    assert run(capsys, "solve", "@no_such_fixture")[0] == 1
    assert run(capsys, "solve", "@cauchy_scalar", "--layers", "5")[0] == 1
    assert run(capsys, "sweep", "@cauchy_scalar")[0] == 1
    assert run(capsys, "sweep", "@family_scalar", "--eps-grid", "a,b")[0] == 1
    assert run(capsys, "solve", "@cauchy_scalar", "--nodes", "1")[0] == 1


def test_analyze_examples(capsys):
    code, out, _ = run(capsys, "analyze", "@exp_endpoint")
    assert code == 0 and json.loads(out)["invertible"] is True
    code, out, _ = run(capsys, "analyze", "@index_r5_m3")
    assert code == 2 and json.loads(out)["index"] == -2
    code, out, _ = run(capsys, "analyze", "@periodic_defect")
    rep = json.loads(out)
    assert code == 2 and rep["dim_ker"] == rep["dim_coker"] == 1


def test_sweep_convergent(capsys):
    code, out, _ = run(capsys, "sweep", "@family_scalar", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["eps", "error", "discrepancy", "ratio", "solvable"]
    err = [float(r["error"]) for r in rows]
    assert err[-1] < 1e-5 and all(a > b for a, b in zip(err, err[1:]))


def test_sweep_summary(capsys):
    code, out, _ = run(capsys, "sweep", "@family_rotation_multipoint")
    rep = json.loads(out)
    assert code == 0 and "p < inf" in rep["hypotheses_checked"]
    code, out, _ = run(capsys, "sweep", "@family_violates_gamma")
    rep = json.loads(out)
    verdicts = {c["condition"]: c["verdict"] for c in rep["conditions"]}
    assert code == 2 and verdicts["(gamma)"] == "fail" and "p = inf" in rep["hypotheses_checked"]
    code, out, _ = run(capsys, "sweep", "@family_constant")
    assert json.loads(out)["gamma_band"]["conclusive"] is False


def test_sweep_eps_grid_flag(capsys):
    code, out, _ = run(capsys, "sweep", "@family_scalar", "--eps-grid", "0.1,0.01,0.001", "--format", "csv")
    assert [float(r["eps"]) for r in csv.DictReader(io.StringIO(out))] == [0.1, 0.01, 0.001]
    code, out, _ = run(capsys, "sweep", "@family_scalar", "--eps-grid", "geom:1e-2:1e-4:3", "--format", "csv")
    assert len(list(csv.DictReader(io.StringIO(out)))) == 3


def test_oracle_compare(capsys):
    code, out, _ = run(capsys, "oracle-compare", "@rotation_endpoint")
    rep = json.loads(out)
    assert code == 0 and rep["max_node_difference"] < 1e-5
    code, out, _ = run(capsys, "oracle-compare", "@rotation_endpoint", "--nodes", "17")
    assert code == 3 and json.loads(out)["max_node_difference"] > 1e-5
    code, out, _ = run(capsys, "oracle-compare", "@periodic_defect")
    assert code == 2 and "skipped" in json.loads(out)


def test_output_directory(capsys, tmp_path):
    run(capsys, "solve", "@rotation_endpoint", "--output", str(tmp_path / "s"), "--layers", "2")
    assert {p.name for p in (tmp_path / "s").iterdir()} == {"report.json", "solution.csv"}
    header = (tmp_path / "s" / "solution.csv").read_text().splitlines()[0]
    assert header == "t,y1,y2,y1_d1,y2_d1,y1_d2,y2_d2"
    run(capsys, "sweep", "@family_scalar", "--output", str(tmp_path / "w"))
    assert {p.name for p in (tmp_path / "w").iterdir()} == {"sweep.csv", "verdicts.json"}


def test_deterministic_output(capsys, tmp_path):
    outs = []
    for k in range(2):
        run(capsys, "sweep", "@family_rotation_multipoint", "--output", str(tmp_path / str(k)))
        outs.append({p.name: p.read_bytes() for p in (tmp_path / str(k)).iterdir()})
    assert outs[0] == outs[1]
    a = run(capsys, "solve", "@rotation_two_point", "--format", "csv")[1]
    b = run(capsys, "solve", "@rotation_two_point", "--format", "csv")[1]
    assert a == b


def test_every_fixture_runs(capsys):
    for name in fixture_names():
        doc = load_fixture(name)
        cmd = "sweep" if "family" in doc else "solve"
        code, out, err = run(capsys, cmd, "@" + name, "--nodes", "129")
        assert code in (0, 2), (name, err)
        json.loads(out)


def test_exact_fixtures_via_cli(capsys):
    for name in fixture_names():
        doc = load_fixture(name)
        if "exact" not in doc:
            continue
        code, out, _ = run(capsys, "solve", "@" + name, "--format", "csv")
        rows = np.array([[float(x) for x in r] for r in list(csv.reader(io.StringIO(out)))[1:]])
        ref = exact_values(doc["exact"], rows[:, 0]).real
        assert code == 0 and np.max(np.abs(rows[:, 1:] - ref)) < 1e-6, name


def test_fixtures_listing(capsys):
    code, out, _ = run(capsys, "fixtures")
    assert code == 0 and "family_scalar\tfamily" in out


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "charmat.cli", "analyze", "@exp_endpoint"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["rank"] == 1
