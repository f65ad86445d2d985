import csv
import io
import json

import pytest

from magspec import cli


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv)
    assert code == 0, err
    return json.loads(out)


def test_kstar():
    doc = run_json("kstar", "--nu", "2")
    assert 0.64 <= doc["kstar"]["value"] <= 0.66
    assert doc["kstar"]["abs_tol"] <= 1e-9
    assert run_json("kstar", "--nu", "3")["kstar"]["value"] == 0.0


def test_unknown_flag_is_usage_error():
    code, out, err = run("kstar", "--nu", "2", "--frobnicate", "1")
    assert code == 2
    assert "--frobnicate" in json.loads(err)["error"]["message"]


def test_bad_value_is_usage_error():
    code, _, err = run("trajectory", "--k", "fast")
    assert code == 2
    assert "--k" in json.loads(err)["error"]["message"]


def test_numerical_failure_exit_code():
    code, _, err = run("gfunc", "--t-grid", "0:1:0.5", "--eta-cutoff", "2")
    assert code == 3
    assert json.loads(err)["error"]["type"] == "numerical"


def test_trajectory_at_kstar_is_periodic():
    doc = run_json("trajectory", "--model", "nu=2", "--k", "kstar", "--mu", "100", "--periods", "4", "--samples", "50")
    assert abs(doc["dx2_per_period"]["value"]) < 1e-3
    assert doc["periodic"] is True
    assert len(doc["table"]) == 50
    assert set(doc["table"][0]) == {"t", "x1", "x2", "xi1", "xi2", "H"}


def test_trajectory_linear_potential_breaks_periodicity():
    doc = run_json("trajectory", "--k", "kstar", "--mu", "100", "--alpha", "0.1", "--periods", "4", "--samples", "10")
    assert abs(doc["dx2_per_period"]["value"]) > 1e-2
    assert doc["periodic"] is False


def test_trajectory_generic_field(tmp_path):
    field = tmp_path / "field.json"
    field.write_text(json.dumps({"potential": ["-x2/2", "x1/2"]}))
    doc = run_json("trajectory", "--field", str(field), "--potential", "1", "--mu", "10",
                   "--x0", "0,0", "--p0", "1,0", "--T", "0.5", "--samples", "5")
    assert doc["energy_drift"]["value"] <= doc["energy_drift"]["abs_tol"]


def test_csv_output_writes_report_sibling(tmp_path):
    out = tmp_path / "traj.csv"
    code, _, err = run("trajectory", "--k", "2", "--mu", "50", "--periods", "2", "--samples", "20",
                       "--format", "csv", "--out", str(out))
    assert code == 0, err
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 20 and "x2" in rows[0]
    report = json.loads(out.with_suffix(".json").read_text())
    assert report["dx2_per_period"]["value"] > 0


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run("period", "--k", "0.3,1.5", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_period_rows():
    doc = run_json("period", "--k", "0.1:0.3:0.1")
    assert [round(r["k"], 12) for r in doc["table"]] == [0.1, 0.2, 0.3]
    assert all(r["I"] < 0 for r in doc["table"])


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nu": 4}))
    doc = run_json("kstar", "--config", str(cfg))
    assert doc["nu"] == 4
    doc = run_json("kstar", "--config", str(cfg), "--nu", "3")
    assert doc["nu"] == 3 and doc["kstar"]["value"] == 0.0
    cfg.write_text(json.dumps({"nu": 2, "colour": "blue"}))
    code, _, err = run("kstar", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_weyl_below_first_level():
    doc = run_json("weyl", "--d", "2", "--r", "1", "--f", "1", "--V", "0.5", "--E", "0.2", "--mu", "1", "--h", "1")
    assert doc["density"]["value"] == 0
    assert doc["terms"] == 0


def test_weyl_d3():
    doc = run_json("weyl", "--d", "3", "--r", "1", "--f", "1", "--E", "2.5", "--mu", "1", "--h", "1")
    assert doc["density"]["value"] == pytest.approx(0.17296607967368227, rel=1e-14)


def test_landau_grid():
    doc = run_json("landau", "--f", "1", "--mu", "1", "--h", "0.1", "--tau", "0:0.3:0.1")
    dens = [r["density"] for r in doc["table"]]
    assert dens == sorted(dens) and dens[0] == 0.0


def test_gfunc_grid(tmp_path):
    out = tmp_path / "g.csv"
    code, _, err = run("gfunc", "--t-grid", "0:1:0.001", "--format", "csv", "--out", str(out))
    assert code == 0, err
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1001
    report = json.loads(out.with_suffix(".json").read_text())
    assert abs(report["integral_0_1"]["value"]) <= 1e-4
    assert report["max_abs"]["value"] > 0.01


def test_eigencount_methods_agree():
    doc = run_json("eigencount", "--nu", "2", "--hbar", "0.02", "--xi2", "0", "--tau", "0")
    assert abs(doc["fd"]["count"] - doc["bohr_sommerfeld"]["count"]) <= 1


def test_lines_nondeg4d():
    doc = run_json("lines", "--field", "nondeg4d", "--x0", "0,0.1,0.2,0.3", "--arc", "0.5", "--step", "0.1")
    assert all(abs(r["x1"]) < 1e-12 and abs(r["x3"] - 0.2) < 1e-12 for r in doc["table"])


def test_lines_off_axis_martinet_is_usage_error():
    code, _, err = run("lines", "--field", "martinet2d", "--x0", "0.5,0.2")
    assert code == 2
    assert json.loads(err)["error"]["class"] == "DegeneracyError"


def test_drift_scan():
    doc = run_json("drift-scan", "--mus", "25,50,100,200")
    assert -2.3 <= doc["slope"]["value"] <= -1.7


def test_correction_with_samples():
    doc = run_json("correction", "--hbar", "0.05", "--xi2-samples", "9")
    sweep = doc["sweeps"][0]
    assert len(sweep["n0"]) == 9 and min(sweep["n0"]) >= 0
    assert "abs_tol" in sweep["correction"]


def test_every_report_number_has_a_certificate():
    doc = run_json("kstar", "--nu", "2")
    for key in ("kstar", "dI_dk"):
        assert {"value"} < set(doc[key])
