import csv
import io
import json
import math
import subprocess
import sys

import pytest

from lattice_spec.cli import format_float, run, to_json


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def record(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    assert out.endswith("\n")
    return json.loads(out)


def test_green_d1():
    rec = record("green", "--dim", "1", "--energy", "2")
    assert rec["schema_version"] == "1" and rec["command"] == "green"
    assert rec["results"]["I"] == pytest.approx(1 / math.sqrt(3), rel=1e-15)
    assert set(rec) == {"schema_version", "command", "inputs", "results", "diagnostics"}


def test_eigenvalue_d1():
    rec = record("eigenvalue", "--dim", "1", "--coupling", "1")
    assert rec["results"]["E"] == 1.4142135623730951
    assert rec["results"]["kind"] == "discrete"


def test_classify_critical_literal():
    rec = record("classify", "--dim", "5", "--coupling", "critical")
    res = rec["results"]
    assert res["pp"] == [1.0] and res["regime"] == "critical"
    assert res["sc"] == "empty" and res["ac"] == [-1, 1]


def test_global_flag_before_subcommand():
    rec = record("--dim", "3", "vc")
    assert rec["results"]["v_c"] == pytest.approx(0.6594626704490009, rel=1e-10)


def test_divergent_green_is_null():
    rec = record("green", "--dim", "3", "--energy", "1")
    assert rec["results"]["J"] is None and rec["results"]["J_kind"] == "divergent"


def test_dos_infinity_sentinel():
    code, out, _ = invoke("dos", "--dim", "2", "--x", "0")
    assert code == 0 and "Infinity" in out
    assert math.isinf(json.loads(out)["results"]["rho"])


def test_float_format_17_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert to_json({"a": [1.5, None, True]}) == '{"a":[1.5,null,true]}'


def test_csv_matches_json():
    j = record("eigenvalue", "--dim", "2", "--coupling", "0.8")
    code, out, _ = invoke("eigenvalue", "--dim", "2", "--coupling", "0.8", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["E"]) == j["results"]["E"]
    assert "\r\n" in out


def test_csv_table():
    code, out, _ = invoke("oracle", "--dim", "1", "--coupling", "1", "--Ns", "5,10", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0][:2] == ["N", "lam"] and len(rows) == 3


def test_deterministic_output():
    argv = ("im-resolvent", "--dim", "3", "--x", "0.4")
    assert invoke(*argv)[1] == invoke(*argv)[1]


@pytest.mark.parametrize("argv", [(), ("eigenvalue", "--dim", "1"), ("vc",),
                                  ("eigenvalue", "--dim", "1", "--coupling", "abc"),
                                  ("bogus",), ("green", "--dim", "3", "--energy", "0.5")])
def test_usage_errors(argv):
    code, out, err = invoke(*argv)
    assert code == 2 and out == "" and err


def test_numerical_failure_partial_record():
    code, out, _ = invoke("eigenvalue", "--dim", "2", "--coupling", "0.01")
    rec = json.loads(out)
    assert code == 1
    assert rec["results"] == {} and rec["diagnostics"][0]["error"] == "NonConvergence"
    assert rec["inputs"]["coupling"] == "0.01"


def test_env_precedence(monkeypatch):
    monkeypatch.setenv("LATTICE_SPEC_TOL", "1e-7")
    assert record("vc", "--dim", "3")["inputs"]["tol"] == 1e-7
    assert record("vc", "--dim", "3", "--tol", "1e-9")["inputs"]["tol"] == 1e-9


def test_theorem_table_branches():
    rows = record("theorem-table")["results"]["rows"]
    assert len(rows) == 18
    kinds = {(r["dim"], r["case"]): r["kind"] for r in rows}
    assert kinds[(4, "critical")] == "none"
    assert kinds[(5, "critical")] == "threshold_embedded"
    assert kinds[(3, "supercritical")] == "discrete"
    assert all(0 < r["weight"] <= 1 for r in rows if r["weight"] is not None)


def test_other_subcommands():
    assert record("coupling-for-energy", "--dim", "1", "--energy", "2")["results"]["v"] == pytest.approx(math.sqrt(3))
    assert record("weight", "--dim", "1", "--coupling", "1")["results"]["weight"] == pytest.approx(2 ** -0.5)
    rows = record("eigenvector", "--dim", "2", "--energy", "1.5", "--max-site", "2")["results"]["rows"]
    assert rows[0]["psi"] > rows[1]["psi"] > rows[2]["psi"] > 0
    rep = record("sw-report", "--dim", "1", "--grid-size", "16")["results"]
    assert rep["z_points"] == [-1, 1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lattice_spec", "vc", "--dim", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["results"]["v_c"] == 0
