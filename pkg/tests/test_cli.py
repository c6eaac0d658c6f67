import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from nablowup.cli import EXIT_CERT, EXIT_CONFIG, EXIT_OK, main

ROOT = Path(__file__).resolve().parent.parent
WORKED = str(ROOT / "scenarios" / "worked_example.json")
LINEAR = str(ROOT / "scenarios" / "linear.json")


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_blowup_worked(tmp_path, capsys):
    assert run(tmp_path, "blowup", "--scenario", WORKED) == EXIT_OK
    out = capsys.readouterr().out
    assert "kappa=1" in out and "saddle" in out
    rep = json.loads((tmp_path / "blowup.json").read_text())
    by_v = {e["v_star"]: e for e in rep["equilibria"]}
    assert set(by_v) == {"0", "1"}
    assert by_v["1"]["eigenvalues"] == [-1.0, 3.0]
    assert [x["v"] for x in rep["u_rate_sign_changes"]] == ["1/2"]


def test_simulate_worked(tmp_path):
    assert run(tmp_path, "simulate", "--scenario", WORKED) == EXIT_OK
    comps = json.loads((tmp_path / "simulate.json").read_text())
    assert len(comps) == 3 and all(c["orbit_deviation"] <= 1e-6 for c in comps)
    rows = list(csv.reader(open(tmp_path / "trajectory_0.csv")))
    assert len(rows) > 2


def test_verify_linear(tmp_path, capsys):
    assert run(tmp_path, "verify", "--scenario", LINEAR) == EXIT_OK
    res = json.loads((tmp_path / "verify.json").read_text())["results"]
    assert res and all(r["passed"] for r in res)
    assert json.loads((tmp_path / "failures.json").read_text()) == []


def test_manifold_and_report(tmp_path):
    assert run(tmp_path, "manifold", "--scenario", LINEAR) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "manifold.csv")))
    assert len(rows) == 4 and all(float(r["w_v"]) == 0.0 for r in rows)
    assert run(tmp_path, "report", "--scenario", WORKED) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["M"] == pytest.approx(1.65) and rep["cfg"]["delta"] == 0.0078125
    assert rep["N_est"] <= rep["N_bound"]
    assert all(c < 1 for c in rep["contraction_factors"])


def test_blowdown_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["blowdown", "--scenario", LINEAR, "--out", str(a)]) == EXIT_OK
    assert main(["blowdown", "--scenario", LINEAR, "--out", str(b)]) == EXIT_OK
    for name in ("manifold_cloud.csv", "manifold_curves.csv", "blowdown.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = list(csv.DictReader(open(a / "manifold_cloud.csv")))
    assert {r["side"] for r in rows} == {"+", "-"}


def test_certificate_failure(tmp_path, capsys):
    assert run(tmp_path, "manifold", "--scenario", WORKED, "--delta", "0.3") == EXIT_CERT
    assert "NoContraction" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["report", "--scenario", "missing.json"],
    ["manifold"],
    ["report", "--scenario", WORKED, "--beta", "5"],
    ["blowup", "--scenario", WORKED, "--kappa", "2"],
])
def test_config_errors(tmp_path, args):
    assert run(tmp_path, *args) == EXIT_CONFIG


def test_bad_schema(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"name": "x", "field": {"F": ["x"]}}))
    assert run(tmp_path, "blowup", "--scenario", str(p)) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "nablowup", "blowup", "--scenario", LINEAR,
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "desingularized" in out.stdout
