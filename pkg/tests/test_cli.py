import csv
import io
import json
import subprocess
import sys

import pytest

from humbert.cli import fmt_float, main, to_json
from humbert.series_core import golden_lookup


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_matches_golden(capsys):
    code, out, _ = run("eval --family phi2 --beta 1 --beta-p 1 --gamma 2 --x -0.5 --y -0.25 --t 1".split(), capsys)
    assert code == 0
    doc = json.loads(out)
    rec = golden_lookup("Phi2", {"beta": 1, "beta_p": 1, "gamma": 2}, -0.5, -0.25)
    assert doc["schema"] == 1
    assert doc["value"] == pytest.approx(rec["value"], rel=1e-14)


def test_eval_at_origin(capsys):
    code, out, _ = run("eval --family phi2 --beta 0.3 --beta-p 2 --gamma 1.7 --x 0 --y 0".split(), capsys)
    assert code == 0 and json.loads(out)["value"] == 1.0
    assert '"value": 1.0' in out


@pytest.mark.parametrize("route", ["series", "oracle", "euler", "ilt"])
def test_eval_routes(route, capsys):
    code, out, _ = run(f"eval --family phi3 --beta 1 --gamma 2.5 --x 0.4 --y -0.3 --t 2 --route {route}".split(), capsys)
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(json.loads(run(
        "eval --family phi3 --beta 1 --gamma 2.5 --x 0.4 --y -0.3 --t 2".split(), capsys)[1])["value"], rel=1e-8)


def test_eval_asym_route(capsys):
    code, out, _ = run("eval --family phi2 --beta 1 --beta-p 1 --gamma 3 --x 1 --y 1 --t 1000 --route asym".split(), capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(2e-6, rel=1e-14)


def test_identities_addition(capsys):
    code, out, _ = run("identities --suite addition --gamma 2 --x 0.3 --y 0.5".split(), capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["results"][0]["residual"] < 1e-9 and doc["results"][0]["pass"] is True


def test_identities_threshold_failure(capsys):
    code, out, _ = run("identities --suite beta --gamma 2 --threshold 1e-30".split(), capsys)
    assert code == 1


def test_identities_all_csv(capsys):
    code, out, _ = run("identities --suite all --format csv".split(), capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert {r["suite"].split("/")[0] for r in rows} == {"beta", "lambda", "corollary2", "addition", "laplace"}


def test_compare_reports_pairs_and_skips(capsys):
    code, out, _ = run("compare --family xi2 --alpha 1 --beta 1 --gamma 2 --x 2 --y 1".split(), capsys)
    doc = json.loads(out)
    assert code == 0
    assert set(doc["skipped"]) == {"series", "oracle"}
    assert doc["max_rel_dev"] < 1e-6


def test_compare_threshold(capsys):
    code, _, _ = run("compare --family phi3 --beta 1 --gamma 2 --x 0.5 --y 0.5 --threshold 1e-300".split(), capsys)
    assert code == 1


def test_asym_csv(capsys):
    code, out, _ = run("asym --family phi2 --beta 0.5 --beta-p 0.5 --gamma 2 --x 1 --y 1 --t-grid 10,100 --format csv".split(),
                       capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["branch"] for r in rows] == ["x>0, y>0"] * 2


def test_constraint_residual_and_solve(capsys):
    code, out, _ = run("constraint --d 3 --t 10 --Z -0.1".split(), capsys)
    assert code == 0
    rec = golden_lookup("SphericalResidual", {"d": 3.0, "g": 1.0, "gamma_diss": 1.0, "C": 1.0}, -0.1, 0.0, 10.0)
    assert json.loads(out)["residual"] == pytest.approx(rec["value"], rel=1e-12)
    code, out, _ = run("constraint --d 3 --t 10 --format csv".split(), capsys)
    assert code == 0 and out.splitlines()[0] == "t,Z,residual,method_backend"


def test_constraint_bad_bracket_is_evaluation_failure(capsys):
    code, _, err = run("constraint --d 3 --t 10 --bracket=-0.05,-0.01".split(), capsys)
    assert code == 1 and "constraint" in err


def test_sweep(capsys):
    code, out, _ = run(["sweep", "--grid", "x=0.1,0.2", "--grid", "t=1,2", "eval", "--family", "phi3", "--beta", "1",
                        "--gamma", "2", "--y", "0.3"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["results"]) == 4
    assert [r["point"] for r in doc["results"]][0] == {"x": 0.1, "t": 1.0}


@pytest.mark.parametrize("argv", [
    "eval --family phi3 --beta 1 --x 0 --y 0",
    "eval --family nope --beta 1 --gamma 2 --x 0 --y 0",
    "eval --family phi3 --beta 1 --gamma 2 --alpha 1 --x 0 --y 0",
    "frobnicate",
    "sweep --grid x=1 eval",
    "constraint --d 3",
])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv.split(), capsys)
    assert code == 2 and "usage error" in err


def test_evaluation_failure_names_operation(capsys):
    code, _, err = run("eval --family xi2 --alpha 1 --beta 1 --gamma 2 --x 2 --y 1".split(), capsys)
    assert code == 1 and "eval/series" in err


def test_deterministic_output(capsys):
    argv = "eval --family phi3 --beta 1 --gamma 2.5 --x 0.4 --y -0.3 --t 2 --route ilt".split()
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


def test_float_formatting_round_trips():
    for v in (0.1, 1 / 3, 1e-300, 2.0**-1074, 1.0, -0.0):
        assert float(fmt_float(v)) == v
    assert fmt_float(1.0) == "1.0"
    assert json.loads(to_json({"a": [1.5, None, True]})) == {"a": [1.5, None, True]}


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "humbert.cli", "eval", "--family", "phi3", "--beta", "1", "--gamma", "2",
                        "--x", "0", "--y", "0", "--format", "csv"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[0].startswith("family,params,x,y,t,route,value")
