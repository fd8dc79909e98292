import csv
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from referencing import Registry, Resource

from lfprior.cli import EXIT_USAGE, main, parse_range

SCHEMAS = {p.name: json.loads(p.read_text()) for p in resources.files("lfprior").joinpath("schemas").iterdir()
           if p.name.endswith(".json")}
REGISTRY = Registry().with_resources([(name, Resource.from_contents(s)) for name, s in SCHEMAS.items()])


def check_schema(obj, name):
    jsonschema.Draft202012Validator(SCHEMAS[name], registry=REGISTRY).validate(obj)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def test_parse_range():
    assert parse_range("3") == [3]
    assert parse_range("1..4") == [1, 2, 3, 4]
    assert parse_range("1,3..4") == [1, 3, 4]


def test_bounds(capsys, tmp_path):
    code, data = run_json(capsys, "bounds", "--N", 4, "--k", 0, "--n", 1, "--out", tmp_path)
    assert code == 0
    assert data == {"general": 8, "t_compatible": 4, "refined": 7}
    check_schema(data, "bounds.schema.json")
    check_schema(json.loads((tmp_path / "manifest.json").read_text()), "manifest.schema.json")


def test_bounds_from_channel(capsys):
    code, data = run_json(capsys, "bounds", "--channel", "qgauss", "--levels", 4, "--omega", -5, 5)
    assert data["t_compatible"] == 9


def test_solve_binomial_m1(capsys, tmp_path):
    code, data = run_json(capsys, "solve", "--channel", "binomial", "--m", 1, "--loss", "sq", "--omega", 0, 1,
                          "--restarts", 8, "--seed", 7, "--out", tmp_path)
    assert code == 0
    assert abs(data["result"]["risk"] - 0.0625) <= 1e-6
    check_schema(data, "solve.schema.json")
    rows = list(csv.reader((tmp_path / "trace.csv").open()))
    assert rows[0] == ["iteration", "risk"]
    assert (tmp_path / "manifest.json").exists()


def test_solve_qgauss_support_size(capsys):
    code, data = run_json(capsys, "solve", "--channel", "qgauss", "--levels", 4, "--loss", "sq", "--omega", -5, 5,
                          "--restarts", 2)
    assert code == 0
    assert len(data["result"]["prior"]["masses"]) <= 9


def test_invalid_parameter_exit_1(capsys):
    code, out, err = run(capsys, "solve", "--channel", "binomial", "--m", 0)
    assert code == 1
    assert "InvalidParameterError" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--channel", "binomial", "--m", "1", "--bogus"],
    ["solve", "--channel", "nope"],
    ["solve", "--channel", "binomial", "--m", "x..y"],
    ["solve", "--channel", "binomial"],
    ["solve", "--channel", "binomial", "--m", "1", "--omega", "0"],
    [],
])
def test_usage_errors_exit_64(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert "usage" in err


def test_max_iter_exit_2_still_prints(capsys):
    code, data = run_json(capsys, "solve", "--channel", "binomial", "--m", 3, "--max-iter", 2, "--restarts", 1)
    assert code == 2
    assert data["result"]["converged"] is False


def test_csv_format(capsys):
    code, out, err = run(capsys, "solve", "--channel", "binomial", "--m", 2, "--restarts", 1, "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "iteration,risk"


def test_risk_eval(capsys, tmp_path):
    s = np.sqrt(2)
    prior = tmp_path / "prior.json"
    prior.write_text(json.dumps({"points": [[(2 - s) / 4], [(2 + s) / 4]], "masses": [0.5, 0.5]}))
    code, data = run_json(capsys, "risk-eval", "--prior", prior, "--channel", "binomial", "--m", 1, "--loss", "sq")
    assert code == 0
    assert abs(data["risk"] - 0.0625) <= 1e-12
    check_schema(data, "risk_eval.schema.json")


def test_risk_eval_rejects_invalid_prior(capsys, tmp_path):
    prior = tmp_path / "prior.json"
    prior.write_text(json.dumps({"points": [[0.2], [0.8]], "masses": [0.6, 0.5]}))
    code, out, err = run(capsys, "risk-eval", "--prior", prior, "--channel", "binomial", "--m", 1)
    assert code == 1
    assert "sum" in err


def test_grad_check(capsys):
    code, data = run_json(capsys, "grad-check", "--channel", "binomial", "--m", 3, "--seed", 1)
    assert code == 0
    assert data["max_rel_err"] <= 1e-5
    check_schema(data, "grad_check.schema.json")
    code, data = run_json(capsys, "grad-check", "--channel", "qgauss", "--levels", 2, "--d", 5, "--seed", 4)
    assert code == 0 and data["max_rel_err"] <= 1e-5


def test_grad_check_fails_loudly_on_gid(capsys):
    code, out, err = run(capsys, "grad-check", "--channel", "binomial", "--m", 1, "--loss", "gid")
    assert code == 1


def test_validate_channel(capsys, tmp_path):
    code, data = run_json(capsys, "validate-channel", "--channel", "qgauss", "--levels", 4, "--omega", -5, 5)
    assert code == 0 and data["ok"]
    check_schema(data, "channel_report.schema.json")


def test_table_channel_solve(capsys, tmp_path):
    xs = np.linspace(0, 1, 41)
    rows = [[(1 - x) ** 2, 2 * x * (1 - x), x * x] for x in xs]
    table = tmp_path / "table.json"
    table.write_text(json.dumps({"outputs": [0, 1, 2], "grid_x": xs.tolist(), "pmf_rows": rows}))
    code, data = run_json(capsys, "solve", "--channel", "table", "--table", table, "--omega", 0, 1, "--restarts", 1)
    assert code == 0
    # a fine table of the m = 2 binomial lands close to its minimax value
    assert abs(data["result"]["risk"] - 1 / (4 * (1 + np.sqrt(2)) ** 2)) <= 1e-3


def read_sweep(out: Path):
    return {name: (out / name).read_bytes() for name in ("support.csv", "pmf.csv", "summary.csv", "results.json")}


def test_sweep_binomial(capsys, tmp_path):
    out = tmp_path / "figs"
    code, data = run_json(capsys, "sweep", "--channel", "binomial", "--m", "1..10", "--restarts", 1, "--out", out)
    assert code == 0
    check_schema(data, "sweep.schema.json")
    rows = list(csv.DictReader((out / "support.csv").open()))
    assert len(rows) == sum(len(r["prior"]["masses"]) for r in data["results"])
    assert [r["value"] for r in data["results"]] == list(range(1, 11))
    for name in ("plot_support.py", "plot_pmf.py", "manifest.json"):
        assert (out / name).exists()


def test_sweep_qgauss_deterministic_and_replayable(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["sweep", "--channel", "qgauss", "--levels", "1..4", "--omega", -5, 5, "--restarts", 2, "--seed", 3]
    code, data = run_json(capsys, *argv, "--out", a)
    assert code == 0 and len(data["results"]) == 4
    run(capsys, *argv, "--out", b)
    assert read_sweep(a) == read_sweep(b)
    first = read_sweep(a)
    for f in first:
        (a / f).unlink()
    code, _, _ = run(capsys, "replay", a / "manifest.json")
    assert code == 0
    assert read_sweep(a) == first


def test_sweep_needs_out(capsys):
    code, out, err = run(capsys, "sweep", "--channel", "binomial", "--m", "1..2")
    assert code == EXIT_USAGE


def test_manifest_path_and_replay_of_solve(capsys, tmp_path):
    man = tmp_path / "run" / "m.json"
    code, out1, _ = run(capsys, "solve", "--channel", "binomial", "--m", 2, "--restarts", 2, "--seed", 5, "--manifest", man)
    manifest = json.loads(man.read_text())
    check_schema(manifest, "manifest.schema.json")
    assert manifest["seed"] == 5 and manifest["command"] == "solve"
    code2, out2, _ = run(capsys, "replay", man)
    assert (code, out1) == (code2, out2)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lfprior", "bounds", "--N", "9", "--k", "0", "--n", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["t_compatible"] == 9
