import json
from importlib import resources

import jsonschema
import pytest

from gnnseplab.cli import SCHEMA, run_cli

from conftest import DATA

IDENTITY = str(DATA / "identity.json")
RELU = str(DATA / "relu_fixed.json")
SIGMOID = str(DATA / "sigmoid.json")


@pytest.fixture(scope="module")
def validator():
    schema = json.loads(resources.files("gnnseplab").joinpath("schemas/report.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def run(argv, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = run_cli([*argv, "--output", str(out)])
    captured = capsys.readouterr()
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report, captured.out, captured.err


SUCCESS_CASES = [
    ["cr", "--a", "1,3", "--b", "2,2"],
    ["cr", "--graph", str(DATA / "path4.json")],
    ["gnn", "--model", IDENTITY, "--spec", "1,3", "--iters", "3"],
    ["gnn", "--model", SIGMOID, "--spec", "2,2", "--iters", "2", "--field", "interval:128"],
    ["collide", "--model", IDENTITY, "--iters", "2", "--m", "2", "--m-max", "4"],
    ["verify", "--model", IDENTITY, "--iters", "3", "--a", "1,3", "--b", "2,2"],
    ["separate", "--activation", "sigmoid", "--a", "1,3", "--b", "2,2", "--max-bits", "256"],
    ["exhaustive-separate", "--activation", "tanh", "--max-vertices", "6"],
    ["poly", "--model", RELU, "--spec", "5,5,5", "--t", "2"],
    ["bound", "--m", "2", "--q", "1", "--T", "1", "--M", "3", "--lambda", "1"],
    ["boxsize", "--m", "2"],
    ["refines", "--graphs", "10", "--seed", "3"],
    ["refines", "--model", RELU, "--graph", str(DATA / "path4.json"), "--rounds", "3"],
]


@pytest.mark.parametrize("argv", SUCCESS_CASES, ids=lambda a: a[0])
def test_reports_validate_and_reproduce(argv, tmp_path, capsys, validator):
    code, report, out, _ = run(argv, tmp_path, capsys)
    assert code == 0
    assert report["schema"] == SCHEMA and report["command"] == argv[0]
    validator.validate(report)
    assert len(out.strip().splitlines()) == 1
    first = (tmp_path / "report.json").read_bytes()
    assert run_cli([*argv, "--output", str(tmp_path / "again.json")]) == 0
    assert (tmp_path / "again.json").read_bytes() == first


def test_bound_prints_13(capsys):
    assert run_cli(["bound", "--m", "2", "--q", "1", "--T", "1", "--M", "3", "--lambda", "1"]) == 0
    assert capsys.readouterr().out.strip() == "13"


def test_collide_identity_pair(tmp_path, capsys):
    code, report, _, _ = run(["collide", "--model", IDENTITY, "--iters", "2", "--m", "2", "--m-max", "4"], tmp_path, capsys)
    assert code == 0
    assert sorted([report["result"]["spec_a"], report["result"]["spec_b"]]) == [[1, 3], [2, 2]]


def test_collide_not_found_exit_2(tmp_path, capsys, validator):
    code, report, _, _ = run(["collide", "--model", IDENTITY, "--iters", "2", "--m", "1", "--m-max", "5"], tmp_path, capsys)
    assert code == 2
    assert report["result"] == {"status": "not_found"}
    validator.validate(report)


def test_separate_summary(capsys):
    assert run_cli(["separate", "--activation", "sigmoid", "--a", "1,3", "--b", "2,2", "--max-bits", "256"]) == 0
    assert capsys.readouterr().out.startswith("DistinctCertified")


def test_verify_false_exit_2(capsys):
    assert run_cli(["verify", "--model", IDENTITY, "--iters", "4", "--a", "1,3", "--b", "2,2"]) == 2


def test_json_flag_prints_report(capsys):
    assert run_cli(["boxsize", "--m", "2", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["result"] == {"M": "8", "multisets": "36"}


def test_bound_echoes_inputs(tmp_path, capsys):
    _, report, _, _ = run(["bound", "--m", "2", "--q", "2", "--T", "2", "--M", "4"], tmp_path, capsys)
    assert report["config"] == {"m": 2, "q": 2, "T": 2, "M": 4, "lambda": 1}
    assert report["result"]["bound"] == str(97**4)


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["bound", "--m", "2", "--q", "1", "--T", "1", "--M", "3", "--bogus"], "--bogus"),
        (["frobnicate"], "frobnicate"),
        (["boxsize", "--m", "2", "--iters", "2"], "--m"),
        (["gnn", "--model", SIGMOID, "--spec", "1,3"], "--field"),
        (["gnn", "--model", IDENTITY, "--spec", "1,3", "--field", "interval:zz"], "--field"),
        (["collide", "--model", SIGMOID, "--m-max", "3"], "--model"),
        (["collide", "--model", IDENTITY, "--field", "interval:64"], "--field"),
        (["separate", "--activation", "relu", "--a", "1", "--b", "2"], "--activation"),
        (["cr", "--a", "1,0", "--b", "2"], "--a"),
        (["gnn", "--model", str(DATA / "broken.json"), "--spec", "1"], "--model"),
        (["gnn", "--model", str(DATA / "missing_d.json"), "--spec", "1"], "'d'"),
        (["gnn", "--model", str(DATA / "nope.json"), "--spec", "1"], "--model"),
    ],
)
def test_errors_exit_1_with_diagnostic(argv, needle, capsys):
    assert run_cli(argv) == 1
    err = capsys.readouterr().err
    assert "error:" in err and needle in err


def test_profile_goes_to_stderr(capsys):
    assert run_cli(["cr", "--a", "1,3", "--b", "2,2", "--profile"]) == 0
    captured = capsys.readouterr()
    assert "profile refine" in captured.err
    assert "profile" not in captured.out


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "gnnseplab", "bound", "--m", "1", "--q", "1", "--T", "1", "--M", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "3"
