import csv
import io
import json
import subprocess
import sys

import pytest

from chern_euler import cli
from chern_euler import scenarios as sc

QUICK = "gb-s2"


def test_catalog_names_unique_and_valid():
    cat = sc.catalog()
    names = [s.name for s in cat]
    assert len(names) == len(set(names))
    for s in cat:
        s.validate()


def test_json_round_trip(tmp_path):
    cat = sc.catalog()
    path = tmp_path / "scenarios.json"
    sc.dump_scenarios(cat, path)
    again = sc.load_scenarios(path)
    assert [s.to_dict() for s in again] == [json.loads(json.dumps(s.to_dict())) for s in cat]


def test_from_dict_rejects_unknown_keys():
    d = sc.get(QUICK).to_dict()
    d["colour"] = "blue"
    with pytest.raises(ValueError):
        sc.Scenario.from_dict(d)


def test_validate_rejects_bad_declarations():
    d = sc.get(QUICK).to_dict()
    d["checks"][0]["kind"] = "not-a-quantity"
    with pytest.raises(ValueError):
        sc.Scenario.from_dict(d).validate()
    d = sc.get(QUICK).to_dict()
    d["checks"][0]["provenance"] = "FOLKLORE"
    with pytest.raises(ValueError):
        sc.Scenario.from_dict(d).validate()


def test_select_globs_and_unknown_names():
    names = [s.name for s in sc.select(["cap-pi/*"])]
    assert names == ["cap-pi/6", "cap-pi/4", "cap-pi/3", "cap-pi/3-perturbed"]
    with pytest.raises(KeyError):
        sc.select(["no-such-scenario"])


def test_run_reports_results():
    rep = sc.run(sc.get(QUICK))
    assert rep.passed
    d = rep.to_dict()
    assert d["scenario"] == QUICK
    check = d["checks"][0]
    for key in ("name", "computed", "expected", "tolerance", "provenance", "pass", "error_estimate", "seconds"):
        assert key in check
    assert check["computed"] == pytest.approx(2.0, abs=1e-6)


def test_run_turns_exceptions_into_failed_checks():
    d = sc.get(QUICK).to_dict()
    d["checks"][0]["kind"] = "fiber"  # missing the "point" parameter
    rep = sc.run(sc.Scenario.from_dict(d))
    assert not rep.passed
    assert rep.checks[0].message.startswith("KeyError")
    assert rep.to_dict()["checks"][0]["computed"] is None


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_verify_table(capsys):
    code, out, _ = run_cli(capsys, "verify", "--scenario", QUICK)
    assert code == 0
    assert "PASS" in out and "1/1 checks passed" in out


def test_cli_verify_json(capsys):
    code, out, _ = run_cli(capsys, "verify", "--scenario", QUICK, "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] is True
    assert doc["reports"][0]["scenario"] == QUICK


def test_cli_verify_csv_and_out_file(capsys, tmp_path):
    path = tmp_path / "report.csv"
    code, out, _ = run_cli(capsys, "verify", "--scenario", QUICK, "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert rows[0]["scenario"] == QUICK and rows[0]["pass"] == "True"


def test_cli_sweep(capsys):
    code, out, _ = run_cli(capsys, "verify", "--scenario", QUICK, "--sweep", "--format", "json")
    sweep = json.loads(out)["sweep"]
    assert code == 0
    base = sweep[1]["gauss"]
    assert [row["gauss"] for row in sweep] == [base // 2, base, 3 * base // 2]
    assert all(row["pass"] for row in sweep)


def test_cli_failing_check_exits_one(capsys, tmp_path):
    d = sc.get(QUICK).to_dict()
    d["checks"][0]["expected"] = 3.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([d]))
    code, _, err = run_cli(capsys, "verify", "--scenario-file", str(path), "--all")
    assert code == 1
    assert f"FAILED: {QUICK} / euler integral" in err


@pytest.mark.parametrize("argv", [
    ["verify", "--scenario", "no-such-scenario"],
    ["verify"],
    ["verify", "--all", "--scenario", QUICK],
    ["verify", "--scenario-file", "/nonexistent/file.json", "--all"],
])
def test_cli_usage_errors_exit_two(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_cli_bad_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "--orders", "x"])
    assert exc.value.code == 2


def test_cli_list_and_export(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "list", "--format", "json")
    assert code == 0
    assert {"gb-s2", "chern-s2-in-s4"} <= {d["name"] for d in json.loads(out)}
    path = tmp_path / "catalog.json"
    assert run_cli(capsys, "export", "--out", str(path))[0] == 0
    code, out, _ = run_cli(capsys, "list", "--scenario-file", str(path))
    assert code == 0 and QUICK in out


def test_console_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "chern_euler", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and QUICK in proc.stdout
