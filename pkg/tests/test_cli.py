import json

import pytest

from scordant.presets import wellspecified_problem
from scordant.cli import EXIT_OK, EXIT_PREMISE, EXIT_USAGE, EXIT_VIOLATION, main, run


def strip_time(report):
    report = dict(report)
    report.pop("wall_time")
    return report


def test_verify_bounds_ok_and_deterministic():
    argv = ["verify-bounds", "--instances", "20", "--seed", "4"]
    code, a = run(argv)
    _, b = run(argv)
    assert code == EXIT_OK
    assert json.dumps(strip_time(a), sort_keys=True) == json.dumps(strip_time(b), sort_keys=True)
    assert a["schema"] == 1 and a["command"] == "verify-bounds"
    assert a["config"]["instances"] == 20 and a["seeds"]
    assert {"name", "premise_ok", "lhs", "rhs", "pass"} <= set(a["records"][0])


def test_fault_gives_violation():
    code, report = run(["verify-bounds", "--instances", "20", "--inject-fault", "phi_plus",
                        "--no-newton"])
    assert code == EXIT_VIOLATION
    assert report["statistics"]["counterexamples"]


@pytest.mark.parametrize("argv", [["verify-bounds", "--instances", "0"], ["frobnicate"],
                                  ["ridge-experiment"], ["concentration", "--which", "eq99"],
                                  ["ridge-experiment", "--theorem", "1", "--problem",
                                   "/nonexistent.json"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_premise_failure_exit():
    code, report = run(["ridge-experiment", "--theorem", "2", "--lam", "1e-4", "--reps", "20"])
    assert code == EXIT_PREMISE
    assert not all(r["premise_ok"] for r in report["records"])


def test_ridge_theorem1_writes_files(tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    code = main(["ridge-experiment", "--theorem", "1", "--reps", "50", "--out", str(out),
                 "--csv", str(table)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["command"] == "ridge-experiment"
    header = table.read_text().splitlines()[0]
    assert header.startswith("lam,") and "kappa" in header


def test_concentration_prop4_csv(tmp_path):
    table = tmp_path / "p4.csv"
    code, report = run(["concentration", "--which", "prop4", "--draws", "5000", "--csv",
                        str(table)])
    assert code == EXIT_OK
    lines = table.read_text().splitlines()
    assert lines[0] == "u,empirical,bound" and len(lines) == 5


def test_lasso_orthogonal_large_n():
    code, report = run(["lasso-experiment", "--theorem", "4", "--design", "orthogonal",
                        "--lam-fraction", "1.0", "--reps", "20"])
    assert code == EXIT_OK


def test_problem_file_input(tmp_path, small_problem):
    path = tmp_path / "problem.json"
    path.write_text(wellspecified_problem(n=100, p=3).to_json())
    code, report = run(["concentration", "--which", "eq19", "--draws", "2000", "--problem",
                        str(path)])
    assert code == EXIT_OK and report["records"]
    # labels only, no label law: the tail cannot be simulated
    path.write_text(small_problem.to_json())
    assert main(["concentration", "--which", "eq19", "--problem", str(path)]) == EXIT_USAGE
