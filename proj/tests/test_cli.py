"""Exit-code contract and report contents of the lyacanon command-line tool."""

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ["LYACANON_CLI"]
DATA = Path(os.environ["LYACANON_TEST_DATA"])
EXAMPLE = os.environ["LYACANON_EXAMPLE_FILE"]


def run(tmp_path, *args):
    proc = subprocess.run(
        [CLI, *args, "--out-dir", str(tmp_path)], capture_output=True, text=True, timeout=300
    )
    return proc.returncode, proc.stdout + proc.stderr


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def test_validate_example(tmp_path):
    code, _ = run(tmp_path, "validate", "--input", EXAMPLE)
    assert code == 0
    report = load(tmp_path, "validation.json")
    assert report["ok"] and report["drift"] < 1e-8


def test_validate_corrupted_integral(tmp_path):
    code, _ = run(tmp_path, "validate", "--input", str(DATA / "corrupted_integral.lyc"))
    assert code == 1
    report = load(tmp_path, "validation.json")
    assert report["integrals"][0]["witness"] is not None


@pytest.mark.parametrize("name", ["does_not_exist.lyc", "missing_integral.lyc", "undeclared.lyc"])
def test_load_errors(tmp_path, name):
    code, out = run(tmp_path, "validate", "--input", str(DATA / name))
    assert code == 2
    assert "error" in out


def test_usage_errors(tmp_path):
    assert run(tmp_path, "validate")[0] == 2
    assert run(tmp_path, "frobnicate")[0] == 2
    assert run(tmp_path, "stability", "--input", EXAMPLE, "--rel-tol", "1")[0] == 2
    assert run(tmp_path, "stability", "--input", EXAMPLE, "--lyap-exponent", "3")[0] == 2
    assert run(tmp_path, "reproduce-example", "--lambda", "0")[0] == 2


def test_canonize(tmp_path):
    code, _ = run(tmp_path, "canonize", "--input", EXAMPLE)
    assert code == 0
    report = load(tmp_path, "canonical.json")
    assert len(report["stages"]) == 2
    assert all(f["max_abs"] < 1e-9 for f in report["flatness"])
    assert report["round_trip"]["ok"]


def test_canonize_trivial_and_unsolvable(tmp_path):
    code, _ = run(tmp_path, "canonize", "--input", str(DATA / "trivial.lyc"))
    assert code == 0
    report = load(tmp_path, "canonical.json")
    assert len(report["stages"]) == 1
    code, out = run(tmp_path, "canonize", "--input", str(DATA / "unsolvable.lyc"))
    assert code == 1
    assert "unsolvable component 1" in out


def test_stability_example(tmp_path):
    code, _ = run(tmp_path, "stability", "--input", EXAMPLE)
    assert code == 0
    report = load(tmp_path, "stability.json")
    assert [c["rank"] for c in report["components"]] == [1, 1]
    assert [c["sign"] for c in report["components"]] == ["-", "-"]
    assert report["lyapunov"]["verified"]
    assert report["scan"]["inclusion"]


def test_stability_failures(tmp_path):
    code, _ = run(tmp_path, "stability", "--input", str(DATA / "growth.lyc"))
    assert code == 1
    report = load(tmp_path, "stability.json")
    assert report["components"][0]["verdict"] == "unstable-evidence"
    assert report["components"][0]["amap"]["violations"] > 0

    code, out = run(tmp_path, "stability", "--input", str(DATA / "wide_xi.lyc"))
    assert code == 1
    assert "degenerate-beyond-cap" in out
    report = load(tmp_path, "stability.json")
    flagged = [p for p in report["scan"]["per_curve"] if p["xi"][0] <= 0]
    assert flagged and not any(p["stable"] for p in flagged)

    assert run(tmp_path, "stability", "--input", str(DATA / "decay.lyc"))[0] == 0


def test_simulate_with_oracle(tmp_path):
    code, _ = run(tmp_path, "simulate", "--input", EXAMPLE, "--oracle")
    assert code == 0
    report = load(tmp_path, "simulation.json")
    assert max(report["oracle"]["deviation"]) < 1e-6
    names = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert names == [
        "graph1_integral_curves.csv",
        "graph2_level_sections.csv",
        "graph3_criterion_3d.csv",
        "graph4_criterion_1d.csv",
        "graph5_rhs_surface.csv",
        "graph6_rhs_surface.csv",
    ]
    with open(tmp_path / "graph1_integral_curves.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["c1", "c2", "t", "x1", "x2"]
    assert len(rows) == 1 + 3 * 241


def test_simulate_empty_curves(tmp_path):
    code, _ = run(tmp_path, "simulate", "--input", EXAMPLE, "--c-points", "")
    assert code == 0
    for path in tmp_path.glob("*.csv"):
        assert len(path.read_text().splitlines()) == 1


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "simulate", "--input", EXAMPLE)[0] == 0
    assert run(b, "simulate", "--input", EXAMPLE)[0] == 0
    for path in a.glob("*.csv"):
        assert path.read_bytes() == (b / path.name).read_bytes()


def test_reproduce_example(tmp_path):
    code, out = run(tmp_path, "reproduce-example")
    summary = load(tmp_path, "summary.json")
    lines = [l for l in out.splitlines() if l.startswith(("PASS criterion", "FAIL criterion"))]
    assert len(lines) == 11
    failing = [c for c in summary["criteria"] if not c["pass"]]
    assert code == (1 if failing else 0)
    assert summary["ok"] == (not failing)
    if failing:
        assert f"criterion {failing[0]['id']}" in out
    for name in ("validation.json", "canonical.json", "stability.json", "simulation.json"):
        assert (tmp_path / name).exists()


def test_reproduce_loosened(tmp_path):
    code, _ = run(tmp_path, "reproduce-example", "--rel-tol", "1e-4")
    summary = load(tmp_path, "summary.json")
    assert summary["profile"] == "loosened"
    sim = load(tmp_path, "simulation.json")
    assert max(sim["oracle"]["deviation"]) < 1e-3
    assert code == (0 if summary["ok"] else 1)
