import csv
import json
from pathlib import Path

import numpy as np
import pytest

from einsteuler.cli import EXIT_CHECK, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main
from einsteuler.io import read_binary

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

SMALL_WAVE = """
name = "small-wave"
[grid]
points = [16, 1, 1]
extent = [1.0, 1.0, 1.0]
[initial]
recipe = "gauge-wave"
A = 0.05
[evolution]
t_end = 0.2
"""


def _write(tmp_path, text, name="s.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minkowski_run(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(SCENARIOS / "minkowski.toml"), "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["steps"] == 100 and summary["passed"]
    for key in ("norm_drift", "harmonic_residual", "eps_consistency"):
        assert summary[key]["max"] == 0 and summary[key]["min"] == 0
    assert summary["gronwall"]["C"] == 0
    final, meta = read_binary(out / "final_state.bin")
    assert np.all(final == 0) and meta["t"] == pytest.approx(0.78125)
    for name in ("monitors.csv", "norms.json", "energy.png", "residuals.png", "profile.png"):
        assert (out / name).stat().st_size > 0
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["passed"]


def test_run_is_deterministic(tmp_path):
    scn = _write(tmp_path, SMALL_WAVE)
    for d in ("a", "b"):
        assert main(["run", scn, "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a/monitors.csv").read_bytes() == (tmp_path / "b/monitors.csv").read_bytes()
    assert (tmp_path / "a/final_state.bin").read_bytes() == (tmp_path / "b/final_state.bin").read_bytes()


def test_check_norms(tmp_path):
    out = tmp_path / "n"
    assert main(["check-norms", _write(tmp_path, SMALL_WAVE), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "norms.json").read_text())
    assert set(rep["energy_terms"]) == {"v", "dtv", "dxv", "W"}
    assert rep["energy_x"] > 0


def test_matrices(tmp_path):
    out = tmp_path / "m"
    assert main(["matrices", _write(tmp_path, SMALL_WAVE), "--point", "3,0,0", "--out", str(out)]) == EXIT_OK
    A0 = np.loadtxt(out / "matrices" / "A0.csv", delimiter=",")
    assert A0.shape == (55, 55) and np.array_equal(A0, A0.T)
    assert main(["matrices", _write(tmp_path, SMALL_WAVE), "--point", "99,0,0", "--out", str(out)]) == EXIT_VALIDATION


def test_convergence_table_and_failed_check(tmp_path, capsys):
    scn = _write(tmp_path, SMALL_WAVE)
    out = tmp_path / "c"
    code = main(["convergence", scn, "--levels", "3", "--expect-order", "8", "--out", str(out)])
    assert code == EXIT_CHECK
    rows = list(csv.reader((out / "convergence.csv").open()))
    assert rows[0][:3] == ["level", "points", "h"] and len(rows) == 4
    assert [int(r[1]) for r in rows[1:]] == [16, 32, 64]
    assert "order" in capsys.readouterr().out


def test_inequalities_without_probe(tmp_path):
    out = tmp_path / "q"
    assert main(["inequalities", "--no-probe", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader((out / "inequalities.csv").open()))
    assert rows[0] == ["check", "worst_ratio", "bound", "passed"]
    assert all(r[3] == "True" for r in rows[1:])


def test_exit_code_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == EXIT_PARSE


def test_exit_code_parse_error(tmp_path):
    assert main(["run", _write(tmp_path, "[grid\npoints = 3\n"), "--out", str(tmp_path)]) == EXIT_PARSE


@pytest.mark.parametrize(
    "text",
    [
        '[eos]\ngamma = 4.0\n[initial]\nrecipe = "minkowski-vacuum"\n',
        '[eos]\nK = 100.0\n[initial]\nrecipe = "sound-wave"\nw0 = 0.1\n',
    ],
)
def test_exit_code_validation(tmp_path, text):
    assert main(["run", _write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_strict_window_flag(tmp_path):
    text = '[eos]\ngamma = 2.5\n[initial]\nrecipe = "minkowski-vacuum"\n[evolution]\nt_end = 0.01\n'
    scn = _write(tmp_path, text)
    assert main(["check-norms", scn, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["check-norms", scn, "--strict-window", "--out", str(tmp_path / "b")]) == EXIT_VALIDATION


def test_exit_code_numerical(tmp_path):
    text = SMALL_WAVE.replace("t_end = 0.2", "t_end = 0.2\ndt = 0.5")
    assert main(["run", _write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_NUMERICAL
