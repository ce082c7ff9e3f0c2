import json
from pathlib import Path

import numpy as np
import pytest

from quasistab.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_simulate_heleshaw(tmp_path, capsys):
    assert main(["simulate", "--config", str(SCENARIOS / "heleshaw.json"), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "ok" and report["gap"] == 6.0
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "decay.svg").exists()


def test_global_flags_before_verb(tmp_path):
    argv = ["--config", str(SCENARIOS / "heleshaw.json"), "--out", str(tmp_path), "--seed", "3", "simulate"]
    assert main(argv) == EXIT_OK


def test_simulate_malformed(tmp_path, capsys):
    code = main(["simulate", "--config", str(SCENARIOS / "malformed.json"), "--out", str(tmp_path)])
    assert code == EXIT_ERROR
    assert "n_cels" in capsys.readouterr().err
    assert json.loads((tmp_path / "report.json").read_text())["extra"]["key"] == "params.n_cels"


def test_missing_config_is_error(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == EXIT_ERROR
    assert "--config" in capsys.readouterr().err


@pytest.mark.parametrize("seed", ["-1", str(2**64), "abc"])
def test_seed_must_be_u64(seed):
    with pytest.raises(SystemExit) as info:
        main(["--seed", seed, "verify"])
    assert info.value.code == 2


def test_linearize_polynomial(tmp_path, capsys):
    assert main(["linearize", "--config", str(SCENARIOS / "polynomial.json"), "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "linearization.json").read_text())
    np.testing.assert_allclose(doc["matrix"], [[0, 0], [0, -1]], atol=1e-12)


def test_linearize_wrong_model(tmp_path):
    assert main(["linearize", "--config", str(SCENARIOS / "heleshaw.json")]) == EXIT_ERROR


@pytest.mark.parametrize(
    "name, key, expected",
    [("heleshaw.json", "gap", 6.0), ("closed_form.json", "gap", 1.0), ("rd.json", "neumann_gap", np.pi**2)],
)
def test_spectrum(name, key, expected, capsys):
    assert main(["spectrum", "--config", str(SCENARIOS / name)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)[key] == pytest.approx(expected)


def test_fit_decay_csv(tmp_path, capsys):
    t = np.linspace(0, 3, 61)
    path = tmp_path / "norms.csv"
    np.savetxt(path, np.column_stack([t, np.exp(-2.5 * t)]), delimiter=",", header="t,norm", comments="")
    assert main(["fit-decay", str(path), "--column", "norm", "--out", str(tmp_path)]) == EXIT_OK
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["omega_fit"] == pytest.approx(2.5, rel=1e-10)


def test_fit_decay_too_short(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("t,norm\n0,1\n1,0.5\n")
    assert main(["fit-decay", str(path)]) == EXIT_ERROR


def test_report_scenario(tmp_path, capsys):
    main(["simulate", "--config", str(SCENARIOS / "heleshaw.json"), "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["report", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "heleshaw" in out and "omega_fit" in out


def test_report_missing(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == EXIT_ERROR


def test_verify_subset(tmp_path, capsys):
    assert main(["verify", "--only", "1", "2", "9", "--out", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert sum(line.startswith("[PASS]") for line in lines) == 3
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["passed"] and [c["number"] for c in doc["criteria"]] == [1, 2, 9]
    assert main(["report", "--out", str(tmp_path)]) == EXIT_OK


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    from quasistab.lab import acceptance

    failing = [(1, "always fails", lambda seed: (False, {}), 1.0)]
    monkeypatch.setattr(acceptance, "CRITERIA", failing)
    assert main(["verify", "--out", str(tmp_path)]) == EXIT_FAIL
    assert main(["report", "--out", str(tmp_path)]) == EXIT_FAIL
