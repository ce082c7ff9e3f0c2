"""Acceptance criteria 1-11, each at its stated tolerance and time limit."""

import time

import pytest

from conftest import ACCEPTANCE_LINES
from quasistab.cli import EXIT_OK, main
from quasistab.lab.acceptance import CRITERIA, run_criterion

SEED = 0


def record(line):
    print(line)
    ACCEPTANCE_LINES.append(line)


@pytest.mark.slow
@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"{c[0]}-{c[1]}" for c in CRITERIA])
def test_criterion(number):
    res = run_criterion(number, SEED)
    record(res.line())
    assert res.passed, res.details
    assert res.within_time, f"took {res.elapsed:.2f}s, limit {res.time_limit}s"


@pytest.mark.slow
def test_criterion_11_determinism(tmp_path, capsys):
    # one verify run must fit in the summed budget of criteria 1-10
    budget = sum(c[3] for c in CRITERIA)
    reports, elapsed = [], []
    for run in ("first", "second"):
        out = tmp_path / run
        t0 = time.perf_counter()
        assert main(["verify", "--out", str(out), "--seed", str(SEED)]) == EXIT_OK
        elapsed.append(time.perf_counter() - t0)
        reports.append((out / "report.json").read_bytes())
    capsys.readouterr()
    ok = reports[0] == reports[1] and max(elapsed) < budget
    record(f"[{'PASS' if ok else 'FAIL'}] 11. determinism, byte-identical report.json "
           f"({max(elapsed):.2f}s per run, budget {budget:g}s)")
    assert reports[0] == reports[1]
    assert max(elapsed) < budget
