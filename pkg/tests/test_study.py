import csv
from fractions import Fraction
import math
from pathlib import Path

import numpy as np
import pytest

from nitsche_dd import study
from nitsche_dd.study import (CSV_HEADER, ConvergenceReport, StudyConfig, emit_csv, lsq_rate, pairwise_rate,
                              run_case, run_study)

DATA = Path(__file__).parent / "data"
GOLDEN_CONFIG = StudyConfig(mu2s=(10.0,), ratios=(Fraction(3, 5),), levels=2)


def test_pairwise_rate_example():
    assert pairwise_rate(1e-1, 2.5e-2, 1 / 10, 1 / 20) == pytest.approx(2.0, rel=1e-14)


def test_lsq_rate_on_power_law():
    h = np.array([1 / 8, 1 / 16, 1 / 32, 1 / 64])
    assert lsq_rate(h, 3.0 * h**1.5) == pytest.approx(1.5, rel=1e-12)
    assert math.isnan(lsq_rate(h[:1], h[:1]))


def test_config_validation():
    with pytest.raises(ValueError):
        StudyConfig(levels=1)
    with pytest.raises(ValueError):
        StudyConfig(ratios=(Fraction(0),))
    with pytest.raises(ValueError):
        StudyConfig(regime="mortar")
    with pytest.raises(ValueError):
        StudyConfig(k=3)


def test_mesh_ladders():
    cfg = StudyConfig()
    assert cfg.fitted_counts(Fraction(1), 0) == (8, 8)
    assert cfg.fitted_counts(Fraction(1, 5), 4) == (640, 128)
    assert cfg.fitted_counts(Fraction(3, 5), 1) == (27, 16)
    assert cfg.fitted_counts(Fraction(2), 0) == (8, 16)
    assert [cfg.unfitted_n(level) for level in range(4)] == [9, 17, 33, 65]


def test_fitted_mesh_ratio():
    cfg = StudyConfig(ratios=(Fraction(3, 10),))
    problem = study.make_problem(cfg, 10.0, Fraction(3, 10), 1)
    assert problem.space1.mesh.h / problem.space2.mesh.h == pytest.approx(0.3, rel=0.03)
    assert problem.h == pytest.approx(problem.space2.mesh.h)


def test_two_level_report(tmp_path):
    report = run_study(GOLDEN_CONFIG, workers=1)
    assert report.ok
    assert [r.level for r in report.rows] == [0, 1]
    assert report.rows[0].h > report.rows[1].h
    assert all(r.residual <= 1e-10 for r in report.rows)
    path = emit_csv(report, tmp_path / "r.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 3
    assert rows[1][-3:] == ["", "", ""]
    assert all(cell for cell in rows[2][-3:])
    assert "e" in rows[1][CSV_HEADER.index("err_l2")]


def test_golden_csv(tmp_path):
    path = emit_csv(run_study(GOLDEN_CONFIG, workers=1), tmp_path / "golden.csv")
    assert path.read_bytes() == (DATA / "golden_fitted.csv").read_bytes()


def test_parallel_matches_serial():
    cfg = StudyConfig(regime="unfitted", mu2s=(1.0, 100.0), offsets=(0.0, 0.01), levels=2)
    serial = run_study(cfg, workers=1)
    parallel = run_study(cfg, workers=2)
    assert [(r.key, r.level, r.errors) for r in serial.rows] == [(r.key, r.level, r.errors) for r in parallel.rows]


def test_threads_env(monkeypatch):
    monkeypatch.setenv(study.THREADS_ENV, "3")
    assert study._workers() == 3
    monkeypatch.setenv(study.THREADS_ENV, "0")
    assert study._workers() == 1


def test_empty_report_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_csv(ConvergenceReport(GOLDEN_CONFIG, []), tmp_path / "x.csv")


def test_unwritable_path(tmp_path):
    report = run_study(StudyConfig(regime="unfitted", mu2s=(1.0,), levels=2), workers=1)
    with pytest.raises(OSError):
        emit_csv(report, tmp_path / "missing" / "x.csv")


def test_failed_row_is_marked(monkeypatch, tmp_path):
    def boom(problem, tol):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(study, "solve_problem", boom)
    report = run_study(GOLDEN_CONFIG, workers=1)
    assert not report.ok
    assert all(r.failed and "exploded" in r.message for r in report.rows)
    rows = list(csv.reader(emit_csv(report, tmp_path / "f.csv").open()))
    assert rows[1][CSV_HEADER.index("err_l2")] == "nan"
    assert rows[2][CSV_HEADER.index("rate_l2")] == ""


def test_single_failure_keeps_other_rows(monkeypatch):
    real = study.solve_problem

    def flaky(problem, tol):
        if problem.h < 0.1:
            raise RuntimeError("too fine")
        return real(problem, tol)

    monkeypatch.setattr(study, "solve_problem", flaky)
    report = run_study(GOLDEN_CONFIG, workers=1)
    assert [r.failed for r in report.rows] == [False, True]
    assert math.isfinite(report.rows[0].error("l2"))


def test_flux_jump_source_matters():
    rates = {}
    for on in (True, False):
        cfg = StudyConfig(mu2s=(1000.0,), ratios=(Fraction(1),), levels=3, flux_jump=on)
        rates[on] = run_study(cfg, workers=1).lsq_rates(1000.0, Fraction(1))["l2"]
    assert rates[True] > 1.8
    assert rates[False] < rates[True] - 0.5


def test_jump_norm_decreases():
    cfg = StudyConfig(mu2s=(10.0,), ratios=(Fraction(3, 5),), levels=4)
    jumps = [r.error("jump") for r in run_study(cfg, workers=1).rows]
    assert jumps[-3] > jumps[-2] > jumps[-1]


def test_run_case_records_assumption_flag():
    cfg = StudyConfig(mu2s=(1.0,), ratios=(Fraction(1, 5),), levels=2)
    assert not run_case(cfg, 1.0, Fraction(1, 5), 0).assumption_holds
    assert run_case(cfg, 1000.0, Fraction(1, 5), 0).assumption_holds


def test_summary_lists_every_sweep():
    cfg = StudyConfig(regime="unfitted", mu2s=(1.0, 10.0), levels=2)
    text = run_study(cfg, workers=1).summary()
    assert len(text.splitlines()) == 3
