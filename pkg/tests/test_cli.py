import csv

import numpy as np
import pytest

from nitsche_dd.cli import main
from nitsche_dd.mesh import read_mesh_dump


def test_study_writes_csv(tmp_path, capsys):
    out = tmp_path / "report.csv"
    code = main(["study", "--regime", "unfitted", "--mu2", "1,10", "--levels", "2", "--out", str(out),
                 "--workers", "1"])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert {r["mu2"] for r in rows} == {"1.0000000000000000e+00", "1.0000000000000000e+01"}
    assert "least-squares" in capsys.readouterr().out


def test_fitted_ratio_parsing(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["study", "--mu2", "10", "--ratio", "3/5", "--levels", "2", "--flux-jump", "off",
                 "--out", str(out), "--workers", "1"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert float(rows[0]["ratio_or_offset"]) == pytest.approx(0.6)


def test_study_failure_exit_code(tmp_path, monkeypatch):
    from nitsche_dd import study

    monkeypatch.setattr(study, "solve_problem", lambda p, t: 1 / 0)
    code = main(["study", "--regime", "unfitted", "--mu2", "1", "--levels", "2",
                 "--out", str(tmp_path / "r.csv"), "--workers", "1"])
    assert code == 1


def test_bad_arguments():
    with pytest.raises(SystemExit):
        main(["study", "--flux-jump", "maybe"])
    with pytest.raises(SystemExit):
        main(["study", "--k", "3"])


def test_invalid_config_reports_error(tmp_path, capsys):
    assert main(["study", "--levels", "1", "--out", str(tmp_path / "r.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_solve_with_dumps(tmp_path, capsys):
    mesh, matrix = tmp_path / "mesh.txt", tmp_path / "A.txt"
    code = main(["solve", "--regime", "unfitted", "--mu2", "10", "--level", "0",
                 "--dump-mesh", str(mesh), "--dump-matrix", str(matrix)])
    assert code == 0
    out = capsys.readouterr().out
    assert "err_l2=" in out and "residual=" in out
    v, t = read_mesh_dump(mesh)
    assert v.shape == (100, 2) and t.shape == (162, 3)
    entries = np.loadtxt(matrix)
    assert entries.shape[1] == 3
    assert entries[:, :2].min() == 0


def test_solve_fitted_dumps_both_meshes(tmp_path):
    mesh = tmp_path / "mesh.txt"
    assert main(["solve", "--ratio", "3/5", "--dump-mesh", str(mesh)]) == 0
    assert (tmp_path / "mesh1.txt").exists() and (tmp_path / "mesh2.txt").exists()
