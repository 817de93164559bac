import subprocess
import sys

import pytest

from conftest import FIXTURES
from plxrank import io
from plxrank.cli import main


def test_gen_fit_eval_pipeline(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen", "--m", "10", "--d", "10", "--n", "500", "--seed", "7", "--out", str(data)]) == 0
    f, p = str(data / "features.txt"), str(data / "profile.txt")
    est = str(tmp_path / "est.txt")
    assert main(["fit", "--features", f, "--profile", p, "--out", est, "--delta", "0.05", "--report", str(tmp_path / "fit.csv")]) == 0
    assert main(["eval", "--features", f, "--profile", p, "--params", est, "--truth", str(data / "truth.txt")]) == 0
    out = capsys.readouterr().out
    assert "mle converged = 1" in out and "eval mse = " in out
    mse = float(out.split("eval mse = ")[1].split()[0])
    assert mse < 0.05
    rows = io.read_report(tmp_path / "fit.csv")
    assert {r["metric"] for r in rows} >= {"log_likelihood", "lambda1", "rmse_bound_approx"}


def test_other_fitters_and_bound(tmp_path, capsys):
    data = tmp_path / "data"
    main(["gen", "--m", "5", "--d", "3", "--n", "200", "--k", "2", "--seed", "1", "--out", str(data)])
    f, p = str(data / "features.txt"), str(data / "profile.txt")
    for method in ("em", "direct"):
        assert main(["fit-mixture", "--features", f, "--profile", p, "--method", method, "--iterations", "5", "--out", str(tmp_path / f"{method}.txt")]) == 0
        assert io.load_params(tmp_path / f"{method}.txt").k == 2
    assert main(["fit-rbcml", "--features", f, "--profile", p, "--family", "probit", "--out", str(tmp_path / "rb.txt")]) == 0
    main(["fit", "--features", f, "--profile", p, "--out", str(tmp_path / "one.txt")])
    assert main(["bound", "--features", f, "--profile", p, "--params", str(tmp_path / "one.txt"), "--eps", "0.1"]) == 0
    assert "sample_complexity" in capsys.readouterr().out


def test_check_id_cars_fixture(capsys):
    y, z = str(FIXTURES / "cars_Y.txt"), str(FIXTURES / "cars_Z.txt")
    assert main(["check-id", "--y", y, "--z", z, "--profile", str(FIXTURES / "cars_profile.txt")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "NotIdentifiable"
    assert main(["check-id", "--features", str(FIXTURES / "cars_features.txt")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "NotIdentifiable"


def test_errors_give_one_line_and_nonzero_exit(tmp_path, capsys):
    bad = tmp_path / "p.txt"
    bad.write_text("kind=top-l m=2\n1: 1\n5: 2\n")
    code = main(["check-id", "--features", str(FIXTURES / "cars_features.txt"), "--profile", str(bad)])
    err = capsys.readouterr().err.strip().splitlines()
    assert code != 0 and len(err) == 1 and err[0].startswith("error:") and ":3:" in err[0]
    assert main(["fit", "--features", str(tmp_path / "missing.txt"), "--profile", str(bad), "--out", "x"]) != 0


def test_sweep_writes_deterministic_csv(tmp_path):
    args = ["sweep", "--m", "4", "--d", "2", "--n", "30,60", "--trials", "3", "--estimator", "mle,rbcml-uniform"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv"), "--per-trial"])
    main(args + ["--out", str(tmp_path / "c.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()
    rows = io.read_report(tmp_path / "b.csv")
    assert len(rows) == 2 * 3 * 2 + 2 * 2


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "--help"])
    assert "n,trial,estimator,metric,value,ci_halfwidth,seconds" in capsys.readouterr().out.replace("\n", "")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "plxrank", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "check-id" in res.stdout
