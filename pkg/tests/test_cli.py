import csv
import io
import json

import pytest

from gaussmix.calibration import BOUND_COLUMNS
from gaussmix.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_calibrate(capsys):
    code, out = run(capsys, "calibrate", "--eps", "1,2", "--k", "16")
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert code == 0 and len(rows) == 2
    assert float(rows[0]["gamma"]) > float(rows[1]["gamma"])


def test_compare_bounds(capsys, tmp_path):
    p = tmp_path / "b.csv"
    code, _ = run(capsys, "compare-bounds", "--points", "5", "--out", str(p))
    lines = p.read_text().splitlines()
    assert code == 0 and lines[0] == ",".join(BOUND_COLUMNS) and len(lines) == 6


def test_audit(capsys):
    code, out = run(capsys, "audit", "--d", "3", "--k", "2", "--gamma", "7")
    assert code == 0 and "max abs error" in out.err


@pytest.mark.parametrize("method", ["LinearMixing", "AdaSSP", "Sheffet", "SheffetNewAnalysis", "Ridge"])
def test_linreg(capsys, method):
    code, out = run(capsys, "linreg", "--method", method, "--n", "300", "--d", "6", "--eps", "2")
    res = json.loads(out.out)
    assert code == 0 and res["method"] == method
    assert {"method", "eps", "delta", "k", "gamma_used", "branch", "train_loss", "test_mse",
            "seed"} <= set(res)


@pytest.mark.parametrize("method", ["LogisticMixing", "ObjectivePerturbation"])
def test_logreg(capsys, method):
    code, out = run(capsys, "logreg", "--method", method, "--n", "500", "--d", "4")
    res = json.loads(out.out)
    assert code == 0 and 0 <= res["test_accuracy"] <= 1
    if method == "LogisticMixing":
        assert {"Q", "b0", "b1", "b2", "q_bound", "surrogate_violations"} <= set(res)


def test_synth_then_linreg_from_csv(capsys, tmp_path):
    p = tmp_path / "d.csv"
    assert main(["synth", "--kind", "uniform", "--n", "200", "--d", "3", "--out", str(p)]) == 0
    code, out = run(capsys, "linreg", "--data", str(p), "--method", "Ridge")
    assert code == 0 and json.loads(out.out)["test_mse"] < 0.1


def test_bench_and_seed_env(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("methods = AdaSSP\neps_grid = 1\ntrials = 2\nn = 200\nd = 4\n")
    code, out = run(capsys, "bench", "--config", str(cfg))
    assert code == 0 and out.out.splitlines()[0].startswith("method,eps,mean")
    monkeypatch.setenv("GAUSSMIX_SEED", "42")
    _, out = run(capsys, "bench", "--config", str(cfg), "--format", "json")
    assert json.loads(out.out)[0]["seed"] == 42


def test_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,oops\n")
    code, out = run(capsys, "linreg", "--data", str(bad))
    assert code == 2 and "oops" in out.err
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(capsys, "bench", "--config", str(cfg))[0] == 2
