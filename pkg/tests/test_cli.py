import json
import subprocess
import sys

import numpy as np
import pytest

from logconcave import PiecewiseLogLinear
from logconcave.cli import main
from logconcave.simlab import draw, get_distribution


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


@pytest.fixture
def two_points(tmp_path):
    p = tmp_path / "two.txt"
    p.write_text("0\n1\n")
    return p


@pytest.fixture
def gumbel25(tmp_path):
    rng = np.random.default_rng(np.random.SeedSequence(25))
    x = draw(get_distribution("gumbel"), rng, 25)
    p = tmp_path / "gumbel25.txt"
    p.write_text("".join(f"{v!r}\n" for v in x.tolist()))
    return p


def test_fit_two_points(run, tmp_path, two_points):
    out = tmp_path / "fit.json"
    code, _, err = run("fit", two_points, "--out", out)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["knots"] == [0.0, 1.0]
    assert max(abs(v) for v in data["log_values"]) <= 1e-6
    cert = json.loads((tmp_path / "fit.cert.json").read_text())
    assert cert["passed"]
    assert "certified" in err


def test_fit_single_number(run, tmp_path):
    p = tmp_path / "one.txt"
    p.write_text("3.5\n")
    code, _, err = run("fit", p)
    assert code == 1
    assert "need n > 1" in err


def test_fit_missing_file(run, tmp_path):
    code, _, err = run("fit", tmp_path / "nope.txt")
    assert code == 1 and "error" in err


def test_fit_degenerate(run, tmp_path):
    p = tmp_path / "same.txt"
    p.write_text("2\n2\n2\n")
    code, _, err = run("fit", p)
    assert code == 1 and "degenerate" in err


def test_fit_dtable_shape(run, tmp_path, gumbel25):
    table = tmp_path / "d.tsv"
    fit_path = tmp_path / "g.json"
    code, _, _ = run("fit", gumbel25, "--out", fit_path, "--dtable", table)
    assert code == 0
    rows = np.loadtxt(table, skiprows=1, delimiter="\t")
    scale = rows[:, 0].max() - rows[:, 0].min()
    assert np.all(rows[:, 1] <= 1e-7 * scale)
    knots = json.loads((tmp_path / "g.cert.json").read_text())["knots"]
    at_knots = rows[np.isin(rows[:, 0], knots), 1]
    assert at_knots.size == len(knots)
    assert np.all(np.abs(at_knots) <= 1e-7 * scale)


def test_fit_iteration_failure_exit_code(run, monkeypatch, two_points):
    import logconcave.cli as cli
    from logconcave.fitter import FitError

    def boom(*a, **k):
        raise FitError("forced")

    monkeypatch.setattr(cli, "fit", boom)
    code, _, err = run("fit", two_points)
    assert code == 2 and "fit failed" in err


def test_check_pass_and_fail(run, tmp_path, two_points, gumbel25):
    uni = tmp_path / "u.json"
    uni.write_text(json.dumps({"knots": [0.0, 1.0], "log_values": [0.0, 0.0], "normalized": True}))
    code, out, _ = run("check", uni, two_points, "--dtable", tmp_path / "d.tsv")
    assert code == 0 and json.loads(out)["passed"]
    assert (tmp_path / "d.tsv").read_text().startswith("t\tD\n")

    g = tmp_path / "g.json"
    run("fit", gumbel25, "--out", g)
    code, out, _ = run("check", g, gumbel25)
    assert code == 0

    data = json.loads(g.read_text())
    v = np.array(data["log_values"])
    v[0] += 0.1
    bad = PiecewiseLogLinear(data["knots"], v).normalize()
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(bad.to_json())
    code, out, err = run("check", bad_path, gumbel25)
    assert code == 2
    assert json.loads(out)["failed_checks"]
    assert "failed checks" in err


def test_check_support_mismatch(run, tmp_path, gumbel25):
    uni = tmp_path / "u.json"
    uni.write_text(json.dumps({"knots": [0.0, 1.0], "log_values": [0.0, 0.0], "normalized": True}))
    code, _, err = run("check", uni, gumbel25)
    assert code == 1 and "support" in err


def test_sample_deterministic(run, tmp_path, two_points):
    fit_path = tmp_path / "u.json"
    run("fit", two_points, "--out", fit_path)
    a = run("sample", fit_path, "--seed", 7, "--count", 5)
    b = run("sample", fit_path, "--seed", 7, "--count", 5)
    assert a == b
    assert len(a[1].splitlines()) == 5


def test_sample_smoothed(run, tmp_path, two_points):
    fit_path = tmp_path / "u.json"
    run("fit", two_points, "--out", fit_path)
    code, _, err = run("sample", fit_path, "--smoothed")
    assert code == 1 and "--data" in err
    code, out, _ = run("sample", fit_path, "--smoothed", "--data", two_points, "--count", 3)
    assert code == 0 and len(out.splitlines()) == 3
    sm = tmp_path / "s.json"
    run("smooth", fit_path, two_points, "--out", sm)
    code, out2, _ = run("sample", sm, "--smoothed", "--count", 3)
    assert out2 == out


def test_smooth_variance_field(run, tmp_path, two_points):
    fit_path = tmp_path / "u.json"
    run("fit", two_points, "--out", fit_path)
    table = tmp_path / "f.tsv"
    code, out, _ = run("smooth", fit_path, two_points, "--table", table, "--grid", 50)
    assert code == 0
    data = json.loads(out)
    assert data["sigma_hat_sq"] == pytest.approx(0.5, abs=1e-15)
    assert 1 / 12 + data["gamma_sq"] == pytest.approx(data["sigma_hat_sq"], abs=1e-15)
    grid = np.loadtxt(table, skiprows=1)
    assert grid.shape == (50, 2) and np.all(grid[:, 1] > 0)


def test_hazard_grid(run, tmp_path, two_points):
    fit_path = tmp_path / "u.json"
    run("fit", two_points, "--out", fit_path)
    code, out, _ = run("hazard", fit_path, "--from", 0, "--to", 0.99, "--grid", 100)
    assert code == 0
    last = out.strip().splitlines()[-1].split("\t")
    assert float(last[0]) == 0.99
    assert float(last[1]) == pytest.approx(100.0, rel=1e-12)
    code, out, _ = run("hazard", fit_path, "--grid", 10)
    assert code == 0 and len(out.splitlines()) == 11
    code, _, err = run("hazard", fit_path, "--to", 1.0)
    assert code == 1 and "upper support" in err


def test_bad_fit_file(run, tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    code, _, err = run("hazard", p)
    assert code == 1


def test_usage_errors_exit_1(run):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["fit"])
    assert info.value.code == 1


def test_study_outputs(run, tmp_path):
    out = tmp_path / "st"
    code, stdout, _ = run("study", "rate", "--sizes", 50, 100, "--replications", 2, "--seed", 3, "--out", out)
    assert code == 0
    assert (out / "rate_rows.tsv").read_text().count("\n") == 5
    rep = json.loads((out / "rate_report.json").read_text())
    assert rep["slope"]["points"] == 2
    assert "log-log slope" in stdout
    first = (out / "rate_rows.tsv").read_bytes()
    run("study", "rate", "--sizes", 50, 100, "--replications", 2, "--seed", 3, "--out", out)
    assert (out / "rate_rows.tsv").read_bytes() == first


def test_study_quality_exit_code(run, tmp_path, monkeypatch):
    import logconcave.cli as cli
    from logconcave.simlab import StudyQualityError

    def boom(*a, **k):
        raise StudyQualityError("too many failures")

    monkeypatch.setattr(cli, "run_study", boom)
    code, _, err = run("study", "gap", "--sizes", 50, "--replications", 1, "--out", tmp_path)
    assert code == 3 and "too many failures" in err


def test_study_bad_config(run, tmp_path):
    code, _, err = run("study", "gap", "--sizes", 100, 50, "--out", tmp_path)
    assert code == 1


def test_console_script(tmp_path, two_points):
    proc = subprocess.run(
        [sys.executable, "-m", "logconcave.cli", "fit", str(two_points)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["knots"] == [0.0, 1.0]
