import csv
import json

import numpy as np
import pytest

from npglm.cli import main
from npglm.errors import FormatError
from npglm.io import read_draws, write_draws


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "2", "--seed", "3", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    code = main(["fit", str(sim_dir / "data.csv"), "--iterations", "30", "--burnin", "5",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_outputs(sim_dir):
    rows = read_csv(sim_dir / "data.csv")
    assert rows[0] == ["y", "state", "age", "child", "x3"]
    assert len(rows) - 1 == 10_692
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert manifest["n"] == 10_692 and manifest["seed"] == 3 and manifest["scenario"] == 2
    truth = json.loads((sim_dir / "truth.json").read_text())
    assert len(truth["mu"]) == 33


def test_simulate_byte_identical(sim_dir, tmp_path):
    assert main(["simulate", "--scenario", "2", "--seed", "3", "--out", str(tmp_path)]) == 0
    for name in ("data.csv", "truth.json", "manifest.json"):
        assert (tmp_path / name).read_bytes() == (sim_dir / name).read_bytes()


def test_simulate_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NPGLM_SEED", "12")
    assert main(["simulate", "--scenario", "1", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 12


def test_simulate_bad_scenario(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--scenario", "3", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_fit_outputs(fit_dir):
    expected = {"draws.csv", "coefficients.csv", "f0.csv", "f1.csv", "f2.csv",
                "coclustering.csv", "intercepts.csv", "cluster_counts.csv", "trace.csv",
                "diagnostics.csv", "manifest.json"}
    assert expected <= {p.name for p in fit_dir.iterdir()}
    manifest = json.loads((fit_dir / "manifest.json").read_text())
    assert manifest["spec"]["truncation"] == 33
    assert manifest["spec"]["intercepts"] == "dp"
    assert manifest["config"]["iterations"] == 30
    assert len(manifest["data_sha256"]) == 64
    coef = read_csv(fit_dir / "coefficients.csv")
    assert coef[0] == ["name", "mean", "median", "se", "hpd_lo", "hpd_hi"]
    assert [r[0] for r in coef[1:]] == ["beta1", "beta2"]
    trace = read_csv(fit_dir / "trace.csv")
    assert "alpha" in trace[0] and "f1.age25" in trace[0] and len(trace) == 26


def test_fit_defaults_recorded(sim_dir, tmp_path):
    spec = tmp_path / "spec.txt"
    spec.write_text("# short run\niterations = 12\nburnin = 2\n")
    assert main(["fit", str(sim_dir / "data.csv"), "--spec", str(spec), "--out",
                 str(tmp_path / "o")]) == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    s = m["spec"]
    assert (s["truncation"], s["kappa"]) == (33, 0.02)
    assert (s["sigma_shape"], s["sigma_rate"]) == (0.001, 0.001)
    assert (s["alpha_shape"], s["alpha_rate"], s["prior_cov"]) == (1.0, 1.0, None)
    assert m["config"]["iterations"] == 12


def test_fit_gaussian_variant(sim_dir, tmp_path):
    out = tmp_path / "g"
    assert main(["fit", str(sim_dir / "data.csv"), "--iterations", "8", "--burnin", "2",
                 "--intercepts", "gaussian", "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["spec"]["intercepts"] == "gaussian"
    header = read_csv(out / "trace.csv")[0]
    assert "alpha" not in header and not (out / "coclustering.csv").exists()


def test_fit_empty_csv(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    assert main(["fit", str(tmp_path / "empty.csv"), "--out", str(tmp_path / "o")]) == 2


def test_fit_schema_error_names_row(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text(
        "y,state,age,child,area,relig,educ\n1,1,30,0,0,0,0\n1,1,,0,0,0,0\n")
    assert main(["fit", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "o")]) == 2
    assert "row 2" in capsys.readouterr().err


def test_fit_ignores_extra_columns(tmp_path, caplog):
    rng = np.random.default_rng(0)
    lines = ["y,state,age,child,area,relig,educ,weight"]
    for i in range(80):
        lines.append(f"{rng.integers(0, 2)},{i % 4 + 1},{20 + i % 5},{i % 3},{i % 2},"
                     f"{i % 3},{(i // 3) % 3},1.0")
    (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
    code = main(["fit", str(tmp_path / "d.csv"), "--iterations", "6", "--burnin", "1",
                 "--truncation", "4", "--out", str(tmp_path / "o")])
    assert code == 0
    assert "weight" in caplog.text


def test_fit_threads_flag(sim_dir, tmp_path):
    assert main(["fit", str(sim_dir / "data.csv"), "--iterations", "4", "--burnin", "1",
                 "--threads", "1", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["threads"] == 1


def test_fit_aborted_writes_diagnostics(tmp_path):
    lines = ["y,state,age,child,area,relig,educ"]
    # relig and educ always move together -> collinear dummies under a flat prior.
    for i in range(60):
        lines.append(f"{i % 2},1,{20 + i % 3},0,{i % 2},{(i // 2) % 3},{(i // 2) % 3}")
    (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
    code = main(["fit", str(tmp_path / "d.csv"), "--iterations", "5", "--burnin", "1",
                 "--intercepts", "none", "--out", str(tmp_path / "o")])
    assert code == 1
    info = json.loads((tmp_path / "o" / "aborted.json").read_text())
    assert info["iteration"] == 0 and "collinear" in info["error"]
    assert "musl" in info["error"] and "med" in info["error"]


def test_summarize_beta_and_levels(fit_dir, tmp_path):
    draws = fit_dir / "draws.csv"
    assert main(["summarize", str(draws), "--targets", "beta", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "coefficients.csv") == read_csv(fit_dir / "coefficients.csv")
    assert main(["summarize", str(draws), "--targets", "f", "--level", "1", "--out",
                 str(tmp_path)]) == 0
    band = read_csv(tmp_path / "f1.csv")
    assert band[0] == ["grid", "mean", "lo", "hi"] and len(band) == 37
    assert not (tmp_path / "f0.csv").exists()


def test_summarize_metrics(fit_dir, sim_dir, tmp_path):
    assert main(["summarize", str(fit_dir / "draws.csv"), "--targets", "metrics,clusters",
                 "--truth", str(sim_dir / "truth.json"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "metrics.csv")
    assert rows[0] == ["target", "gp-dp.mean", "gp-dp.q95"]
    assert (tmp_path / "coclustering.csv").exists()


def test_summarize_errors(fit_dir, tmp_path):
    assert main(["summarize", str(fit_dir / "draws.csv"), "--targets", "plots"]) == 2
    assert main(["summarize", str(fit_dir / "draws.csv"), "--targets", "metrics"]) == 2
    bad = tmp_path / "bad.csv"
    text = (fit_dir / "draws.csv").read_text().splitlines()
    text[5] = text[5].replace(",", ",oops,", 1)
    bad.write_text("\n".join(text) + "\n")
    assert main(["summarize", str(bad), "--targets", "beta"]) == 2


def test_draws_roundtrip_exact(fit_dir, tmp_path):
    draws = read_draws(fit_dir / "draws.csv")
    write_draws(draws, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == (fit_dir / "draws.csv").read_bytes()
    assert draws.n_draws == 25 and draws.intercept_mode == "dp"


@pytest.mark.parametrize("mutate, match", [
    (lambda lines: ["#npglm-draws 2"] + lines[1:], "line 1: version"),
    (lambda lines: ["garbage"] + lines[1:], "line 1"),
    (lambda lines: lines[:1] + ["#layout {"] + lines[2:], "line 2"),
    (lambda lines: lines[:6] + [lines[6] + ",1.0"] + lines[7:], "line 7"),
    (lambda lines: lines[:8] + [lines[8].replace(",", ",x", 1)] + lines[9:], "line 9"),
    (lambda lines: lines[:-3], "expected 25 draws"),
])
def test_read_draws_reports_failing_record(fit_dir, tmp_path, mutate, match):
    lines = (fit_dir / "draws.csv").read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(mutate(lines)) + "\n")
    with pytest.raises(FormatError, match=match):
        read_draws(bad)
