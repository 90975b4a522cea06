import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from cohrel import cli
from cohrel.observe import read_observations
from cohrel.sampler import Chain


def run(*argv):
    return cli.main([str(a) for a in argv])


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_simulate_series_single_unit(tmp_path):
    assert run("simulate", "--structure", "series(c1,c2)", "--n", 1, "--seed", 4,
               "--out-dir", tmp_path) == 0
    data = read_observations(tmp_path / "observations.csv")
    kinds = sorted(k for ds in data.values() for k in ds.kinds())
    assert kinds == ["exact", "right"]
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert len(truth["system_lifetimes"]) == 1
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    assert meta["seed"] == 4 and meta["command"] == "simulate"


def test_simulate_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--scenario", 5, "--n", 40, "--seed", 11,
                   "--out-dir", tmp_path / d) == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_simulate_truth_matches_observations(tmp_path):
    run("simulate", "--scenario", 1, "--n", 30, "--seed", 2, "--out-dir", tmp_path)
    truth = json.loads((tmp_path / "truth.json").read_text())
    t = np.array([float(v) for v in truth["system_lifetimes"]])
    data = read_observations(tmp_path / "observations.csv")
    lo = np.column_stack([d.lower for d in data.values()])
    up = np.column_stack([d.upper for d in data.values()])
    np.testing.assert_array_equal(np.where(lo == up, lo, np.inf).min(axis=1), t)


def test_simulate_requires_seed(tmp_path):
    with pytest.raises(SystemExit) as info:
        run("simulate", "--scenario", 1, "--n", 3, "--out-dir", tmp_path)
    assert info.value.code == 2


def test_simulate_config_errors(tmp_path):
    assert run("simulate", "--structure", "series(c1", "--n", 3, "--seed", 1,
               "--out-dir", tmp_path) == 2
    assert run("simulate", "--n", 3, "--seed", 1, "--out-dir", tmp_path) == 2
    assert run("simulate", "--scenario", 1, "--n", 0, "--seed", 1, "--out-dir", tmp_path) == 2


def test_simulate_infeasible_generator(tmp_path):
    scen = {"structure": "series(c1,c2)",
            "generators": [{"family": "weibull3", "mean": 1.0, "variance": 1.0, "fixed": 2.0},
                           {"family": "gamma", "mean": 1.0, "variance": 1.0}]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(scen))
    assert run("simulate", "--scenario", p, "--n", 3, "--seed", 1, "--out-dir", tmp_path) == 3


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    d = tmp_path_factory.mktemp("fit")
    run("simulate", "--scenario", 1, "--n", 80, "--seed", 5, "--out-dir", d / "sim")
    assert run("fit", "--input", d / "sim" / "observations.csv", "--component", 2,
               "--seed", 1, "--out-dir", d / "fit") == 0
    return d


def test_fit_defaults_retain_1000_per_chain(fitted):
    with open(fitted / "fit" / "chains.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["chain", "iter", "beta", "eta", "mu", "log_kernel"]
    per_chain = {c: sum(r["chain"] == c for r in rows) for c in {"0", "1", "2"}}
    assert per_chain == {"0": 1000, "1": 1000, "2": 1000}
    assert rows[0]["iter"] == "10010" and rows[999]["iter"] == "20000"
    diag = json.loads((fitted / "fit" / "diagnostics.json").read_text())
    assert diag["component"] == 2 and set(diag["rhat"]) == {"beta", "eta", "mu"}
    meta = json.loads((fitted / "fit" / "run_meta.json").read_text())
    assert meta["config"]["sampler"]["thin"] == 10


def test_fit_thin_preset(tmp_path, fitted):
    assert run("fit", "--input", fitted / "sim" / "observations.csv", "--component", 1,
               "--thin", 30, "--chains", 1, "--out-dir", tmp_path) == 0
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["n_retained_per_chain"] == 1000
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    assert meta["config"]["sampler"]["iterations"] == 40_000


def test_fit_missing_component(tmp_path, fitted):
    assert run("fit", "--input", fitted / "sim" / "observations.csv", "--component", 9,
               "--out-dir", tmp_path) == 2
    assert run("fit", "--input", fitted / "sim" / "observations.csv",
               "--out-dir", tmp_path) == 2


def test_fit_bad_sampler_config(tmp_path, fitted):
    assert run("fit", "--input", fitted / "sim" / "observations.csv", "--component", 1,
               "--iters", 100, "--burnin", 200, "--out-dir", tmp_path) == 2


def test_fit_init_failure(tmp_path):
    p = tmp_path / "obs.csv"
    p.write_text("unit,component,lower,upper\n1,1,3,inf\n2,1,4,inf\n")
    assert run("fit", "--input", p, "--out-dir", tmp_path / "o") == 4


def test_fit_rhat_warning_keeps_exit_zero(tmp_path, fitted, monkeypatch, capsys):
    def fake_fit(data, prior, config):
        draws = np.tile([2.0, 5.0, 1.0], (config.n_retained, 1))
        ch = Chain(draws, np.zeros(len(draws)), np.arange(len(draws)), 0.3, 0)
        ch.rhat = {"beta": 1.3, "eta": 1.0, "mu": 1.0}
        return [ch]

    monkeypatch.setattr(cli, "fit", fake_fit)
    assert run("fit", "--input", fitted / "sim" / "observations.csv", "--component", 1,
               "--out-dir", tmp_path) == 0
    assert json.loads((tmp_path / "diagnostics.json").read_text())["rhat_warning"] is True
    assert "R-hat" in capsys.readouterr().err


def test_summarize(fitted):
    out = fitted / "summ"
    assert run("summarize", "--input", fitted / "fit" / "chains.csv", "--hpd", 0.9,
               "--out-dir", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["hpd_level"] == 0.9 and summary["band"] == "pointwise"
    assert summary["n_draws"] == 3000
    assert set(summary["parameters"]) == {"beta", "eta", "mu", "mean_lifetime"}
    with open(out / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "mean", "hpd_lower", "hpd_upper"] and len(rows) == 200
    assert all(0 <= float(r["hpd_lower"]) <= float(r["hpd_upper"]) <= 1 for r in rows)
    assert (out / "plot_reliability.gp").exists()


def test_summarize_constant_chain(tmp_path):
    p = tmp_path / "chains.csv"
    p.write_text("chain,iter,beta,eta,mu,log_kernel\n"
                 + "".join(f"0,{i},2,5,1,-3\n" for i in range(1, 41)))
    assert run("summarize", "--input", p, "--out-dir", tmp_path / "o") == 0
    with open(tmp_path / "o" / "curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["hpd_lower"] == r["hpd_upper"] for r in rows)


@pytest.mark.parametrize("body", ["chain,iter,beta\n0,1,2\n",
                                  "chain,iter,beta,eta,mu,log_kernel\n0,1,x,5,1,0\n",
                                  "chain,iter,beta,eta,mu,log_kernel\n0,1,-2,5,1,0\n",
                                  "chain,iter,beta,eta,mu,log_kernel\n"])
def test_summarize_malformed(tmp_path, body):
    p = tmp_path / "chains.csv"
    p.write_text(body)
    assert run("summarize", "--input", p, "--out-dir", tmp_path / "o") == 2


def test_summarize_missing_file(tmp_path):
    assert run("summarize", "--input", tmp_path / "nope.csv", "--out-dir", tmp_path) == 2


@pytest.mark.parametrize("status, age, expected", [("used_remembers", 13, (13, 14)),
                                                   ("used_remembers", 13.7, (13, 14)),
                                                   ("never_used", 17, (17, math.inf)),
                                                   ("used_forgot", 16, (0, 16))])
def test_ingest_rows(status, age, expected):
    assert cli.ingest_row(status, age) == expected


def test_ingest_file(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("subject,status,age_or_current_age\n1,used_remembers,13\n"
                   "2,never_used,17\n3,used_forgot,16\n")
    assert run("ingest", "--input", raw, "--out-dir", tmp_path / "o") == 0
    ds = read_observations(tmp_path / "o" / "observations.csv")[1]
    assert list(ds) == [(13, 14), (17, math.inf), (0, 16)]


@pytest.mark.parametrize("row", ["1,used_sometimes,13", "1,never_used,0", "1,never_used,-3",
                                 "1,never_used,abc"])
def test_ingest_errors(tmp_path, row):
    raw = tmp_path / "raw.csv"
    raw.write_text("subject,status,age_or_current_age\n" + row + "\n")
    assert run("ingest", "--input", raw, "--out-dir", tmp_path / "o") == 2


def test_benchmark_command(tmp_path):
    args = ("benchmark", "--scenario", 1, "--sizes", "25", "--replications", 1, "--seed", 2,
            "--iters", 1200, "--burnin", 1000, "--censoring-units", 1000)
    assert run(*args, "--out-dir", tmp_path / "a") == 0
    assert run(*args, "--out-dir", tmp_path / "b") == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["sizes"] == [25] and report["sampler"]["iterations"] == 1200
    assert run("benchmark", "--scenario", 1, "--sizes", "x", "--seed", 1,
               "--out-dir", tmp_path) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cohrel", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("cohrel ")
