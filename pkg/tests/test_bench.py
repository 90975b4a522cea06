import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cohrel import bench
from cohrel.bench import (SCENARIOS, Scenario, load_scenario, mae, mae_grid, monotone_in_n,
                          run_benchmark, run_replication, solved, true_reliability,
                          write_report)
from cohrel.generators import GeneratorSpec, quantile, sample
from cohrel.sampler import InitializationError, SamplerConfig
from cohrel.weibull import PriorSpec

TINY = SamplerConfig(iterations=1200, burn_in=1000, thin=10, chains=1, adapt_start=200)


def test_mae_examples():
    g = np.linspace(0, 10, 11)
    truth = np.exp(-g / 3)
    assert mae(truth, truth) == 0.0
    assert mae(truth + 0.1, truth) == pytest.approx(0.1, abs=1e-15)


def test_mae_closed_form():
    eta, top, n = 4.0, 12.0, 200
    g = np.linspace(0, top, n)
    r = math.exp(-top / (eta * (n - 1)))
    expected = 1 - (1 - r**n) / (n * (1 - r))
    got = mae(lambda t: np.ones_like(t), lambda t: np.exp(-t / eta), g)
    assert got == pytest.approx(expected, abs=1e-12)


def test_mae_empty_grid():
    with pytest.raises(ValueError):
        mae(lambda t: t, lambda t: t, [])


@given(st.integers(0, 2**32 - 1))
def test_mae_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(0, 20, 50)
    est = lambda t: np.exp(-t / 5)
    tru = lambda t: np.exp(-(t / 6) ** 2)
    assert mae(est, tru, g) == pytest.approx(mae(est, tru, rng.permutation(g)), rel=1e-13)


@pytest.mark.parametrize("sid", sorted(SCENARIOS))
def test_true_reliability_at_zero(sid):
    for g in SCENARIOS[sid].generators:
        assert true_reliability(g, 0.0) == 1.0


def test_true_reliability_weibull_at_eta():
    spec = GeneratorSpec("weibull2", 15, 8)
    assert true_reliability(spec, solved(spec)["eta"]) == pytest.approx(math.exp(-1))


def test_true_reliability_gamma_monte_carlo():
    spec = GeneratorSpec("gamma", 18, 12)
    x = sample(solved(spec), np.random.default_rng(9), 10**6)
    assert abs(np.mean(x > 18) - true_reliability(spec, 18.0)) < 0.002


def test_mae_grid_reaches_quantile():
    spec = GeneratorSpec("lognormal", 20, 10)
    g = mae_grid(spec)
    assert len(g) == 200 and g[0] == 0.0
    assert g[-1] == pytest.approx(float(quantile(solved(spec), 0.995)))


def test_scenarios_well_formed():
    for sid, s in SCENARIOS.items():
        assert s.id == sid
        assert len(s.generators) == (3 if sid <= 4 else 5)
        for g in s.generators:
            solved(g)


def test_scenario_json_roundtrip(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(SCENARIOS[2].to_dict()))
    back = load_scenario(str(p))
    assert back.expr == SCENARIOS[2].expr and back.generators == SCENARIOS[2].generators
    assert load_scenario("5") is SCENARIOS[5]


def test_scenario_component_mismatch():
    with pytest.raises(ValueError):
        Scenario(9, "bridge", (GeneratorSpec("gamma", 1, 1),) * 3)


def test_with_fixed_overrides():
    s = SCENARIOS[6].with_fixed(weibull3_mu=0.5, modified_lam=0.2)
    assert s.generators[4].fixed == 0.5 and s.generators[1].fixed == 0.2


def test_replication_reproducible_in_isolation():
    a = run_replication(SCENARIOS[1], 25, 1, 7, TINY, PriorSpec())
    b = run_replication(SCENARIOS[1], 25, 1, 7, TINY, PriorSpec())
    assert [x[0] for x in a] == [x[0] for x in b]
    c = run_replication(SCENARIOS[1], 25, 2, 7, TINY, PriorSpec())
    assert [x[0] for x in a] != [x[0] for x in c]


def test_benchmark_deterministic_json(tmp_path):
    kw = dict(sizes=[25], replications=2, master_seed=3, config=TINY, censoring_units=2000)
    r1 = run_benchmark(1, **kw)
    r2 = run_benchmark(1, **kw)
    assert r1.to_json() == r2.to_json()
    res = r1.summary(25, 1)
    assert len(res["mae"]) == 2 and res["n_failed"] == 0
    assert all(0 <= v <= 1 for r in r1.results for v in r["mae"])
    assert {c["component"] for c in r1.censoring} == {1, 2, 3}
    assert "reference" in r1.censoring[0]
    write_report(r1, tmp_path)
    for name in ("report.json", "mae_curves.csv", "mae_summary.dat", "plot_mae.gp"):
        assert (tmp_path / name).stat().st_size > 0
    assert json.loads((tmp_path / "report.json").read_text())["replications"] == 2


def test_initialization_failures_counted(monkeypatch):
    def boom(*a, **k):
        raise InitializationError("no start")

    monkeypatch.setattr(bench, "fit", boom)
    r = run_benchmark(1, sizes=[25], replications=2, config=TINY, censoring_units=0)
    row = r.summary(25, 2)
    assert row["n_failed"] == 2 and row["mae_mean"] is None and row["mae"] == [None, None]


def test_monotone_in_n():
    r = bench.BenchReport({}, [25, 100], 1, 0, {}, 1.0)
    r.results = [{"n": 25, "component": 1, "mae_mean": 0.2}, {"n": 100, "component": 1, "mae_mean": 0.1},
                 {"n": 25, "component": 2, "mae_mean": 0.1}, {"n": 100, "component": 2, "mae_mean": 0.1}]
    assert monotone_in_n(r) == {1: True, 2: False}
