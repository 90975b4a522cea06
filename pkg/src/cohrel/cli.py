"""Command-line entry point: simulate, fit, summarize, benchmark, ingest.

Every subcommand writes its artifacts plus a ``run_meta.json`` into
``--out-dir``. Exit codes: 0 success, 2 configuration or input error,
3 infeasible generator moments, 4 sampler initialisation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (SCENARIOS, Scenario, load_scenario, monotone_in_n,
                    run_benchmark, simulate_units, solved, write_report)
from .generators import ConvergenceError, GeneratorSpec, NoSolutionError
from .observe import (censoring_table, datasets_from_arrays, observe_units, read_observations,
                      write_observations)
from .sampler import Chain, InitializationError, SamplerConfig, fit
from .structure import StructureSyntaxError, format_structure, load_structure, n_components
from .summary import default_grid, hpd_band, parameter_summary
from .weibull import PriorSpec, mu_upper_bound

log = logging.getLogger("cohrel")

EXIT_CONFIG = 2
EXIT_GENERATOR = 3
EXIT_INIT = 4

# used by ``simulate --structure`` when no scenario supplies generators
DEFAULT_GENERATOR = GeneratorSpec("weibull2", 10.0, 4.0)

CHAIN_HEADER = ["chain", "iter", "beta", "eta", "mu", "log_kernel"]
INGEST_HEADER = ["subject", "status", "age_or_current_age"]


class ConfigError(Exception):
    pass


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_meta(out: Path, command: str, seed, config: dict) -> None:
    meta = {"command": command, "version": __version__, "seed": seed, "config": config}
    (out / "run_meta.json").write_text(_json(meta), encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(float(x), ".17g")


def _sampler_config(args, chains: int) -> SamplerConfig:
    burn = args.burnin
    iters = args.iters if args.iters is not None else burn + 1000 * args.thin
    try:
        return SamplerConfig(iterations=iters, burn_in=burn, thin=args.thin,
                             seed=args.seed, chains=chains)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# simulate

def _simulation_scenario(args) -> Scenario:
    if args.scenario is None:
        if args.structure is None:
            raise ConfigError("simulate needs --scenario or --structure")
        expr = load_structure(args.structure)
        gens = (DEFAULT_GENERATOR,) * n_components(expr)
        return Scenario(0, format_structure(expr), gens)
    scen = load_scenario(args.scenario)
    if args.structure is not None:
        scen = Scenario(scen.id, format_structure(load_structure(args.structure)),
                        scen.generators)
    return scen


def cmd_simulate(args) -> int:
    scen = _simulation_scenario(args)
    if args.n < 1:
        raise ConfigError("--n must be at least 1")
    params = [solved(g) for g in scen.generators]
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    x = simulate_units(scen, args.n, rng)
    lower, upper, t = observe_units(scen.expr, x)
    out = _out_dir(args)
    write_observations(out / "observations.csv", lower, upper)
    truth = {
        "scenario": scen.to_dict(),
        "parameters": [p.to_dict() for p in params],
        "system_lifetimes": [_fmt(v) for v in t],
        "censoring": [r.as_dict() for r in censoring_table(datasets_from_arrays(lower, upper))],
    }
    (out / "truth.json").write_text(_json(truth), encoding="utf-8")
    _write_meta(out, "simulate", args.seed, {
        "scenario": scen.to_dict(), "n": args.n})
    return 0


# ---------------------------------------------------------------------------
# fit

def write_chains(path, chains: list[Chain]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHAIN_HEADER)
        for ch in chains:
            for it, (b, e, m), lk in zip(ch.iterations, ch.draws, ch.log_kernel):
                w.writerow([ch.index, int(it), _fmt(b), _fmt(e), _fmt(m), _fmt(lk)])


def read_chains(path) -> list[np.ndarray]:
    """Draw arrays (n, 3) per chain, in chain order."""
    by_chain: dict[int, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CHAIN_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(CHAIN_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(CHAIN_HEADER):
                raise ConfigError(f"{path}:{line_no}: expected {len(CHAIN_HEADER)} fields")
            try:
                c = int(row[0])
                theta = [float(v) for v in row[2:5]]
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from exc
            if not (theta[0] > 0 and theta[1] > 0 and theta[2] >= 0
                    and all(math.isfinite(v) for v in theta)):
                raise ConfigError(f"{path}:{line_no}: invalid parameters {theta}")
            by_chain.setdefault(c, []).append(theta)
    if not by_chain:
        raise ConfigError(f"{path}: no draws")
    return [np.array(by_chain[c]) for c in sorted(by_chain)]


def cmd_fit(args) -> int:
    data = read_observations(args.input)
    if args.component is None:
        if len(data) != 1:
            raise ConfigError(f"--component required: file holds components {sorted(data)}")
        comp = next(iter(data))
    elif args.component in data:
        comp = args.component
    else:
        raise ConfigError(f"component {args.component} not in {sorted(data)}")
    ds = data[comp]
    config = _sampler_config(args, args.chains)
    prior = PriorSpec(args.prior_b)
    chains = fit(ds, prior, config)
    out = _out_dir(args)
    write_chains(out / "chains.csv", chains)
    rhat = chains[0].rhat
    warn = any(v > config.rhat_threshold for v in rhat.values())
    kinds = ds.kinds()
    diag = {
        "component": comp,
        "n_rows": len(ds),
        "rows": {k: int(np.count_nonzero(kinds == k)) for k in ("exact", "left", "right", "interval")},
        "mu_max": mu_upper_bound(ds),
        "n_retained_per_chain": config.n_retained,
        "acceptance_rate": [c.acceptance_rate for c in chains],
        "rhat": rhat,
        "rhat_warning": warn,
        "posterior": parameter_summary(chains),
    }
    (out / "diagnostics.json").write_text(_json(diag), encoding="utf-8")
    _write_meta(out, "fit", args.seed, {
        "input": str(args.input), "component": comp, "sampler": config.to_dict(),
        "prior_b": prior.b})
    if warn:
        print(f"warning: split R-hat above {config.rhat_threshold}: {rhat}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# summarize

def _reliability_plot(hpd: float) -> str:
    pct = f"{100 * hpd:g}"
    return ("set terminal pngcairo size 800,500\n"
            "set output 'reliability.png'\n"
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set xlabel 't'\n"
            "set ylabel 'R(t)'\n"
            "set yrange [0:1.05]\n"
            f"plot 'curve.csv' using 1:3:4 with filledcurves fs transparent solid 0.3 "
            f"title '{pct}% HPD band', \\\n"
            "     'curve.csv' using 1:2 with lines lw 2 title 'posterior mean'\n")


def cmd_summarize(args) -> int:
    if not 0 < args.hpd < 1:
        raise ConfigError("--hpd must lie in (0, 1)")
    draws = read_chains(args.input)
    pooled = np.concatenate(draws)
    if len(pooled) < 20:
        raise ConfigError(f"need at least 20 draws for an HPD band, got {len(pooled)}")
    if args.t_max is not None:
        grid = np.linspace(0.0, args.t_max, args.grid_points)
    else:
        grid = default_grid(pooled, args.grid_points)
    curve = hpd_band(pooled, grid, args.hpd)
    out = _out_dir(args)
    with open(out / "curve.csv", "w", encoding="utf-8") as fh:
        fh.write("t,mean,hpd_lower,hpd_upper\n")
        for row in curve.rows():
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    summary = {
        "parameters": parameter_summary(pooled),
        "hpd_level": args.hpd,
        "band": "pointwise",
        "n_chains": len(draws),
        "n_draws": int(len(pooled)),
        "grid": {"points": len(grid), "t_min": float(grid[0]), "t_max": float(grid[-1])},
    }
    (out / "summary.json").write_text(_json(summary), encoding="utf-8")
    (out / "plot_reliability.gp").write_text(_reliability_plot(args.hpd), encoding="utf-8")
    _write_meta(out, "summarize", None, {
        "input": str(args.input), "hpd": args.hpd, "grid_points": args.grid_points,
        "t_max": args.t_max})
    return 0


# ---------------------------------------------------------------------------
# benchmark

def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --sizes {text!r}") from exc
    if not sizes or min(sizes) < 1:
        raise ConfigError("--sizes needs positive integers")
    return sizes


def cmd_benchmark(args) -> int:
    if args.scenario is None:
        raise ConfigError("benchmark needs --scenario")
    scen = load_scenario(args.scenario)
    for g in scen.generators:
        solved(g)
    sizes = _parse_sizes(args.sizes)
    config = _sampler_config(args, chains=1)
    report = run_benchmark(scen, sizes, args.replications, args.seed, config,
                           PriorSpec(args.prior_b), censoring_units=args.censoring_units,
                           workers=args.workers)
    out = _out_dir(args)
    write_report(report, out)
    _write_meta(out, "benchmark", args.seed, {
        "scenario": scen.to_dict(), "sizes": sizes, "replications": args.replications,
        "sampler": config.to_dict(), "prior_b": args.prior_b,
        "censoring_units": args.censoring_units})
    for comp, ok in monotone_in_n(report).items():
        print(f"component {comp}: mean MAE {'decreasing' if ok else 'NOT decreasing'} in n")
    return 0


# ---------------------------------------------------------------------------
# ingest

def ingest_row(status: str, age: float) -> tuple[float, float]:
    """Observation bounds for one first-use survey answer."""
    if not (age > 0 and math.isfinite(age)):
        raise ValueError(f"age must be positive, got {age}")
    if status == "used_remembers":
        lo = float(math.floor(age))
        return lo, lo + 1.0
    if status == "never_used":
        return float(age), math.inf
    if status == "used_forgot":
        return 0.0, float(age)
    raise ValueError(f"unknown status {status!r}")


def ingest(path) -> tuple[np.ndarray, np.ndarray]:
    lower, upper = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != INGEST_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(INGEST_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != 3:
                    raise ValueError("expected 3 fields")
                lo, up = ingest_row(row[1].strip(), float(row[2]))
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from exc
            lower.append(lo)
            upper.append(up)
    if not lower:
        raise ConfigError(f"{path}: no records")
    return np.array(lower), np.array(upper)


def cmd_ingest(args) -> int:
    lower, upper = ingest(args.input)
    out = _out_dir(args)
    write_observations(out / "observations.csv", lower[:, None], upper[:, None],
                       [args.component or 1])
    _write_meta(out, "ingest", None, {"input": str(args.input),
                                      "component": args.component or 1})
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cohrel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=False):
        sp.add_argument("--out-dir", default=".", help="directory for artifacts")
        if seed_required:
            sp.add_argument("--seed", type=int, required=True)
        else:
            sp.add_argument("--seed", type=int, default=0)

    def sampler(sp):
        sp.add_argument("--iters", type=int, default=None,
                        help="total iterations (default burn-in + 1000 * thin)")
        sp.add_argument("--burnin", type=int, default=10_000)
        sp.add_argument("--thin", type=int, default=10)
        sp.add_argument("--prior-b", type=float, default=1.0)

    s = sub.add_parser("simulate", help="simulate censored component observations")
    s.add_argument("--structure", help="builtin name, structure file or expression")
    s.add_argument("--scenario", help=f"builtin id {sorted(SCENARIOS)} or scenario JSON")
    s.add_argument("--n", type=int, required=True, help="number of system units")
    common(s, seed_required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="sample the Weibull posterior of one component")
    f.add_argument("--input", required=True, help="observation CSV")
    f.add_argument("--component", type=int)
    f.add_argument("--chains", type=int, default=3)
    sampler(f)
    common(f)
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("summarize", help="reliability curve and HPD band from chains.csv")
    m.add_argument("--input", required=True, help="chain CSV written by fit")
    m.add_argument("--hpd", type=float, default=0.95)
    m.add_argument("--grid-points", type=int, default=200)
    m.add_argument("--t-max", type=float)
    common(m)
    m.set_defaults(func=cmd_summarize)

    b = sub.add_parser("benchmark", help="MAE study over sizes and replications")
    b.add_argument("--scenario", help=f"builtin id {sorted(SCENARIOS)} or scenario JSON")
    b.add_argument("--sizes", default="25,50,100,300,1000")
    b.add_argument("--replications", type=int, default=50)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--censoring-units", type=int, default=100_000)
    sampler(b)
    common(b, seed_required=True)
    b.set_defaults(func=cmd_benchmark)

    g = sub.add_parser("ingest", help="convert first-use survey CSV to observations")
    g.add_argument("--input", required=True)
    g.add_argument("--component", type=int, default=1)
    common(g)
    g.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NoSolutionError, ConvergenceError) as exc:
        print(f"error: infeasible generator: {exc}", file=sys.stderr)
        return EXIT_GENERATOR
    except InitializationError as exc:
        print(f"error: sampler initialisation failed: {exc}", file=sys.stderr)
        return EXIT_INIT
    except (ConfigError, StructureSyntaxError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
