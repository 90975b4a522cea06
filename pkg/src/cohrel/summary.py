"""Posterior summaries: mean reliability curves, HPD intervals and bands,
parameter means and standard deviations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .sampler import PARAMS, pooled_draws
from .weibull import mean_lifetime, reliability


@dataclass
class ReliabilityCurve:
    grid: np.ndarray
    mean: np.ndarray
    hpd_lower: np.ndarray | None = None
    hpd_upper: np.ndarray | None = None
    level: float | None = None

    def rows(self):
        lo = self.hpd_lower if self.hpd_lower is not None else np.full_like(self.mean, np.nan)
        up = self.hpd_upper if self.hpd_upper is not None else np.full_like(self.mean, np.nan)
        return zip(self.grid, self.mean, lo, up)


def _as_draws(chains_or_draws) -> np.ndarray:
    if isinstance(chains_or_draws, np.ndarray):
        return np.atleast_2d(chains_or_draws)
    return pooled_draws(chains_or_draws)


def reliability_matrix(draws: np.ndarray, grid) -> np.ndarray:
    """R(t | theta_k) for every draw k (rows) and grid point t (columns)."""
    grid = np.asarray(grid, dtype=float)
    beta, eta, mu = (draws[:, i, None] for i in range(3))
    return reliability(grid[None, :], (beta, eta, mu))


def mean_reliability(chains, grid) -> ReliabilityCurve:
    """Posterior mean reliability: the average of R(t | theta_k) over draws."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    draws = _as_draws(chains)
    return ReliabilityCurve(grid, reliability_matrix(draws, grid).mean(axis=0))


def hpd_interval(samples, level: float = 0.95) -> tuple[float, float]:
    """Shortest interval covering ceil(level * n) of the sorted samples.

    Ties in width go to the lowest start.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n < 20:
        raise ValueError(f"need at least 20 samples for an HPD interval, got {n}")
    k = math.ceil(level * n - 1e-9)
    widths = x[k - 1:] - x[:n - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def hpd_band(chains, grid, level: float = 0.95) -> ReliabilityCurve:
    """Posterior mean curve with a pointwise HPD band of R(t | theta)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    draws = _as_draws(chains)
    r = reliability_matrix(draws, grid)
    bounds = np.array([hpd_interval(r[:, j], level) for j in range(len(grid))])
    return ReliabilityCurve(grid, r.mean(axis=0), bounds[:, 0], bounds[:, 1], level)


def parameter_summary(chains) -> dict:
    """Posterior mean and sample SD (n - 1) of beta, eta, mu and E[X | theta]."""
    draws = _as_draws(chains)
    cols = dict(zip(PARAMS, draws.T))
    cols["mean_lifetime"] = mean_lifetime(draws.T)
    ddof = 1 if len(draws) > 1 else 0
    return {k: {"mean": float(np.mean(v)), "sd": float(np.std(v, ddof=ddof))}
            for k, v in cols.items()}


def lifetime_sd(theta):
    beta, eta, _ = theta
    beta = np.asarray(beta, dtype=float)
    g1 = special.gamma(1 + 1 / beta)
    return eta * np.sqrt(special.gamma(1 + 2 / beta) - g1 * g1)


def default_grid(chains, n_points: int = 200) -> np.ndarray:
    """Points from 0 to the 0.999 quantile of E[X | theta] plus three lifetime SDs.

    The SD is the posterior mean of SD[X | theta], so the grid reaches the
    region where the reliability curve has decayed.
    """
    draws = _as_draws(chains)
    ml = mean_lifetime(draws.T)
    top = float(np.quantile(ml, 0.999)) + 3 * float(np.mean(lifetime_sd(draws.T)))
    return np.linspace(0.0, top, n_points)
