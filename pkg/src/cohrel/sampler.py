"""Adaptive Metropolis sampling of the Weibull posterior.

The random walk runs on ``z = (log beta, log eta, logit(mu / mu_max))`` so
every proposal respects beta, eta > 0 and 0 < mu < mu_max. After
``adapt_start`` iterations the Gaussian proposal covariance becomes
``scale * (Cov(z_0..z_{t-1}) + jitter * I)``, updated recursively and never
frozen (Haario, Saksman and Tamminen, 2001).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .generators import weibull_shape_from_cv, NoSolutionError
from .observe import ComponentDataset
from .weibull import PreparedData, PriorSpec, WeibullParams

log = logging.getLogger(__name__)

PARAMS = ("beta", "eta", "mu")


class InitializationError(RuntimeError):
    pass


@dataclass
class SamplerConfig:
    iterations: int = 20_000
    burn_in: int = 10_000
    thin: int = 10
    adapt_start: int = 1_000
    jitter: float = 1e-6
    scale: float = 2.38**2 / 3
    seed: int = 0
    chains: int = 3
    init_spread: float = 0.3
    rhat_threshold: float = 1.05

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if (self.iterations - self.burn_in) % self.thin:
            raise ValueError("iterations - burn_in must be a multiple of thin")
        if self.chains < 1:
            raise ValueError("need at least one chain")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    @classmethod
    def application(cls, **kw):
        """Preset for the interval-censored application: thinning 30."""
        kw.setdefault("thin", 30)
        kw.setdefault("burn_in", 10_000)
        kw.setdefault("iterations", kw["burn_in"] + 1_000 * kw["thin"])
        return cls(**kw)

    def to_dict(self):
        return asdict(self)


@dataclass
class Chain:
    draws: np.ndarray          # (n_p, 3) columns beta, eta, mu
    log_kernel: np.ndarray     # (n_p,)
    iterations: np.ndarray     # (n_p,) 1-based iteration index of each draw
    acceptance_rate: float     # post burn-in
    seed: int
    index: int = 0
    rhat: dict = field(default_factory=dict)

    @property
    def beta(self):
        return self.draws[:, 0]

    @property
    def eta(self):
        return self.draws[:, 1]

    @property
    def mu(self):
        return self.draws[:, 2]

    @property
    def converged(self) -> bool:
        return all(v < 1.05 for v in self.rhat.values()) if self.rhat else True


def pooled_draws(chains) -> np.ndarray:
    """All retained draws of all chains stacked in chain order."""
    if not chains:
        raise ValueError("no chains")
    draws = np.concatenate([c.draws for c in chains])
    if len(draws) == 0:
        raise ValueError("no retained draws")
    return draws


# ---------------------------------------------------------------------------
# generic adaptive Metropolis

@dataclass
class AMResult:
    samples: np.ndarray
    log_target: np.ndarray
    iterations: np.ndarray
    accepted: np.ndarray   # bool per iteration


def adaptive_metropolis(log_target: Callable[[np.ndarray], float], z0, n_iter: int,
                        rng: np.random.Generator, *, burn_in: int = 0, thin: int = 1,
                        adapt_start: int = 1000, scale: float | None = None,
                        jitter: float = 1e-6, init_cov=None) -> AMResult:
    """Random-walk Metropolis with Haario-style covariance adaptation."""
    z = np.array(z0, dtype=float)
    d = len(z)
    if scale is None:
        scale = 2.38**2 / d
    lp = log_target(z)
    if not np.isfinite(lp):
        raise InitializationError("starting point has non-finite log target")
    cov0 = np.eye(d) * 0.01 if init_cov is None else np.asarray(init_cov, dtype=float)
    chol = np.linalg.cholesky(cov0)
    # history moments of z_0..z_t (Welford)
    mean = z.copy()
    m2 = np.zeros((d, d))
    count = 1
    eye_jit = jitter * np.eye(d)

    keep = range(burn_in + thin, n_iter + 1, thin)
    n_keep = len(keep)
    samples = np.empty((n_keep, d))
    lps = np.empty(n_keep)
    iters = np.fromiter(keep, dtype=int, count=n_keep)
    accepted = np.zeros(n_iter, dtype=bool)
    eps = rng.standard_normal((n_iter, d))
    log_u = np.log(rng.random(n_iter))
    k = 0
    for t in range(1, n_iter + 1):
        if t > adapt_start:
            cov = scale * (m2 / (count - 1) + eye_jit)
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                log.debug("proposal covariance not positive definite at t=%d", t)
        prop = z + chol @ eps[t - 1]
        lp_prop = log_target(prop)
        if log_u[t - 1] < lp_prop - lp:
            z, lp = prop, lp_prop
            accepted[t - 1] = True
        count += 1
        delta = z - mean
        mean += delta / count
        m2 += np.outer(delta, z - mean)
        if k < n_keep and t == iters[k]:
            samples[k] = z
            lps[k] = lp
            k += 1
    return AMResult(samples, lps, iters, accepted)


# ---------------------------------------------------------------------------
# Weibull posterior

def to_params(z, mu_max):
    z = np.asarray(z, dtype=float)
    return np.exp(z[..., 0]), np.exp(z[..., 1]), mu_max * special.expit(z[..., 2])


def from_params(beta, eta, mu, mu_max):
    return np.array([math.log(beta), math.log(eta), special.logit(mu / mu_max)])


def make_log_target(prep: PreparedData, prior: PriorSpec):
    """Log posterior density on the transformed space, Jacobian included."""
    mu_max = prep.mu_max
    log_mu_max = math.log(mu_max)

    def log_target(z):
        lb, le, lm = z
        # beyond this beta or eta under/overflows a double; treat as outside the support
        if not (abs(lb) < 700 and abs(le) < 700):
            return -math.inf
        beta, eta = math.exp(lb), math.exp(le)
        # log sigmoid and log(1 - sigmoid), overflow-safe
        log_s = -math.log1p(math.exp(-lm)) if lm > -30 else lm
        log_1s = -math.log1p(math.exp(lm)) if lm < 30 else -lm
        mu = mu_max * math.exp(log_s)
        if not mu < mu_max:
            return -math.inf
        value = prep.log_kernel_point(beta, eta, mu, prior)
        if not math.isfinite(value):
            return -math.inf
        return value + lb + le + log_mu_max + log_s + log_1s

    return log_target


def _pseudo_times(data: ComponentDataset) -> np.ndarray:
    lo, up = data.lower, data.upper
    exact = lo == up
    right = np.isinf(up)
    mid = np.where(lo == 0, up / 2, (lo + up) / 2)
    return np.where(exact | right, lo, mid)


def initial_point(data: ComponentDataset) -> WeibullParams:
    """Moment-matched starting value from pseudo-complete failure times."""
    lo, up = data.lower, data.upper
    if np.all(np.isinf(up) & (lo != up)):
        raise InitializationError("all rows are right-censored; nothing anchors the location")
    prep = PreparedData(data)
    t = _pseudo_times(data)
    t = t[t > 0]
    mu0 = 0.9 * float(t.min())
    y = t - mu0
    mean = float(y.mean())
    var = float(y.var(ddof=1)) if len(y) > 1 else 0.0
    beta0 = 1.0
    if var > 0:
        try:
            beta0 = weibull_shape_from_cv(var / mean**2)
        except NoSolutionError:
            beta0 = 1.0
    beta0 = float(np.clip(beta0, 0.05, 50.0))
    eta0 = mean / math.gamma(1 + 1 / beta0)
    # clip into the finite-kernel region: mu strictly inside (0, mu_max)
    mu0 = min(mu0, 0.9 * prep.mu_max)
    theta = WeibullParams(beta0, eta0, mu0)
    for _ in range(60):
        if math.isfinite(prep.log_kernel(*theta)):
            return theta
        theta = WeibullParams(theta.beta, theta.eta * 1.5, theta.mu * 0.5)
    raise InitializationError("no finite-kernel starting value found")


def split_rhat(chains_draws) -> float:
    """Split potential scale reduction factor for one scalar quantity.

    ``chains_draws`` is a (n_chains, n) array; each chain is split in half.
    """
    x = np.asarray(chains_draws, dtype=float)
    n = x.shape[1] // 2
    if n < 2:
        return math.nan
    halves = np.concatenate([x[:, :n], x[:, x.shape[1] - n:]])
    means = halves.mean(axis=1)
    w = halves.var(axis=1, ddof=1).mean()
    b = n * means.var(ddof=1)
    if w == 0:
        return 1.0 if b == 0 else math.inf
    var_plus = (n - 1) / n * w + b / n
    return math.sqrt(var_plus / w)


def _initial_cov(prep: PreparedData) -> np.ndarray:
    n_info = max(prep.n_exact + len(prep.b_upper), 1)
    sd = 1.0 / math.sqrt(n_info)
    return np.diag([sd, sd, 4 * sd]) ** 2


def fit(data: ComponentDataset, prior: PriorSpec = PriorSpec(),
        config: SamplerConfig = SamplerConfig()) -> list[Chain]:
    """Posterior draws of (beta, eta, mu) from ``config.chains`` adaptive chains."""
    prep = PreparedData(data)
    if not math.isfinite(prep.mu_max):
        raise InitializationError("all rows are right-censored; nothing anchors the location")
    start = initial_point(data)
    mu_max = prep.mu_max
    log_target = make_log_target(prep, prior)
    z_start = from_params(*start, mu_max)
    init_cov = _initial_cov(prep)
    chains = []
    for c, ss in enumerate(np.random.SeedSequence(config.seed).spawn(config.chains)):
        rng = np.random.default_rng(ss)
        z0 = z_start
        if c > 0:
            for _ in range(1000):
                cand = z_start + config.init_spread * rng.standard_normal(3)
                if np.isfinite(log_target(cand)):
                    z0 = cand
                    break
            else:
                raise InitializationError(f"chain {c}: no finite start in 1000 attempts")
        # far-tail proposals overflow to a zero density; that is a rejection
        with np.errstate(over="ignore", invalid="ignore"):
            res = adaptive_metropolis(log_target, z0, config.iterations, rng,
                                      burn_in=config.burn_in, thin=config.thin,
                                      adapt_start=config.adapt_start, scale=config.scale,
                                      jitter=config.jitter, init_cov=init_cov)
        beta, eta, mu = to_params(res.samples, mu_max)
        draws = np.column_stack([beta, eta, mu])
        lk = prep.log_kernel(beta, eta, mu, prior)
        acc = float(res.accepted[config.burn_in:].mean())
        chains.append(Chain(draws, np.atleast_1d(lk), res.iterations, acc, config.seed, c))
    rhat = {}
    if config.chains > 1:
        for i, name in enumerate(PARAMS):
            rhat[name] = split_rhat(np.stack([ch.draws[:, i] for ch in chains]))
    for ch in chains:
        ch.rhat = rhat
    if any(v > config.rhat_threshold for v in rhat.values()):
        log.warning("split R-hat above %.2f: %s", config.rhat_threshold, rhat)
    return chains
