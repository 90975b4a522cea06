"""Three-parameter Weibull model for censored component data.

Parameters are ``(beta, eta, mu)``: shape, scale and location. The prior class
is ``1 / (eta * beta**b)`` and the likelihood multiplies densities for exact
rows with survivor differences ``R(l) - R(u)`` for censored rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .observe import ComponentDataset


class WeibullParams(NamedTuple):
    beta: float
    eta: float
    mu: float = 0.0

    def validate(self):
        if not (self.beta > 0 and self.eta > 0 and self.mu >= 0):
            raise ValueError(f"need beta > 0, eta > 0, mu >= 0; got {tuple(self)}")
        return self


@dataclass(frozen=True)
class PriorSpec:
    b: float = 1.0

    def __post_init__(self):
        if not self.b >= 0:
            raise ValueError("prior exponent b must be >= 0")


def reliability(x, theta):
    """R(x) = exp(-((x - mu)/eta)^beta), identically 1 for x <= mu."""
    beta, eta, mu = theta
    x = np.asarray(x, dtype=float)
    z = (np.maximum(x - mu, 0.0) / eta) ** beta
    out = np.exp(-z)
    return out if out.ndim else float(out)


def log_density(x, theta):
    beta, eta, mu = theta
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (x - mu) / eta
        ls = np.log(s)
        out = np.log(beta / eta) + (beta - 1) * ls - np.exp(beta * ls)
    out = np.where(x > mu, out, -np.inf)
    return out if out.ndim else float(out)


def log_prior(theta, prior: PriorSpec = PriorSpec()) -> float:
    beta, eta, _ = theta
    return -math.log(eta) - prior.b * math.log(beta)


def mean_lifetime(theta):
    """E[X] = mu + eta * Gamma(1 + 1/beta)."""
    beta, eta, mu = theta
    return mu + eta * special.gamma(1 + 1 / np.asarray(beta, dtype=float))


def _log_diff_exp(zl, zu):
    # log(exp(-zl) - exp(-zu)) for zl <= zu
    with np.errstate(divide="ignore", invalid="ignore"):
        return -zl + np.log(-np.expm1(-(zu - zl)))


class PreparedData:
    """A dataset split by row kind for fast repeated kernel evaluation.

    Evaluation broadcasts over parameter arrays: ``beta``, ``eta`` and ``mu``
    of a common shape ``S`` give a result of shape ``S``.
    """

    def __init__(self, data: ComponentDataset):
        lo, up = data.lower, data.upper
        exact = lo == up
        right = np.isinf(up) & ~exact
        bounded = ~exact & ~right
        self.n = len(lo)
        self.exact = lo[exact]
        self.right = lo[right & (lo > 0)]
        self.b_lower = lo[bounded]
        self.b_upper = up[bounded]
        finite = np.concatenate([self.exact, self.b_upper])
        self.mu_max = float(finite.min()) if len(finite) else math.inf
        self.n_exact = len(self.exact)
        self._right_min = float(self.right.min()) if len(self.right) else math.inf

    def log_likelihood(self, beta, eta, mu):
        beta = np.asarray(beta, dtype=float)[..., None]
        eta = np.asarray(eta, dtype=float)[..., None]
        mu = np.asarray(mu, dtype=float)[..., None]
        total = np.zeros(np.broadcast_shapes(beta.shape, eta.shape, mu.shape)[:-1])
        log_eta = np.log(eta)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.n_exact:
                d = self.exact - mu
                ls = np.log(d) - log_eta
                term = np.log(beta) - log_eta + (beta - 1) * ls - np.exp(beta * ls)
                term = np.where(d > 0, term, -np.inf)
                total = total + term.sum(axis=-1)
            if len(self.right):
                d = self.right - mu
                z = np.exp(beta * (np.log(np.maximum(d, 0.0)) - log_eta))
                total = total - np.where(d > 0, z, 0.0).sum(axis=-1)
            if len(self.b_upper):
                du = self.b_upper - mu
                dl = self.b_lower - mu
                zu = np.exp(beta * (np.log(np.maximum(du, 0.0)) - log_eta))
                zl = np.exp(beta * (np.log(np.maximum(dl, 0.0)) - log_eta))
                term = _log_diff_exp(zl, zu)
                term = np.where(du > 0, term, -np.inf)
                total = total + term.sum(axis=-1)
        total = np.where(np.isnan(total), -np.inf, total)
        return total if total.ndim else float(total)

    def log_kernel(self, beta, eta, mu, prior: PriorSpec = PriorSpec()):
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = -np.log(eta) - prior.b * np.log(beta)
        return lp + self.log_likelihood(beta, eta, mu)

    def log_kernel_point(self, beta: float, eta: float, mu: float,
                         prior: PriorSpec = PriorSpec()) -> float:
        """Scalar-parameter ``log_kernel``; the sampler's hot path."""
        if not (mu < self.mu_max and 0 < beta < math.inf and 0 < eta < math.inf):
            return -math.inf
        log_eta = math.log(eta)
        log_beta = math.log(beta)
        total = -log_eta - prior.b * log_beta
        if self.n_exact:
            ls = np.log(self.exact - mu) - log_eta
            total += (self.n_exact * (log_beta - log_eta) + (beta - 1) * ls.sum()
                      - np.exp(beta * ls).sum())
        if len(self.right):
            d = self.right - mu
            if mu > self._right_min:
                d = d[d > 0]
            total -= np.exp(beta * (np.log(d) - log_eta)).sum()
        if len(self.b_upper):
            zu = np.exp(beta * (np.log(self.b_upper - mu) - log_eta))
            dl = self.b_lower - mu
            pos = dl > 0
            if pos.all():
                zl = np.exp(beta * (np.log(dl) - log_eta))
            else:
                zl = np.zeros_like(dl)
                zl[pos] = np.exp(beta * (np.log(dl[pos]) - log_eta))
            gap = zu - zl
            if gap.min() <= 0:
                return -math.inf
            total += (np.log(-np.expm1(-gap)) - zl).sum()
        total = float(total)
        return total if not math.isnan(total) else -math.inf

    def grad_log_kernel(self, theta, prior: PriorSpec = PriorSpec()) -> np.ndarray:
        """Analytic gradient of the log kernel w.r.t. (beta, eta, mu)."""
        beta, eta, mu = (float(v) for v in theta)
        g = np.array([-prior.b / beta, -1.0 / eta, 0.0])

        def z_and_partials(x):
            # z = ((x - mu)/eta)^beta and dz/d(beta, eta, mu); zero where x <= mu
            d = x - mu
            pos = d > 0
            ls = np.log(np.where(pos, d, 1.0)) - math.log(eta)
            z = np.where(pos, np.exp(beta * ls), 0.0)
            dz = np.stack([z * ls, -beta * z / eta,
                           np.where(pos, -beta * z / np.where(pos, d, 1.0), 0.0)])
            return z, dz

        if self.n_exact:
            d = self.exact - mu
            z, dz = z_and_partials(self.exact)
            ls = np.log(d) - math.log(eta)
            g[0] += np.sum(1 / beta + ls) - dz[0].sum()
            g[1] += -self.n_exact * beta / eta - dz[1].sum()
            g[2] += np.sum(-(beta - 1) / d) - dz[2].sum()
        if len(self.right):
            _, dz = z_and_partials(self.right)
            g -= dz.sum(axis=1)
        if len(self.b_upper):
            zl, dzl = z_and_partials(self.b_lower)
            zu, dzu = z_and_partials(self.b_upper)
            rl, ru = np.exp(-zl), np.exp(-zu)
            diff = rl - ru
            g += ((-rl * dzl + ru * dzu) / diff).sum(axis=1)
        return g


def log_likelihood(theta, data: ComponentDataset) -> float:
    return PreparedData(data).log_likelihood(*theta)


def log_posterior_kernel(theta, data: ComponentDataset, prior: PriorSpec = PriorSpec()) -> float:
    ll = log_likelihood(theta, data)
    if ll == -np.inf:
        return -np.inf
    return log_prior(theta, prior) + ll


def mu_upper_bound(data: ComponentDataset) -> float:
    """Smallest exact time or finite censoring upper bound; inf if none."""
    return PreparedData(data).mu_max


# ---------------------------------------------------------------------------
# numeric properness probe

class QuadratureError(RuntimeError):
    def __init__(self, value, error):
        self.value = value
        self.error = error
        super().__init__(f"probe integral {value:.6g} not resolved (error estimate {error:.3g})")


def _gauss(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = (b - a)[..., None] / 2
    return (a + b)[..., None] / 2 + half * x, half * w


def _probe_integral(prep: PreparedData, prior: PriorSpec, cap: float, n_nodes: int):
    """Log of the kernel integral over the regulated box, tensor Gauss-Legendre.

    Outer coordinates are log(beta) and log(mu_max - mu); the inner eta
    integral uses s = beta * log(eta / ref) so the survivor factors vary on a
    unit scale whatever the shape.
    """
    lc = math.log(cap)
    mu_max = prep.mu_max
    u, wu = _gauss(-lc, lc, n_nodes)
    w, ww = _gauss(math.log(mu_max) - lc, math.log(mu_max), n_nodes)
    gap = np.exp(w)[None, :]
    mu = mu_max - gap
    finite = np.concatenate([prep.exact, prep.right, prep.b_upper])
    ref = finite.max() - mu  # reference time scale per mu node
    parts = []
    for lo in range(0, n_nodes, 8):
        beta = np.exp(u[lo:lo + 8])[:, None]
        s_lo = np.maximum(-5.0, beta * (-lc - np.log(ref)))
        s_hi = np.minimum(50.0, beta * (lc - np.log(ref)))
        empty = s_hi <= s_lo
        s_hi = np.where(empty, s_lo + 1.0, s_hi)
        s, ws = _gauss(s_lo, s_hi, n_nodes)
        eta = ref[..., None] * np.exp(s / beta[..., None])
        shape = eta.shape
        lk = prep.log_kernel(np.broadcast_to(beta[..., None], shape), eta,
                             np.broadcast_to(mu[..., None], shape), prior)
        # Jacobians: d beta = beta du, d mu = gap dw, d eta = eta/beta ds
        lj = (lk + np.log(eta) + np.log(ws) + np.log(gap[..., None])
              + np.log(wu[lo:lo + 8])[:, None, None] + np.log(ww)[None, :, None])
        parts.append(special.logsumexp(np.where(empty[..., None], -np.inf, lj)))
    return special.logsumexp(parts)


def log_properness_probe(data: ComponentDataset, prior: PriorSpec, domain_cap: float,
                         n_nodes: int = 96, rtol: float = 1e-3) -> tuple[float, float]:
    """``(log integral, relative error estimate)`` of the kernel over a capped box.

    The box is beta, eta in [1/cap, cap] and mu in [0, mu_max (1 - 1/cap)].
    The error estimate compares ``n_nodes`` with ``1.5 * n_nodes`` per axis.
    """
    if domain_cap <= 1:
        raise ValueError("domain_cap must exceed 1")
    prep = PreparedData(data)
    if not math.isfinite(prep.mu_max):
        raise ValueError("probe needs at least one exact or finite-bounded row")
    coarse = _probe_integral(prep, prior, domain_cap, n_nodes)
    fine = _probe_integral(prep, prior, domain_cap, int(round(1.5 * n_nodes)))
    err = abs(math.expm1(coarse - fine))
    if not err <= rtol:
        raise QuadratureError(math.exp(fine), err)
    return fine, err


def properness_probe(data: ComponentDataset, prior: PriorSpec = PriorSpec(),
                     domain_cap: float = 100.0, n_nodes: int = 96, rtol: float = 1e-3) -> float:
    """Integral of exp(log kernel) over the cap-regulated parameter box."""
    return math.exp(log_properness_probe(data, prior, domain_cap, n_nodes, rtol)[0])
