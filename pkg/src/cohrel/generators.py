"""Component lifetime generators parameterised by mean and variance.

Families: two- and three-parameter Weibull, gamma, lognormal and the modified
Weibull with survivor ``exp(-a t^b e^(lam t))``. Three-parameter families
carry one fixed parameter (Weibull location, modified-Weibull ``lam``) so that
two moments pin the remaining two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, optimize, special, stats
from scipy.optimize import elementwise

FAMILIES = ("weibull2", "weibull3", "gamma", "lognormal", "modified_weibull")

DEFAULT_FIXED = {"weibull3": 1.0, "modified_weibull": 0.1}

WEIBULL_SHAPE_BRACKET = (0.05, 50.0)


class NoSolutionError(ValueError):
    """Moment system has no solution for the requested family."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    mean: float
    variance: float
    fixed: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not (self.mean > 0 and self.variance > 0):
            raise ValueError("mean and variance must be positive")
        if self.family in DEFAULT_FIXED and self.fixed is None:
            object.__setattr__(self, "fixed", DEFAULT_FIXED[self.family])

    def to_dict(self):
        d = {"family": self.family, "mean": self.mean, "variance": self.variance}
        if self.fixed is not None:
            d["fixed"] = self.fixed
        return d


@dataclass(frozen=True)
class GeneratorParams:
    """Solved parameters. ``values`` keys depend on the family:

    weibull2 / weibull3: beta, eta, mu;  gamma: shape, scale;
    lognormal: meanlog, sdlog;  modified_weibull: a, b, lam.
    """

    family: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self):
        return {"family": self.family, **{k: float(v) for k, v in self.values.items()}}


# ---------------------------------------------------------------------------
# moment matching

def weibull_shape_from_cv(cv2: float, bracket=WEIBULL_SHAPE_BRACKET, max_expand=8) -> float:
    """Weibull shape whose squared coefficient of variation equals ``cv2``."""
    def f(logb):
        b = math.exp(logb)
        # Gamma(1+2/b)/Gamma(1+1/b)^2 - 1 computed in log space
        return math.expm1(special.gammaln(1 + 2 / b) - 2 * special.gammaln(1 + 1 / b)) - cv2

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    for _ in range(max_expand):
        if f(lo) > 0 > f(hi):
            break
        lo, hi = lo - 1.0, hi + 1.0
    else:
        raise NoSolutionError(f"no Weibull shape gives squared CV {cv2}")
    return math.exp(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500))


def _weibull_from_moments(mean, var):
    beta = weibull_shape_from_cv(var / mean**2)
    eta = mean / math.gamma(1 + 1 / beta)
    return beta, eta


def modified_weibull_moments(a: float, b: float, lam: float) -> tuple[float, float]:
    """Mean and variance of the modified Weibull by quadrature of the survivor."""
    log_a = math.log(a)

    def surv(t):
        if t <= 0:
            return 1.0
        return math.exp(-math.exp(min(log_a + b * math.log(t) + lam * t, 700.0)))

    # cumulative hazard reaches 800 at t_end; the survivor is exactly 0 beyond
    cum = lambda t: log_a + b * math.log(t) + lam * t - math.log(800.0)
    hi = 1.0
    while cum(hi) < 0:
        hi *= 2
    t_end = optimize.brentq(cum, 0 if cum(1e-300) > 0 else 1e-300, hi, xtol=1e-12)
    kw = dict(epsabs=1e-13, epsrel=1e-12, limit=500)
    m1 = integrate.quad(surv, 0, t_end, **kw)[0]
    m2 = 2 * integrate.quad(lambda t: t * surv(t), 0, t_end, **kw)[0]
    return m1, m2 - m1 * m1


def _modified_weibull_from_moments(mean, var, lam):
    target_cv2 = var / mean**2

    def a_for_mean(b):
        # a = c^-b makes c a scale-like unknown; the mean increases in c
        g = lambda lc: modified_weibull_moments(math.exp(-b * lc), b, lam)[0] - mean
        lo, hi = math.log(mean) - 25.0, math.log(mean) + 25.0
        if not g(lo) < 0 < g(hi):
            raise NoSolutionError(f"cannot match mean {mean} with b={b}, lam={lam}")
        return math.exp(-b * optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-13))

    def h(logb):
        b = math.exp(logb)
        a = a_for_mean(b)
        m, v = modified_weibull_moments(a, b, lam)
        return v / m**2 - target_cv2

    lo, hi = math.log(0.05), math.log(20.0)
    try:
        hlo, hhi = h(lo), h(hi)
    except NoSolutionError as exc:
        raise NoSolutionError(str(exc)) from exc
    if not hlo > 0 > hhi:
        raise NoSolutionError(
            f"modified Weibull (lam={lam}) cannot reach mean {mean}, variance {var}")
    logb, res = optimize.brentq(h, lo, hi, xtol=1e-13, rtol=1e-13, maxiter=200,
                                full_output=True)
    if not res.converged:
        raise ConvergenceError("modified Weibull moment solve did not converge")
    b = math.exp(logb)
    return a_for_mean(b), b


def solve_params(spec: GeneratorSpec) -> GeneratorParams:
    """Parameters reproducing ``spec.mean`` and ``spec.variance``."""
    m, v = spec.mean, spec.variance
    if spec.family == "gamma":
        return GeneratorParams("gamma", {"shape": m * m / v, "scale": v / m})
    if spec.family == "lognormal":
        s2 = math.log1p(v / m**2)
        return GeneratorParams("lognormal", {"meanlog": math.log(m) - s2 / 2,
                                             "sdlog": math.sqrt(s2)})
    if spec.family == "weibull2":
        beta, eta = _weibull_from_moments(m, v)
        return GeneratorParams("weibull2", {"beta": beta, "eta": eta, "mu": 0.0})
    if spec.family == "weibull3":
        mu = spec.fixed
        if not 0 <= mu < m:
            raise NoSolutionError(f"weibull3 location {mu} must lie below the mean {m}")
        beta, eta = _weibull_from_moments(m - mu, v)
        return GeneratorParams("weibull3", {"beta": beta, "eta": eta, "mu": mu})
    lam = spec.fixed
    if lam < 0:
        raise NoSolutionError("modified Weibull lam must be non-negative")
    a, b = _modified_weibull_from_moments(m, v, lam)
    return GeneratorParams("modified_weibull", {"a": a, "b": b, "lam": lam})


def moments(params: GeneratorParams) -> tuple[float, float]:
    """Analytic (or quadrature) mean and variance of solved parameters."""
    p = params.values
    if params.family == "gamma":
        return p["shape"] * p["scale"], p["shape"] * p["scale"] ** 2
    if params.family == "lognormal":
        s2 = p["sdlog"] ** 2
        mean = math.exp(p["meanlog"] + s2 / 2)
        return mean, math.expm1(s2) * mean**2
    if params.family in ("weibull2", "weibull3"):
        g1 = math.gamma(1 + 1 / p["beta"])
        g2 = math.gamma(1 + 2 / p["beta"])
        return p["mu"] + p["eta"] * g1, p["eta"] ** 2 * (g2 - g1 * g1)
    return modified_weibull_moments(p["a"], p["b"], p["lam"])


# ---------------------------------------------------------------------------
# survivor, quantiles, sampling

def survival(params: GeneratorParams, t):
    """True reliability R(t) = P(X > t); equals 1 for t <= 0."""
    t = np.asarray(t, dtype=float)
    p = params.values
    tp = np.maximum(t, 0.0)
    if params.family == "gamma":
        out = special.gammaincc(p["shape"], tp / p["scale"])
    elif params.family == "lognormal":
        with np.errstate(divide="ignore"):
            out = special.ndtr(-(np.log(tp) - p["meanlog"]) / p["sdlog"])
    elif params.family in ("weibull2", "weibull3"):
        z = np.maximum(t - p["mu"], 0.0) / p["eta"]
        out = np.exp(-z ** p["beta"])
    else:
        out = np.exp(-p["a"] * tp ** p["b"] * np.exp(p["lam"] * tp))
    return np.where(t <= 0, 1.0, out)


def modified_weibull_inverse(u, a: float, b: float, lam: float):
    """Solve exp(-a t^b e^(lam t)) = u for t by bracketed root finding.

    The root is found in log t to about 1e-15 relative, well inside 1e-10
    absolute for any lifetime below 1e5.
    """
    u = np.asarray(u, dtype=float)
    target = -np.log(u)
    t = np.zeros_like(target)
    pos = target > 0
    if not np.any(pos):
        return t
    # solve log a + b s + lam e^s = log y in s = log t: monotone, and relative
    # accuracy in t keeps R(t) = u tight even where R is steep near zero
    rhs = np.log(target[pos]) - math.log(a)
    s_hi = rhs / b
    s_lo = (rhs - lam * np.exp(s_hi)) / b
    # the analytic ends can be the root itself; pad so rounding keeps the sign change
    pad = 1e-6 * (1.0 + np.abs(s_hi))
    s_lo, s_hi = s_lo - pad, s_hi + pad
    g = lambda s, rhs: b * s + lam * np.exp(s) - rhs
    res = elementwise.find_root(g, (s_lo, s_hi), args=(rhs,),
                                tolerances={"xatol": 1e-15, "xrtol": 4 * np.finfo(float).eps})
    if not np.all(res.success):
        raise ConvergenceError("modified Weibull inversion did not converge")
    t[pos] = np.exp(res.x)
    return t


def quantile(params: GeneratorParams, q):
    """Lifetime quantile: the t with P(X <= t) = q."""
    q = np.asarray(q, dtype=float)
    p = params.values
    if params.family == "gamma":
        return stats.gamma.ppf(q, p["shape"], scale=p["scale"])
    if params.family == "lognormal":
        return np.exp(p["meanlog"] + p["sdlog"] * special.ndtri(q))
    if params.family in ("weibull2", "weibull3"):
        return p["mu"] + p["eta"] * (-np.log1p(-q)) ** (1 / p["beta"])
    return modified_weibull_inverse(1 - q, p["a"], p["b"], p["lam"])


def sample(params: GeneratorParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` i.i.d. lifetimes drawn with ``rng``."""
    p = params.values
    if params.family == "gamma":
        return rng.gamma(p["shape"], p["scale"], count)
    if params.family == "lognormal":
        return rng.lognormal(p["meanlog"], p["sdlog"], count)
    if params.family in ("weibull2", "weibull3"):
        return p["mu"] + p["eta"] * rng.weibull(p["beta"], count)
    # 1 - U keeps u in (0, 1] so the draw is finite
    u = 1.0 - rng.random(count)
    return modified_weibull_inverse(u, p["a"], p["b"], p["lam"])
