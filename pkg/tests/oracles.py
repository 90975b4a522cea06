"""Independent reference implementations used as test oracles."""

import math

import numpy as np
from scipy import integrate

from cohrel.structure import Component, KofN, Parallel, Series, evaluate

# bridge as a two-terminal network: edge j joins the listed nodes
BRIDGE_EDGES = {1: ("s", "a"), 2: ("s", "b"), 3: ("a", "b"), 4: ("a", "t"), 5: ("b", "t")}


def bridge_connected(state):
    """s-t connectivity of the bridge network with working edges ``state``."""
    up = [BRIDGE_EDGES[j + 1] for j, ok in enumerate(state) if ok]
    reached, frontier = {"s"}, ["s"]
    while frontier:
        node = frontier.pop()
        for u, v in up:
            for a, b in ((u, v), (v, u)):
                if a == node and b not in reached:
                    reached.add(b)
                    frontier.append(b)
    return "t" in reached


def failure_sweep(expr, lifetimes):
    """Fail components in time order; return the time the system first fails."""
    x = list(lifetimes)
    state = [True] * len(x)
    for t in sorted(set(x)):
        for j, xj in enumerate(x):
            if xj == t:
                state[j] = False
        if not evaluate(expr, state):
            return t
    raise AssertionError("system survives every component failure")


def random_expr(rng, m, depth=3):
    """A random structure tree over component ids 1..m (ids may repeat)."""
    if depth == 0 or rng.random() < 0.3:
        return Component(int(rng.integers(1, m + 1)))
    n_kids = int(rng.integers(2, 5))
    kids = tuple(random_expr(rng, m, depth - 1) for _ in range(n_kids))
    kind = rng.integers(3)
    if kind == 0:
        return Series(kids)
    if kind == 1:
        return Parallel(kids)
    return KofN(int(rng.integers(1, n_kids + 1)), kids)


def weibull_pdf(x, beta, eta, mu):
    if x <= mu:
        return 0.0
    s = (x - mu) / eta
    return beta / eta * s ** (beta - 1) * math.exp(-s**beta)


def interval_mass(beta, eta, mu, lo, up):
    """P(lo < X < up) by adaptive quadrature of the density in u = log(x - mu)."""
    a = max(lo, mu)
    if up <= a:
        return 0.0

    # f(u) = pdf(mu + e^u) e^u, built from d = e^u since mu + d rounds to mu deep in the tail
    def f(u):
        s = math.exp(u) / eta
        return beta * s**beta * math.exp(-s**beta)

    u_lo = math.log(a - mu) if a > mu else -math.inf
    u_up = math.log(up - mu) if math.isfinite(up) else math.inf
    # split at the mode of the log-scale density so quad sees the peak
    cuts = sorted({u_lo, u_up, min(max(math.log(eta), u_lo), u_up)})
    return math.fsum(integrate.quad(f, l, r, epsabs=0, epsrel=1e-13, limit=500)[0]
                     for l, r in zip(cuts, cuts[1:]) if l < r)


def hpd_scan(x, level):
    """Brute-force shortest window over every start, lowest start on ties."""
    x = sorted(x)
    n = len(x)
    k = math.ceil(level * n - 1e-9)
    best = None
    for i in range(n - k + 1):
        w = x[i + k - 1] - x[i]
        if best is None or w < best[0]:
            best = (w, x[i], x[i + k - 1])
    return best[1], best[2]


def rng(seed=0):
    return np.random.default_rng(seed)
