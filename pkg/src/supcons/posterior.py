"""Finite normal-mixture model with a sample-size-dependent prior on sigma^2.

Model for data ``x_1..x_n`` in one dimension::

    w ~ Dirichlet(a, ..., a)                         (k components)
    mu_j ~ N(m0, s0^2)
    sigma^2 ~ LogNormal(m, s) truncated to [a_n, sigma2_max]
    x_i | w, mu, sigma^2 ~ sum_j w_j N(mu_j, sigma^2)

The lower truncation ``a_n = 1 / log(n + e)`` puts zero prior mass on small
variances, which is what the prior-tail conditions ask for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtri

from .densities import Family, MixtureDensity, pdf, sample
from .smoother import default_grid

__all__ = [
    "G_FUNCTIONS",
    "PriorSpec",
    "PosteriorDraw",
    "TailRegime",
    "TailCheckRow",
    "TailCheckReport",
    "MCSettings",
    "TraceEntry",
    "ConsistencyTrace",
    "tau_inverse",
    "prior_tail_check",
    "sample_prior",
    "prior_kl_mass",
    "run_gibbs",
    "log_joint",
    "mixture_pdf_batch",
    "sup_distance_batch",
    "effective_sample_size",
    "consistency_trace",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

G_FUNCTIONS = {
    "log1p": math.log1p,
    "sqrt": math.sqrt,
    "linear": float,
}


def tau_inverse(v):
    """Solve ``exp(-z/2) / z = v`` for ``z > 0``.

    The map is strictly decreasing from +inf to 0, so bisection on
    ``-z/2 - log z - log v`` converges from any bracket; iteration stops when
    the midpoint no longer separates the endpoints.
    """
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("v must be positive and finite")
    logv = math.log(v)

    def h(z):
        return -0.5 * z - math.log(z) - logv

    lo = hi = 1.0
    while h(lo) < 0:
        lo *= 0.5
    while h(hi) > 0:
        hi *= 2.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        hm = h(mid)
        if hm == 0:
            return mid
        if hm > 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(h(lo)) <= abs(h(hi)) else hi


@dataclass(frozen=True)
class PriorSpec:
    k: int = 5
    dirichlet_concentration: float = 1.0
    location_prior_mean: float = 0.0
    location_prior_sd: float = 2.0
    sigma2_log_mean: float = 0.0
    sigma2_log_sd: float = 1.0
    sigma2_max: float = 25.0
    truncation: str = "log"
    g: str = "log1p"
    C1_tilde: float = 0.25
    C2_tilde: float = 1.0
    c1_bar: float = 0.25
    c2_bar: float = 1.0
    R1_tilde: float = 1.0
    R1_bar: float = 1.0
    sigma2_grid_nodes: int = 256

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        for name in ("dirichlet_concentration", "location_prior_sd", "sigma2_log_sd",
                     "sigma2_max", "C1_tilde", "C2_tilde", "c1_bar", "c2_bar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.truncation not in ("log", "none"):
            raise ValueError("truncation must be 'log' or 'none'")
        if self.g not in G_FUNCTIONS:
            raise ValueError(f"g must be one of {sorted(G_FUNCTIONS)}")
        if self.sigma2_grid_nodes < 2:
            raise ValueError("sigma2_grid_nodes must be at least 2")

    def a_n(self, n):
        """Lower truncation point of sigma^2 for sample size ``n`` (0 when untruncated)."""
        if self.truncation == "none":
            return 0.0
        return 1.0 / math.log(n + math.e)

    def g_fn(self, R):
        return G_FUNCTIONS[self.g](R)

    def _z(self, t):
        if t <= 0:
            return -math.inf
        return (math.log(t) - self.sigma2_log_mean) / self.sigma2_log_sd

    @staticmethod
    def _log_ndtr_diff(hi, lo):
        lh, ll = float(log_ndtr(hi)), float(log_ndtr(lo))
        return lh + math.log1p(-math.exp(ll - lh)) if ll > -math.inf else lh

    def sigma2_log_normalizer(self, n):
        """Log of the untruncated log-normal mass on ``[a_n, sigma2_max]``."""
        return self._log_ndtr_diff(self._z(self.sigma2_max), self._z(self.a_n(n)))

    def sigma2_logcdf(self, t, n):
        """``log Pi_n(sigma^2 <= t)`` in closed form."""
        a, b = self.a_n(n), self.sigma2_max
        if t <= a:
            return -math.inf
        if t >= b:
            return 0.0
        return self._log_ndtr_diff(self._z(t), self._z(a)) - self.sigma2_log_normalizer(n)

    def sigma2_cdf(self, t, n):
        return math.exp(self.sigma2_logcdf(t, n))

    def sigma2_bounds(self, n):
        """Support used by the sampler; the untruncated prior is cut 8 log-sds below its median."""
        lo = self.a_n(n)
        if lo <= 0:
            lo = math.exp(self.sigma2_log_mean - 8.0 * self.sigma2_log_sd)
        return lo, self.sigma2_max

    def sample_sigma2(self, rng, n, size):
        a, b = self.a_n(n), self.sigma2_max
        pa = 0.0 if a <= 0 else float(np.exp(log_ndtr(self._z(a))))
        pb = float(np.exp(log_ndtr(self._z(b))))
        u = pa + (pb - pa) * rng.random(size)
        s2 = np.exp(self.sigma2_log_mean + self.sigma2_log_sd * ndtri(u))
        return np.clip(s2, max(a, np.finfo(float).tiny), b)


@dataclass(frozen=True)
class PosteriorDraw:
    weights: np.ndarray
    locations: np.ndarray
    sigma2: float

    def density(self):
        w = np.asarray(self.weights, dtype=float)
        # fsum is exactly rounded, so relabelling cannot change the normalization
        return MixtureDensity(Family.GAUSSIAN, w / math.fsum(w), np.asarray(self.locations),
                              math.sqrt(self.sigma2))

    def permuted(self, perm):
        perm = np.asarray(perm)
        return PosteriorDraw(np.asarray(self.weights)[perm], np.asarray(self.locations)[perm],
                             self.sigma2)

    def to_dict(self):
        return {"weights": np.asarray(self.weights).tolist(),
                "locations": np.asarray(self.locations).tolist(),
                "sigma2": float(self.sigma2)}


@dataclass(frozen=True)
class TailRegime:
    """Which prior-tail inequality to check.

    ``supersmooth``: ``Pi(sigma^2 <= C1~ / R^(alpha/2)) <= exp(-C2~ n g(R))``.
    ``ordinary``: ``Pi(sigma^(2 + 2(d-1)/beta) < c1 / R^((beta-1)/2)) < exp(-c2 n g(R))``.
    ``normal``: ``Pi(sigma^2 < tau(C~) / R^2) < exp(-n g(R))``.
    """

    kind: str
    alpha: float = 2.0
    beta: float = 2.0
    d: int = 1
    C_tilde: float = 1.0

    def __post_init__(self):
        if self.kind not in ("supersmooth", "ordinary", "normal"):
            raise ValueError(f"unknown regime {self.kind!r}")
        if self.kind == "ordinary" and self.beta <= 1:
            raise ValueError("the ordinary smooth condition needs beta > 1")
        if self.kind == "supersmooth" and not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class TailCheckRow:
    R: float
    threshold: float
    log_tail: float
    log_bound: float
    passed: bool

    @property
    def tail(self):
        return math.exp(self.log_tail)

    @property
    def bound(self):
        return math.exp(self.log_bound)


@dataclass
class TailCheckReport:
    regime: TailRegime
    n: int
    rows: list

    @property
    def passed(self):
        return all(r.passed for r in self.rows)


def prior_tail_check(prior, n, R_grid, regime):
    """Compare the prior's left tail of sigma^2 with the exponential bound, per R.

    Both sides are compared in log space so an exactly-zero tail passes even
    when the bound underflows.
    """
    rows = []
    for R in R_grid:
        R = float(R)
        if regime.kind == "supersmooth":
            if R < prior.R1_tilde:
                raise ValueError(f"R={R} below the validity threshold {prior.R1_tilde}")
            thr = prior.C1_tilde / R ** (regime.alpha / 2.0)
            log_bound = -prior.C2_tilde * n * prior.g_fn(R)
            strict = False
        elif regime.kind == "ordinary":
            if R < prior.R1_bar:
                raise ValueError(f"R={R} below the validity threshold {prior.R1_bar}")
            power = 1.0 + (regime.d - 1) / regime.beta
            thr = (prior.c1_bar / R ** ((regime.beta - 1.0) / 2.0)) ** (1.0 / power)
            log_bound = -prior.c2_bar * n * prior.g_fn(R)
            strict = True
        else:
            thr = tau_inverse(regime.C_tilde) / R ** 2
            log_bound = -n * prior.g_fn(R)
            strict = True
        log_tail = prior.sigma2_logcdf(thr, n)
        ok = log_tail < log_bound if strict else log_tail <= log_bound
        rows.append(TailCheckRow(R, thr, log_tail, log_bound, bool(ok)))
    return TailCheckReport(regime, n, rows)


def sample_prior(prior, n, rng, size):
    """``size`` prior draws as arrays ``(weights (size, k), locations (size, k), sigma2 (size,))``."""
    k = prior.k
    g = rng.standard_gamma(prior.dirichlet_concentration, size=(size, k))
    w = g / g.sum(axis=1, keepdims=True)
    mu = prior.location_prior_mean + prior.location_prior_sd * rng.standard_normal((size, k))
    s2 = prior.sample_sigma2(rng, n, size)
    return w, mu, s2


def _component_terms(w, mu, s2, x):
    # (draws, grid, k) array of w_j N(x | mu_j, sigma^2), same arithmetic as densities.pdf
    sigma = np.sqrt(s2)[:, None, None]
    z = (x[None, :, None] - mu[:, None, :]) / sigma
    logk = (-0.5 * z * z - _LOG_SQRT_2PI) - np.log(sigma)
    return w[:, None, :] * np.exp(logk), logk


def mixture_pdf_batch(w, mu, s2, x):
    terms, _ = _component_terms(w, mu, s2, x)
    return np.sort(terms, axis=2).sum(axis=2)


def _chunks(total, per_draw_cost, budget=3_000_000):
    step = max(1, budget // max(per_draw_cost, 1))
    for s in range(0, total, step):
        yield slice(s, min(total, s + step))


def sup_distance_batch(w, mu, s2, f0, grid):
    """``max_grid |f_draw - f0|`` for each draw."""
    x = grid.axes()[0]
    f0v = pdf(f0, x)
    out = np.empty(len(s2))
    for sl in _chunks(len(s2), x.size * w.shape[1]):
        out[sl] = np.max(np.abs(mixture_pdf_batch(w[sl], mu[sl], s2[sl], x) - f0v), axis=1)
    return out


def _kl_batch(w, mu, s2, f0, grid):
    from .densities import logpdf

    x = grid.axes()[0]
    lf0 = logpdf(f0, x)
    f0v = np.exp(lf0)
    out = np.empty(len(s2))
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    for sl in _chunks(len(s2), x.size * w.shape[1]):
        _, logk = _component_terms(w[sl], mu[sl], s2[sl], x)
        a = lw[sl][:, None, :] + logk
        top = a.max(axis=2, keepdims=True)
        lg = top[..., 0] + np.log(np.sort(np.exp(a - top), axis=2).sum(axis=2))
        integrand = np.where(f0v > 0, f0v * (lf0 - lg), 0.0)
        out[sl] = np.maximum(np.trapezoid(integrand, x, axis=1), 0.0)
    return out


def prior_kl_mass(prior, n, f0, epsilon, draws, seed, grid=None):
    """Monte Carlo ``Pi(KL(f0 || f) < epsilon)`` with its binomial standard error."""
    if draws < 100:
        raise ValueError("use at least 100 prior draws")
    if f0.dimension != 1:
        raise ValueError("f0 must be one-dimensional")
    rng = np.random.default_rng(seed)
    w, mu, s2 = sample_prior(prior, n, rng, draws)
    kl = _kl_batch(w, mu, s2, f0, grid or default_grid(f0))
    p = float(np.mean(kl < epsilon))
    return p, math.sqrt(p * (1.0 - p) / draws)


def _log_sigma2_prior(prior, v):
    # density of log sigma^2 up to a constant (truncation handled by the grid support)
    z = (v - prior.sigma2_log_mean) / prior.sigma2_log_sd
    return -0.5 * z * z


def _gibbs_arrays(x, prior, iterations, burn_in, rng, n_model, thin=1):
    k = prior.k
    n = x.size
    lo, hi = prior.sigma2_bounds(n_model)
    edges = np.linspace(math.log(lo), math.log(hi), prior.sigma2_grid_nodes + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    log_prior_cells = _log_sigma2_prior(prior, centers)
    m0, v0 = prior.location_prior_mean, prior.location_prior_sd ** 2

    if n:
        mu = np.sort(rng.choice(x, size=k, replace=n < k))
        s2 = float(np.clip(np.var(x) / k if n > 1 else 1.0, lo, hi))
    else:
        mu = m0 + math.sqrt(v0) * rng.standard_normal(k)
        s2 = float(np.clip(math.exp(prior.sigma2_log_mean), lo, hi))
    w = np.full(k, 1.0 / k)

    kept = max(0, (iterations - burn_in + thin - 1) // thin)
    W = np.empty((kept, k))
    MU = np.empty((kept, k))
    S2 = np.empty(kept)
    j = 0
    for it in range(iterations):
        if n:
            with np.errstate(divide="ignore"):
                logp = np.log(w)[None, :] - 0.5 * (x[:, None] - mu[None, :]) ** 2 / s2
            logp -= logp.max(axis=1, keepdims=True)
            p = np.exp(logp)
            cum = np.cumsum(p, axis=1)
            u = rng.random(n) * cum[:, -1]
            z = np.minimum((u[:, None] >= cum).sum(axis=1), k - 1)
            counts = np.bincount(z, minlength=k)
            sums = np.bincount(z, weights=x, minlength=k)
        else:
            z = np.zeros(0, dtype=int)
            counts = np.zeros(k)
            sums = np.zeros(k)

        g = rng.standard_gamma(prior.dirichlet_concentration + counts)
        w = g / g.sum()

        prec = 1.0 / v0 + counts / s2
        mean = (m0 / v0 + sums / s2) / prec
        mu = mean + rng.standard_normal(k) / np.sqrt(prec)

        ss = float(np.sum((x - mu[z]) ** 2)) if n else 0.0
        # cells are uniform in log sigma^2, which absorbs the 1/sigma^2 Jacobian
        logc = log_prior_cells - 0.5 * n * centers - 0.5 * ss * np.exp(-centers)
        pc = np.exp(logc - logc.max())
        cell = int(np.searchsorted(np.cumsum(pc), rng.random() * pc.sum(), side="right"))
        cell = min(cell, centers.size - 1)
        s2 = float(np.clip(math.exp(edges[cell] + width * rng.random()), lo, hi))

        if it >= burn_in and (it - burn_in) % thin == 0:
            W[j], MU[j], S2[j] = w, mu, s2
            j += 1
    return W[:j], MU[:j], S2[:j]


def run_gibbs(data, prior, iterations, burn_in, seed, n=None, thin=1):
    """Data-augmentation Gibbs sampler; returns the post-burn-in draws.

    The sigma^2 update is griddy Gibbs on ``prior.sigma2_grid_nodes`` cells
    uniform in ``log sigma^2`` over ``[a_n, sigma2_max]``, followed by a uniform
    jitter within the chosen cell. ``n`` sets the truncation ``a_n`` and
    defaults to ``len(data)``.
    """
    x = np.asarray(data, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    if not 0 <= burn_in <= iterations:
        raise ValueError("need 0 <= burn_in <= iterations")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    W, MU, S2 = _gibbs_arrays(x, prior, iterations, burn_in, rng,
                              x.size if n is None else n, thin)
    return [PosteriorDraw(w, m, float(s)) for w, m, s in zip(W, MU, S2)]


def log_joint(data, draw, allocations, prior, n=None):
    """Log joint density of ``(w, mu, sigma^2, allocations, data)`` under the model."""
    x = np.asarray(data, dtype=float).reshape(-1)
    z = np.asarray(allocations, dtype=int).reshape(-1)
    n_model = x.size if n is None else n
    w = np.asarray(draw.weights, dtype=float)
    mu = np.asarray(draw.locations, dtype=float)
    s2 = float(draw.sigma2)
    a = prior.dirichlet_concentration
    k = prior.k
    lo, hi = prior.a_n(n_model), prior.sigma2_max
    if not lo <= s2 <= hi:
        return -math.inf
    terms = [gammaln(a * k) - k * gammaln(a)]
    terms += ((a - 1.0) * np.log(w)).tolist()
    v0 = prior.location_prior_sd ** 2
    terms += (-0.5 * (mu - prior.location_prior_mean) ** 2 / v0
              - 0.5 * math.log(2 * math.pi * v0)).tolist()
    ls = prior.sigma2_log_sd
    zs = (math.log(s2) - prior.sigma2_log_mean) / ls
    terms.append(-0.5 * zs * zs - math.log(s2 * ls) - _LOG_SQRT_2PI
                 - prior.sigma2_log_normalizer(n_model))
    if x.size:
        terms += (np.log(w[z]) - 0.5 * (x - mu[z]) ** 2 / s2
                  - 0.5 * math.log(2 * math.pi * s2)).tolist()
    return math.fsum(sorted(terms))


def effective_sample_size(chains):
    """Multi-chain ESS from the averaged autocorrelation, Geyer's initial monotone sequence."""
    x = np.atleast_2d(np.asarray(chains, dtype=float))
    m, T = x.shape
    if T < 4:
        return float(m * T)
    xc = x - x.mean(axis=1, keepdims=True)
    if not np.any(xc):
        return float(m * T)
    spec = np.fft.rfft(xc, n=2 * T, axis=1)
    acov = np.fft.irfft(spec * np.conj(spec), axis=1)[:, :T] / T
    acov = acov.mean(axis=0)
    if acov[0] <= 0:
        return float(m * T)
    rho = acov / acov[0]
    tau = -1.0
    prev = math.inf
    for t in range(0, T - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    return float(m * T / max(tau, 1e-12))


@dataclass(frozen=True)
class MCSettings:
    chains: int = 4
    iterations: int = 3000
    burn_in: int = 1000
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.chains < 1 or self.iterations < 1 or self.thin < 1:
            raise ValueError("chains, iterations and thin must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")


@dataclass(frozen=True)
class TraceEntry:
    n: int
    epsilon: float
    posterior_mass_estimate: float
    mc_standard_error: float
    draws_used: int
    ess: float


@dataclass
class ConsistencyTrace:
    entries: list = field(default_factory=list)

    def __post_init__(self):
        ns = [e.n for e in self.entries]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("trace sample sizes must be strictly increasing")

    @property
    def masses(self):
        return [e.posterior_mass_estimate for e in self.entries]


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def consistency_trace(f0, n_list, epsilon, prior, smoother=None, mc=MCSettings(),
                      draw_log=None):
    """Posterior mass of ``{f : sup_x |f - f0| > epsilon}`` for each ``n`` in ``n_list``.

    Data for sample size ``n`` and chain ``c`` come from RNG streams keyed by
    ``(seed, n)`` and ``(seed, n, c)``, so entries do not depend on one another
    or on the order they are computed in. When ``draw_log`` is a list, one
    dict per retained draw is appended to it.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or (n_list and n_list[0] < 0):
        raise ValueError("n_list must be nonnegative and strictly increasing")
    if f0.dimension != 1:
        raise ValueError("f0 must be one-dimensional")
    grid = (smoother.grid if smoother is not None and smoother.grid is not None
            else default_grid(f0))
    entries = []
    for n in n_list:
        data = sample(f0, n, _stream(mc.seed, 0, n))[:, 0]
        dists = []
        for c in range(mc.chains):
            W, MU, S2 = _gibbs_arrays(data, prior, mc.iterations, mc.burn_in,
                                      _stream(mc.seed, 1, n, c), n, mc.thin)
            d = sup_distance_batch(W, MU, S2, f0, grid)
            dists.append(d)
            if draw_log is not None:
                for i in range(len(S2)):
                    draw_log.append({"n": n, "chain": c, "index": i,
                                     "weights": W[i].tolist(), "locations": MU[i].tolist(),
                                     "sigma2": float(S2[i]), "sup_distance": float(d[i])})
        dists = np.stack(dists)
        exceed = (dists > epsilon).astype(float)
        p = float(exceed.mean())
        if 0.0 < p < 1.0:
            se = math.sqrt(p * (1.0 - p) / effective_sample_size(exceed))
        else:
            se = 0.0
        entries.append(TraceEntry(n, float(epsilon), p, se, int(dists.size),
                                  effective_sample_size(dists)))
    return ConsistencyTrace(entries)
