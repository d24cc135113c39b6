"""Distances between mixture densities and between finite discrete measures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import ndtri

from .densities import Family, cdf, logpdf, pdf
from .smoother import default_grid

__all__ = [
    "DiscreteDistribution",
    "HolderParams",
    "density_distance",
    "kolmogorov_distance",
    "prokhorov_exact",
    "levy_distance",
    "ky_fan_quantile",
    "prokhorov_bracket",
    "quantile",
    "chae_smooth",
    "holder_sup_bound",
    "holder_optimal",
    "DISTANCE_KINDS",
]

DISTANCE_KINDS = ("sup", "L1", "Hellinger", "KL")
MAX_EXACT_ATOMS = 12


def _trapezoid(values, grid):
    vals = values.reshape([a.size for a in grid.axes()])
    for ax in reversed(grid.axes()):
        vals = np.trapezoid(vals, ax, axis=-1)
    return float(vals)


def density_distance(kind, f, g, grid=None):
    """Grid evaluation of ``sup``, ``L1``, ``Hellinger`` or ``KL(f || g)``.

    Hellinger is ``(1/2 int (sqrt f - sqrt g)^2)^(1/2)``, i.e.
    ``sqrt(1 - int sqrt(f g))`` for normalized densities; it lies in [0, 1].
    KL returns ``inf`` when ``g`` vanishes where ``f`` does not.
    """
    if f.dimension != g.dimension:
        raise ValueError("densities must share a dimension")
    grid = grid or default_grid(f, g)
    pts = grid.points()
    if kind == "sup":
        return float(np.max(np.abs(pdf(f, pts) - pdf(g, pts))))
    if kind == "L1":
        return _trapezoid(np.abs(pdf(f, pts) - pdf(g, pts)), grid)
    if kind == "Hellinger":
        diff = np.sqrt(pdf(f, pts)) - np.sqrt(pdf(g, pts))
        return math.sqrt(0.5 * _trapezoid(diff * diff, grid))
    if kind == "KL":
        lf, lg = logpdf(f, pts), logpdf(g, pts)
        fv = np.exp(lf)
        if np.any((fv > 0) & ~np.isfinite(lg)):
            return math.inf
        integrand = np.where(fv > 0, fv * (lf - lg), 0.0)
        return max(_trapezoid(integrand, grid), 0.0)
    raise ValueError(f"unknown distance kind {kind!r}; expected one of {DISTANCE_KINDS}")


def _require_1d(*densities):
    if any(f.dimension != 1 for f in densities):
        raise ValueError("only one-dimensional densities are supported")


def kolmogorov_distance(f, g, grid=None):
    """``max_grid |F - G|`` with exact component cdfs."""
    _require_1d(f, g)
    x = (grid or default_grid(f, g)).axes()[0]
    return float(np.max(np.abs(cdf(f, x) - cdf(g, x))))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms in R^d.

    Coordinates are kept as given (floats or ``Fraction``); :meth:`shift`
    works in exact rational arithmetic so shifted copies carry no rounding.
    """

    locations: tuple
    masses: tuple

    def __post_init__(self):
        locs = []
        for loc in self.locations:
            loc = tuple(loc) if np.ndim(loc) else (loc,)
            locs.append(tuple(v if isinstance(v, Fraction) else float(v) for v in loc))
        masses = tuple(float(m) for m in self.masses)
        if not locs or len(locs) != len(masses):
            raise ValueError("need one mass per atom and at least one atom")
        if len({len(loc) for loc in locs}) != 1:
            raise ValueError("atoms must share a dimension")
        if any(m < 0 for m in masses) or abs(math.fsum(masses) - 1.0) > 1e-12:
            raise ValueError("masses must be nonnegative and sum to 1")
        object.__setattr__(self, "locations", tuple(locs))
        object.__setattr__(self, "masses", masses)

    @property
    def size(self):
        return len(self.masses)

    @property
    def dimension(self):
        return len(self.locations[0])

    def shift(self, x):
        x = np.atleast_1d(x)
        if x.size == 1:
            x = np.repeat(x, self.dimension)
        off = [Fraction(v) if not isinstance(v, Fraction) else v for v in x.tolist()]
        locs = tuple(tuple(Fraction(a) + b for a, b in zip(loc, off)) for loc in self.locations)
        return DiscreteDistribution(locs, self.masses)


def _sq_dist(a, b):
    return sum((Fraction(u) - Fraction(v)) ** 2 for u, v in zip(a, b))


def _directed_prokhorov(P, Q):
    """Exact ``inf{eps : P(A) <= Q(A^eps) + eps for all A}`` as ``(eps^2, eps)``.

    For a fixed subset A the map ``eps -> Q(A^eps)`` is a step function that
    jumps just after each atom distance, so the infimum is either one of those
    distances or the mass gap ``P(A) - Q(A^eps)`` on a step. Squared
    distances keep every comparison rational.
    """
    pm = [Fraction(m) for m in P.masses]
    qm = [Fraction(m) for m in Q.masses]
    d2 = [[_sq_dist(q, a) for a in P.locations] for q in Q.locations]
    best = (Fraction(0), 0.0)
    # per-subset minimum squared distance from each Q atom, built incrementally
    near = {0: None}
    for mask in range(1, 1 << P.size):
        low = (mask & -mask).bit_length() - 1
        prev = near[mask & (mask - 1)]
        col = [row[low] for row in d2]
        cur = col if prev is None else [min(p, c) for p, c in zip(prev, col)]
        near[mask] = cur
        level = sum((pm[i] for i in range(P.size) if mask >> i & 1), Fraction(0))
        groups = itertools.groupby(sorted(zip(cur, qm)), key=lambda t: t[0])
        lo2 = Fraction(0)
        cand = None
        for dist2, members in groups:
            mass = sum((m for _, m in members), Fraction(0))
            if dist2 == 0:
                level -= mass
                continue
            # eps in (sqrt(lo2), sqrt(dist2)] sees the current level
            if level <= 0 or level * level <= lo2:
                cand = (lo2, None)
                break
            if level * level <= dist2:
                cand = (level * level, level)
                break
            level -= mass
            lo2 = dist2
        if cand is None:
            cand = (lo2, None) if level <= 0 or level * level <= lo2 else (level * level, level)
        if cand[0] > best[0]:
            val = math.sqrt(cand[0]) if cand[1] is None else float(cand[1])
            best = (cand[0], val)
    if best[0] > 1:
        return (Fraction(1), 1.0)
    return best


def prokhorov_exact(P, Q):
    """Prokhorov distance between two discrete laws (Euclidean ground metric).

    Brute force over subsets of each support, so at most 12 atoms per law.
    """
    if P.size > MAX_EXACT_ATOMS or Q.size > MAX_EXACT_ATOMS:
        raise ValueError(f"exact Prokhorov supports at most {MAX_EXACT_ATOMS} atoms per law")
    if P.dimension != Q.dimension:
        raise ValueError("laws must share a dimension")
    a = _directed_prokhorov(P, Q)
    b = _directed_prokhorov(Q, P)
    return max(a, b, key=lambda t: t[0])[1]


def levy_distance(f, g, grid=None, iters=60):
    """Lévy distance by bisection, with the defining inequalities checked on the grid."""
    _require_1d(f, g)
    x = (grid or default_grid(f, g)).axes()[0]
    G = cdf(g, x)

    def ok(eps):
        return bool(np.all(cdf(f, x - eps) - eps <= G) and np.all(G <= cdf(f, x + eps) + eps))

    if ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _kernel_quantile(family, u):
    if family is Family.GAUSSIAN:
        return ndtri(u)
    if family is Family.CAUCHY:
        return np.tan(math.pi * (u - 0.5))
    return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))


def quantile(f, u, iters=80):
    """Mixture quantile by vectorized bisection.

    The root is bracketed by the quantiles of the leftmost and rightmost
    components, since ``F(x) <= K((x - mu_min) / sigma)`` and symmetrically.
    """
    _require_1d(f)
    u = np.asarray(u, dtype=float)
    kq = _kernel_quantile(f.family, u)
    lo = f.locations.min() + f.scale * kq
    hi = f.locations.max() + f.scale * kq
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = cdf(f, mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def ky_fan_quantile(f, g, resolution=1 << 14):
    """Ky Fan distance ``inf{eps : |{u : |F^-1(u) - G^-1(u)| > eps}| <= eps}``.

    The Lebesgue measure on (0, 1) is approximated on ``resolution`` midpoints;
    one extra cell is charged whenever any cell exceeds eps.
    """
    _require_1d(f, g)
    u = (np.arange(resolution) + 0.5) / resolution
    D = np.sort(np.abs(quantile(f, u) - quantile(g, u)))[::-1]
    if D[0] == 0.0:
        return 0.0
    M = resolution
    ext = np.concatenate([[np.inf], D, [0.0]])
    # eps in [D_{k+1}, D_k): exactly k cells exceed eps
    k = np.arange(M + 1)
    eps = np.maximum(ext[k + 1], (k + (k > 0)) / M)
    best = min(1.0, float(np.min(eps[eps < ext[k]])))
    return float(best)


def prokhorov_bracket(f, g, grid=None):
    """``(lower, upper)`` with ``lower <= d_P(f, g) <= upper``.

    Lower is the Lévy distance; upper is the Ky Fan distance of the quantile
    coupling, which bounds the Prokhorov distance from above.
    """
    lower = levy_distance(f, g, grid)
    upper = ky_fan_quantile(f, g)
    return lower, max(lower, upper)


def chae_smooth(f, h, x):
    """``(F(x + h) - F(x - h)) / (2h)``."""
    _require_1d(f)
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    out = (cdf(f, x + h) - cdf(f, x - h)) / (2.0 * h)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HolderParams:
    h: float
    beta_H: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta_H <= 1:
            raise ValueError("beta_H must lie in (0, 1]")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")


def holder_sup_bound(dK, params):
    """``dK / h + 2 L h^beta_H`` (L = 1 is the unit-radius form)."""
    if dK < 0:
        raise ValueError("dK must be nonnegative")
    return dK / params.h + 2.0 * params.L * params.h ** params.beta_H


def holder_optimal(dK, beta_H=1.0, L=1.0):
    """Minimizing bandwidth and minimal bound, ``(h*, bound)``.

    Setting the h-derivative to zero gives ``h* = (dK / (2 L beta_H))^(1/(1+beta_H))``.
    """
    if dK < 0:
        raise ValueError("dK must be nonnegative")
    if dK == 0:
        return 0.0, 0.0
    h = (dK / (2.0 * L * beta_H)) ** (1.0 / (1.0 + beta_H))
    return h, holder_sup_bound(dK, HolderParams(h, beta_H, L))
