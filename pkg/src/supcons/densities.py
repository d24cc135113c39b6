"""Finite location mixtures with a common scale, and their Fourier smoothness.

Each component is a product kernel over coordinates, so a ``d``-dimensional
Gaussian component is ``N(mu_j, sigma^2 I_d)`` and the Laplace and Cauchy
components are products of one-dimensional kernels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

__all__ = [
    "Family",
    "MixtureDensity",
    "SmoothnessClass",
    "evaluate",
    "pdf",
    "logpdf",
    "cdf",
    "characteristic_function",
    "kernel_ft",
    "fourier_envelope",
    "classify_smoothness",
    "sample",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"
    LAPLACE = "laplace"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown family {value!r}; expected one of "
                             f"{[f.value for f in cls]}") from None


@dataclass(frozen=True, eq=False)
class MixtureDensity:
    """``f(x) = sum_j w_j K((x - mu_j) / sigma) / sigma^d``.

    ``locations`` may be given as a flat sequence when ``dimension == 1``.
    """

    family: Family
    weights: np.ndarray
    locations: np.ndarray
    scale: float
    dimension: int = 1

    def __post_init__(self):
        family = Family.parse(self.family)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.asarray(self.locations, dtype=float)
        d = int(self.dimension)
        if d < 1:
            raise ValueError("dimension must be a positive integer")
        if mu.ndim <= 1:
            mu = mu.reshape(-1, d) if d > 1 else mu.reshape(-1, 1)
        if mu.ndim != 2 or mu.shape[1] != d:
            raise ValueError(f"locations must have length {d}")
        if w.size == 0:
            raise ValueError("a mixture needs at least one component")
        if mu.shape[0] != w.size:
            raise ValueError("weights and locations disagree on component count")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if not np.all(np.isfinite(mu)):
            raise ValueError("locations must be finite")
        scale = np.asarray(self.scale, dtype=float)
        if scale.ndim != 0:
            raise ValueError("a single common scale is required for all components")
        scale = float(scale)
        if not (scale > 0 and math.isfinite(scale)):
            raise ValueError("scale must be positive and finite")
        w.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "locations", mu)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "dimension", d)

    @property
    def k(self):
        return self.weights.size

    @classmethod
    def single(cls, family, loc=0.0, scale=1.0, dimension=1):
        loc = np.broadcast_to(np.asarray(loc, dtype=float), (dimension,))
        return cls(family, [1.0], loc.reshape(1, dimension), scale, dimension)

    def sup_bound(self):
        """Upper bound on ``sup_x f(x)`` from the component peak height."""
        peak = {Family.GAUSSIAN: math.exp(-_LOG_SQRT_2PI),
                Family.CAUCHY: 1.0 / math.pi,
                Family.LAPLACE: 0.5}[self.family]
        return (peak / self.scale) ** self.dimension

    def default_grid_bounds(self, width=10.0):
        """Per-axis ``(lower, upper)`` covering ``width`` scales past the locations."""
        lo = self.locations.min(axis=0) - width * self.scale
        hi = self.locations.max(axis=0) + width * self.scale
        return lo, hi

    def to_dict(self):
        return {
            "family": self.family.value,
            "weights": self.weights.tolist(),
            "locations": self.locations.tolist(),
            "scale": self.scale,
            "dimension": self.dimension,
        }


def _as_points(density, x):
    pts = np.asarray(x, dtype=float)
    d = density.dimension
    if d == 1 and pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[-1] != d:
        raise ValueError(f"points must have {d} coordinates")
    return pts


def _log_kernel(family, z):
    if family is Family.GAUSSIAN:
        return -0.5 * z * z - _LOG_SQRT_2PI
    if family is Family.CAUCHY:
        return -math.log(math.pi) - np.log1p(z * z)
    return -math.log(2.0) - np.abs(z)


def _component_logpdf(density, pts):
    # (m, k) array of log K((x - mu_j)/sigma) - d log sigma
    z = (pts[:, None, :] - density.locations[None, :, :]) / density.scale
    return (_log_kernel(density.family, z).sum(axis=-1)
            - density.dimension * math.log(density.scale))


def pdf(density, x):
    """Vectorized density at points of shape ``(m, d)`` (or ``(m,)`` when d=1).

    Component terms are sorted before summation, so the result does not depend
    on the order in which components are listed.
    """
    pts = _as_points(density, x)
    terms = density.weights[None, :] * np.exp(_component_logpdf(density, pts))
    return np.sort(terms, axis=1).sum(axis=1)


def logpdf(density, x):
    pts = _as_points(density, x)
    with np.errstate(divide="ignore"):
        lw = np.log(density.weights)
    a = lw[None, :] + _component_logpdf(density, pts)
    top = a.max(axis=1)
    top = np.where(np.isfinite(top), top, 0.0)
    s = np.sort(np.exp(a - top[:, None]), axis=1).sum(axis=1)
    with np.errstate(divide="ignore"):
        return top + np.log(s)


def _kernel_cdf(family, z):
    if family is Family.GAUSSIAN:
        return ndtr(z)
    if family is Family.CAUCHY:
        return 0.5 + np.arctan(z) / math.pi
    return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)),
                    1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))


def cdf(density, x):
    """Exact mixture cdf for ``d == 1``."""
    if density.dimension != 1:
        raise ValueError("cdf is only available for one-dimensional densities")
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - density.locations[:, 0]) / density.scale
    terms = density.weights * _kernel_cdf(density.family, z)
    out = np.sort(terms, axis=-1).sum(axis=-1)
    return np.clip(out, 0.0, 1.0)


def evaluate(density, x):
    """Return ``(pdf, cdf)`` at a single point; ``cdf`` is ``None`` when d > 1."""
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != density.dimension:
        raise ValueError(f"expected a {density.dimension}-vector")
    if not np.all(np.isfinite(pt)):
        raise ValueError("x must be finite")
    p = float(pdf(density, pt.reshape(1, -1))[0])
    c = float(cdf(density, pt[0])) if density.dimension == 1 else None
    return p, c


def kernel_ft(family, s):
    """Fourier transform of the standardized one-dimensional kernel (real, even)."""
    family = Family.parse(family)
    s = np.asarray(s, dtype=float)
    if family is Family.GAUSSIAN:
        return np.exp(-0.5 * s * s)
    if family is Family.CAUCHY:
        return np.exp(-np.abs(s))
    return 1.0 / (1.0 + s * s)


def characteristic_function(density, t):
    """``int exp(i t.x) f(x) dx`` at frequencies of shape ``(m, d)``."""
    t = _as_points(density, t)
    envelope = kernel_ft(density.family, density.scale * t).prod(axis=-1)
    phase = np.exp(1j * (t @ density.locations.T))
    return envelope * (phase @ density.weights)


@dataclass(frozen=True)
class SmoothnessClass:
    """Fourier envelope of a supersmooth or ordinary smooth density.

    Supersmooth: ``C exp(-C1 sigma^p sum_j |t_j|^alpha)`` where ``p`` is
    ``scale_power`` (2 in the standard definition, 1 for Cauchy mixtures whose
    transform decays like ``exp(-sigma |t|)``).
    Ordinary smooth: ``c prod_j 1 / (1 + sigma^2 |t_j|^beta)``.
    """

    tag: str
    order: float
    scale: float
    constants: dict = field(default_factory=dict)
    scale_power: float = 2.0

    def __post_init__(self):
        if self.tag not in ("supersmooth", "ordinary"):
            raise ValueError(f"unknown smoothness tag {self.tag!r}")
        if not self.order > 0 or not self.scale > 0:
            raise ValueError("order and scale must be positive")
        need = ("C", "C1") if self.tag == "supersmooth" else ("c",)
        for name in need:
            if not self.constants.get(name, 0) > 0:
                raise ValueError(f"constant {name} must be positive")

    @classmethod
    def supersmooth(cls, alpha, sigma, C=1.0, C1=0.5, scale_power=2.0):
        return cls("supersmooth", float(alpha), float(sigma),
                   {"C": float(C), "C1": float(C1)}, float(scale_power))

    @classmethod
    def ordinary(cls, beta, sigma, c=1.0):
        return cls("ordinary", float(beta), float(sigma), {"c": float(c)})

    @property
    def is_supersmooth(self):
        return self.tag == "supersmooth"


def fourier_envelope(cls, t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    a = np.abs(t)
    if cls.is_supersmooth:
        k = cls.constants
        expo = k["C1"] * cls.scale ** cls.scale_power * np.sum(a ** cls.order, axis=-1)
        return k["C"] * np.exp(-expo)
    return cls.constants["c"] * np.prod(1.0 / (1.0 + cls.scale ** 2 * a ** cls.order), axis=-1)


def classify_smoothness(density):
    """Smoothness class with constants read off the exact kernel transforms."""
    sigma = density.scale
    if density.family is Family.GAUSSIAN:
        return SmoothnessClass.supersmooth(2.0, sigma, C=1.0, C1=0.5)
    if density.family is Family.CAUCHY:
        return SmoothnessClass.supersmooth(1.0, sigma, C=1.0, C1=1.0, scale_power=1.0)
    return SmoothnessClass.ordinary(2.0, sigma, c=1.0)


def sample(density, n, seed):
    """``n`` i.i.d. draws as an ``(n, d)`` array; ``seed`` may be an int or Generator."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = density.dimension
    labels = rng.choice(density.k, size=n, p=density.weights)
    if density.family is Family.GAUSSIAN:
        z = rng.standard_normal((n, d))
    elif density.family is Family.CAUCHY:
        z = rng.standard_cauchy((n, d))
    else:
        z = rng.laplace(size=(n, d))
    return density.locations[labels] + density.scale * z
