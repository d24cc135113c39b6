"""Error envelopes for ``sup |f_R - f|`` and the ``eps_R <= C_bar / R`` check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation
from .smoother import sup_error_empirical

__all__ = [
    "F0Assumption",
    "prop1_bound",
    "prop1_valid",
    "normal_mixture_bound",
    "gaussian_tail_integral",
    "check_f0_assumption",
]


def prop1_bound(cls, d, R, C=None):
    """Smoothness-class envelope on ``sup_x |f_R(x) - f(x)|``.

    Supersmooth of order alpha::

        C R^max(1 - alpha, 0) / sigma^(2d) * exp(-C1 sigma^p R^alpha)

    Ordinary smooth of order beta > 1::

        c / (sigma^(2 + 2(d - 1)/beta) R^(beta - 1))

    The leading constant defaults to the class's ``C`` (resp. ``c``); pass
    ``C`` to override it. The supersmooth form is only claimed for large R,
    see :func:`prop1_valid`.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if d < 1:
        raise ValueError("d must be a positive integer")
    sigma = cls.scale
    if cls.is_supersmooth:
        alpha = cls.order
        lead = cls.constants["C"] if C is None else C
        expo = cls.constants["C1"] * sigma ** cls.scale_power * R ** alpha
        return lead * R ** max(1.0 - alpha, 0.0) / sigma ** (2 * d) * math.exp(-expo)
    beta = cls.order
    if beta <= 1:
        raise ValueError(f"ordinary smooth bound needs beta > 1 to decay (got {beta})")
    lead = cls.constants["c"] if C is None else C
    return lead / (sigma ** (2 + 2 * (d - 1) / beta) * R ** (beta - 1))


def prop1_valid(cls, R, C_prime=0.0):
    """Whether ``R`` lies in the configured range where the envelope is claimed."""
    return (not cls.is_supersmooth) or R >= C_prime


def normal_mixture_bound(sigma, R):
    """``exp(-sigma^2 R^2 / 2) / (pi sigma^2 R)``; holds for any weights and locations."""
    if not (sigma > 0 and R > 0):
        raise ValueError("sigma and R must be positive")
    return math.exp(-0.5 * sigma * sigma * R * R) / (math.pi * sigma * sigma * R)


def gaussian_tail_integral(sigma, R):
    """``int_R^inf exp(-sigma^2 s^2 / 2) ds`` in closed form."""
    return math.sqrt(math.pi / 2.0) / sigma * math.erfc(sigma * R / math.sqrt(2.0))


@dataclass
class F0Assumption:
    C_bar: float
    R0: float
    R_values: list = field(default_factory=list)
    eps_values: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("C_bar", "R0"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite")


def check_f0_assumption(f0, R_list, config, slope_tol=0.1, noise_floor=1e-13):
    """Fit ``C_bar = max_R R * eps_R`` over ``R_list`` and test the ``1/R`` decay.

    The check fails when ``R * eps_R`` keeps growing over the upper half of
    ``R_list`` with log-log slope above ``slope_tol``. Errors below
    ``noise_floor`` count as satisfied, since there they are quadrature noise.
    """
    R_list = [float(r) for r in R_list]
    if not R_list:
        raise ValueError("R_list must be nonempty")
    if any(b <= a for a, b in zip(R_list, R_list[1:])) or R_list[0] <= 0:
        raise ValueError("R_list must be positive and strictly increasing")
    eps = [sup_error_empirical(f0, config.with_R(R)) for R in R_list]
    prod = [R * e for R, e in zip(R_list, eps)]
    top = [(R, p) for R, p in zip(R_list[len(R_list) // 2:], prod[len(prod) // 2:])
           if p / R > noise_floor]
    if len(top) >= 2:
        rising = all(b[1] > a[1] for a, b in zip(top, top[1:]))
        slope = (math.log(top[-1][1] / top[0][1])
                 / math.log(top[-1][0] / top[0][0]))
        if rising and slope > slope_tol:
            pairs = [(R, p / R) for R, p in top]
            raise AssumptionViolation(
                f"R * eps_R grows with log-log slope {slope:.3f} > {slope_tol}", pairs)
    C_bar = max(max(prod), np.finfo(float).tiny)
    return F0Assumption(C_bar, R_list[0], R_list, eps)
