import math

import numpy as np
import pytest

from conftest import random_mixture
from supcons.bounds import (
    F0Assumption,
    check_f0_assumption,
    gaussian_tail_integral,
    normal_mixture_bound,
    prop1_bound,
    prop1_valid,
)
from supcons.densities import MixtureDensity, SmoothnessClass, classify_smoothness
from supcons.errors import AssumptionViolation
from supcons.smoother import SmootherConfig, sup_error_empirical

SLACK = 10.0


def test_envelope_plug_in_values():
    ss = SmoothnessClass.supersmooth(2.0, 1.0, C=1.0, C1=0.5)
    assert prop1_bound(ss, 1, 3.0) == pytest.approx(math.exp(-4.5), rel=1e-14)
    assert prop1_bound(ss, 1, 3.0) == pytest.approx(0.0111090, abs=1e-7)
    od = SmoothnessClass.ordinary(2.0, 1.0, c=1.0)
    assert prop1_bound(od, 1, 10.0) == pytest.approx(0.1, rel=1e-15)
    assert prop1_bound(od, 1, 10.0, C=3.0) == pytest.approx(0.3, rel=1e-15)


def test_envelope_dimension_and_domain():
    od = SmoothnessClass.ordinary(4.0, 0.5)
    # sigma^(2 + 2(d-1)/beta) with d = 3, beta = 4 is 0.5^3
    assert prop1_bound(od, 3, 2.0) == pytest.approx(1.0 / (0.5 ** 3 * 8.0), rel=1e-14)
    with pytest.raises(ValueError):
        prop1_bound(SmoothnessClass.ordinary(1.0, 1.0), 1, 2.0)
    with pytest.raises(ValueError):
        prop1_bound(od, 1, 0.0)
    ss = SmoothnessClass.supersmooth(2.0, 1.0)
    assert not prop1_valid(ss, 1.0, C_prime=2.0) and prop1_valid(ss, 2.0, C_prime=2.0)
    assert prop1_valid(od, 0.1, C_prime=5.0)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_supersmooth_branch_decreasing(alpha):
    cls = SmoothnessClass.supersmooth(alpha, 0.3)  # no underflow up to R = 20
    vals = [prop1_bound(cls, 1, R) for R in range(1, 21)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_normal_mixture_plug_in():
    assert normal_mixture_bound(1.0, 3.0) == pytest.approx(0.0011787, abs=5e-8)
    assert normal_mixture_bound(1.0, 1.0) == pytest.approx(math.exp(-0.5) / math.pi, rel=1e-15)
    assert normal_mixture_bound(1.0, 1.0) == pytest.approx(0.1930647, abs=1e-7)
    with pytest.raises(ValueError):
        normal_mixture_bound(0.0, 1.0)


def test_tail_integral_below_normal_bound():
    # the envelope comes from int_R^inf e^{-sigma^2 s^2/2} ds <= e^{-sigma^2 R^2/2} / (sigma^2 R)
    for sigma in (0.5, 1.0, 2.0):
        for R in (0.5, 1.0, 4.0, 10.0):
            tail = gaussian_tail_integral(sigma, R)
            assert tail <= math.pi * normal_mixture_bound(sigma, R) * (1 + 1e-14)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("R", [1.0, 2.0, 4.0])
def test_normal_bound_dominates_empirical(sigma, R):
    f = MixtureDensity.single("gaussian", scale=sigma)
    # the tail route resolves errors below double precision (2.5e-16 at sigma=2, R=4)
    err = sup_error_empirical(f, SmootherConfig(R), method="tail")
    assert err <= normal_mixture_bound(sigma, R)
    if err > 1e-12:
        assert abs(sup_error_empirical(f, SmootherConfig(R)) - err) < 1e-13


def test_normal_bound_ignores_weights_and_locations():
    rng = np.random.default_rng(8)
    for R in (1.0, 2.0, 3.0):
        for _ in range(5):
            f = random_mixture(rng, "gaussian", scale=1.0)
            assert sup_error_empirical(f, SmootherConfig(R)) < normal_mixture_bound(1.0, R)


@pytest.mark.parametrize("family", ["gaussian", "cauchy", "laplace"])
def test_envelope_dominance_with_slack(family):
    f = MixtureDensity.single(family)
    cls = classify_smoothness(f)
    ratios = []
    for R in (4.0, 8.0, 16.0):
        err = sup_error_empirical(f, SmootherConfig(R), method="tail")
        ratios.append(err / prop1_bound(cls, 1, R))
    print(f"{family}: empirical / envelope = {ratios}")
    assert max(ratios) <= SLACK


def test_f0_assumption_normal():
    res = check_f0_assumption(MixtureDensity.single("gaussian"), [2.0, 4.0, 8.0], SmootherConfig(1.0))
    assert isinstance(res, F0Assumption)
    assert res.C_bar <= 1 / math.pi
    assert res.R0 == 2.0


def test_f0_assumption_laplace():
    f = MixtureDensity.single("laplace")
    R_list = [4.0, 8.0, 16.0]
    res = check_f0_assumption(f, R_list, SmootherConfig(1.0))
    prods = [R * e for R, e in zip(R_list, res.eps_values)]
    assert res.C_bar == pytest.approx(max(prods), rel=1e-15)
    assert res.C_bar < 1 / math.pi


def test_f0_assumption_inputs():
    with pytest.raises(ValueError):
        check_f0_assumption(MixtureDensity.single("gaussian"), [], SmootherConfig(1.0))
    with pytest.raises(ValueError):
        check_f0_assumption(MixtureDensity.single("gaussian"), [4.0, 2.0], SmootherConfig(1.0))
    with pytest.raises(ValueError):
        F0Assumption(0.0, 1.0)


def test_f0_assumption_violation(monkeypatch):
    # eps_R of order R^-0.5 makes R eps_R grow like sqrt(R)
    monkeypatch.setattr("supcons.bounds.sup_error_empirical", lambda f, cfg: cfg.R ** -0.5)
    with pytest.raises(AssumptionViolation) as info:
        check_f0_assumption(None, [1.0, 2.0, 4.0, 8.0, 16.0], SmootherConfig(1.0))
    assert [R for R, _ in info.value.pairs] == [4.0, 8.0, 16.0]
