"""Closed-form integral families vs quadrature oracles and frozen references.

The closed forms integrate the semi-linear surrogate exactly, so besides the
oracle comparisons we check them against direct quadrature of that surrogate,
which isolates implementation errors from approximation error.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from marq import (
    DomainError,
    GIntegralParams,
    TIntegralParams,
    approx_cdf,
    fit_corollary1,
    fit_lemma1,
    g_approx,
    g_exact,
    t0_approx,
    t_approx,
    t_exact,
    upper_incomplete_gamma,
)

# mpmath references (30 digits) for the damped-CDF integral at alpha = 2.
G_REFERENCE = [
    (4.0, 4.0, 0.0, 4.0108211507e-3),
    (2.0, 2.0, 0.0, 0.064018751906),
    (0.0, 1.0, 0.0, 0.151692054069),
]

T_REFERENCE = [
    (2.0, 1.0, 2.0, 0.0, math.inf, 0.662442051355832),
    (1.0, 0.5, 1.0, 0.0, math.inf, 0.511423741862382),
    (2.0, 0.0, 3.0, 0.0, 3.5, 3.14185971387116),
]


@pytest.mark.parametrize("m,n,rho,expected", G_REFERENCE)
def test_g_exact_reference(m, n, rho, expected):
    p = GIntegralParams(alpha=2.0, rho=rho, m=m, n=n)
    assert g_exact(p) == pytest.approx(expected, rel=1e-8)


def test_g_exact_deep_tail_is_gamma():
    # Far beyond the CDF transition the weight is effectively 1 and the
    # integral collapses to an upper incomplete gamma.
    p = GIntegralParams(alpha=2.0, rho=10.0, m=1.0, n=1.0)
    assert g_exact(p) == pytest.approx(upper_incomplete_gamma(2.0, 10.0),
                                       rel=1e-2)


def test_g_exact_vanishes_when_rho_huge():
    p = GIntegralParams(alpha=2.0, rho=52.0, m=1.0, n=1.0)
    assert g_exact(p) < 1e-12


def _g_surrogate(p, fit):
    val, _ = quad(lambda x: math.exp(-p.n * x) * x ** p.m
                  * float(approx_cdf(fit, x)),
                  p.rho, p.rho + 60.0, limit=400)
    return val


@pytest.mark.parametrize("m,n,rho", [(4.0, 4.0, 0.0), (2.0, 2.0, 1.0),
                                     (1.0, 1.0, 0.5)])
def test_g_approx_integrates_its_surrogate_exactly(m, n, rho):
    p = GIntegralParams(alpha=2.0, rho=rho, m=m, n=n)
    fit = fit_corollary1(2.0, use_bessel_asymptote=True)
    assert g_approx(p) == pytest.approx(_g_surrogate(p, fit), rel=1e-7)


def test_g_approx_upper_branch_is_single_gamma_term():
    fit = fit_corollary1(2.0, use_bessel_asymptote=True)
    rho = fit.c2 + 1.0
    p = GIntegralParams(alpha=2.0, rho=rho, m=1.0, n=1.0)
    expected = upper_incomplete_gamma(2.0, rho)
    assert g_approx(p) == pytest.approx(expected, rel=1e-10)


def test_g_approx_branch_continuity():
    fit = fit_corollary1(2.0, use_bessel_asymptote=True)
    for edge in (fit.c1, fit.c2):
        lo = g_approx(GIntegralParams(alpha=2.0, rho=edge - 1e-6, m=2.0, n=2.0))
        hi = g_approx(GIntegralParams(alpha=2.0, rho=edge + 1e-6, m=2.0, n=2.0))
        assert abs(lo - hi) < 1e-5  # integrand is bounded, so O(step) at worst


@pytest.mark.parametrize("alpha,m,a,t1,t2,expected", T_REFERENCE)
def test_t_exact_reference(alpha, m, a, t1, t2, expected):
    p = TIntegralParams(alpha=alpha, m=m, a=a, theta1=t1, theta2=t2)
    assert t_exact(p) == pytest.approx(expected, rel=1e-7)


def _t_surrogate(p, fit):
    hi = 200.0 if math.isinf(p.theta2) else p.theta2
    val, _ = quad(lambda x: math.exp(-p.m * x) * math.log(p.a * x + 1.0)
                  * (1.0 - float(approx_cdf(fit, x))),
                  p.theta1, hi, limit=500)
    return val


@pytest.mark.parametrize("alpha,m,a", [(1.0, 0.5, 1.0), (2.0, 1.0, 2.0),
                                       (3.0, 2.0, 5.0)])
def test_t_approx_integrates_its_surrogate_exactly(alpha, m, a):
    fit = fit_corollary1(alpha)
    p = TIntegralParams(alpha=alpha, m=m, a=a, theta1=0.0, theta2=math.inf)
    assert t_approx(p, fit) == pytest.approx(_t_surrogate(p, fit), rel=1e-7)


def test_t0_approx_matches_surrogate_and_oracle():
    fit = fit_corollary1(2.0)
    p = TIntegralParams(alpha=2.0, m=0.0, a=3.0, theta1=0.0,
                        theta2=float(fit.c2))
    val = t0_approx(p, fit)
    assert val == pytest.approx(_t_surrogate(p, fit), rel=1e-9)
    assert val == pytest.approx(t_exact(p), rel=0.05)


def test_t_range_above_upper_clamp_is_zero():
    fit = fit_lemma1(2.0)
    p = TIntegralParams(alpha=2.0, m=0.0, a=1.0, theta1=fit.c2 + 0.5,
                        theta2=fit.c2 + 2.0)
    assert t0_approx(p, fit) == pytest.approx(0.0, abs=1e-12)


def test_parameter_validation():
    with pytest.raises(DomainError):
        GIntegralParams(alpha=2.0, rho=0.0, m=1.0, n=0.0)  # needs n > 0
    with pytest.raises(DomainError):
        GIntegralParams(alpha=2.0, rho=-1.0, m=1.0, n=1.0)
    with pytest.raises(DomainError):
        TIntegralParams(alpha=2.0, m=1.0, a=0.0, theta1=0.0, theta2=1.0)
    with pytest.raises(DomainError):
        TIntegralParams(alpha=2.0, m=1.0, a=1.0, theta1=2.0, theta2=1.0)
    with pytest.raises(DomainError):
        # the undamped integrand needs a finite upper limit
        TIntegralParams(alpha=2.0, m=0.0, a=1.0, theta1=0.0, theta2=math.inf)
