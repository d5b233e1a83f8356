"""Closed-form evaluation of two Marcum-Q integral families, with oracles.

G(alpha, rho)          = int_rho^inf  e^{-n x} x^m (1 - Q1(alpha, x)) dx
T(alpha, m, a, t1, t2) = int_t1^t2    e^{-m x} log(1 + a x) Q1(alpha, x) dx

``g_approx`` replaces 1 - Q1 by the large-alpha asymptotic semi-linear fit
and integrates the result exactly in terms of upper incomplete gamma
functions.  ``t_approx`` (m > 0) and ``t0_approx`` (m = 0) replace Q1 by the
complement of the tangent-line fit and integrate each weight segment with the
antiderivatives F1/F2 (resp. F3/F4).  ``g_exact`` and ``t_exact`` are
adaptive-quadrature oracles of the defining integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AccuracyError, DomainError
from .semilinear import SemiLinearFit, fit_corollary1
from .specfun import (
    DEFAULT_TOL,
    ToleranceConfig,
    marcum_q1,
    scaled_exp_e1,
    upper_incomplete_gamma,
)

__all__ = [
    "GIntegralParams",
    "TIntegralParams",
    "LineCoeffs",
    "line_coeffs",
    "g_exact",
    "g_approx",
    "t_exact",
    "t_approx",
    "t0_approx",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GIntegralParams:
    alpha: float
    rho: float
    m: float
    n: float

    def __post_init__(self):
        for name in ("alpha", "rho", "m", "n"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise DomainError(f"{name} must be a finite number")
        if self.alpha < 0 or self.rho < 0 or self.m < 0:
            raise DomainError("alpha, rho and m must be nonnegative")
        if self.n <= 0:
            raise DomainError("exponential rate n must be positive")


@dataclass(frozen=True)
class TIntegralParams:
    alpha: float
    m: float
    a: float
    theta1: float
    theta2: float

    def __post_init__(self):
        for name in ("alpha", "m", "a", "theta1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise DomainError(f"{name} must be a finite number")
        if math.isnan(self.theta2):
            raise DomainError("theta2 must not be NaN")
        if self.alpha < 0 or self.m < 0:
            raise DomainError("alpha and m must be nonnegative")
        if self.a <= 0:
            raise DomainError("rate-log coefficient a must be positive")
        if not (self.theta2 > self.theta1 >= 0):
            raise DomainError("integration limits require theta2 > theta1 >= 0")
        if math.isinf(self.theta2) and self.m <= 0:
            raise DomainError("theta2 = inf requires m > 0")


@dataclass(frozen=True)
class LineCoeffs:
    """Coefficients of the linear segment of Q1(alpha, x) ~ n2 * x + n1."""

    n1: float
    n2: float


def line_coeffs(fit: SemiLinearFit) -> LineCoeffs:
    """Linear-segment coefficients induced by a semi-linear fit.

    On [c1, c2] the fit approximates Q1(alpha, x) = 1 - Z(alpha, x) by
    slope*beta0 + Q1(alpha, beta0) - slope*x.
    """
    n2 = -fit.slope
    n1 = fit.slope * fit.beta0 + (1.0 - fit.y0)
    return LineCoeffs(n1=float(n1), n2=float(n2))


# ---------------------------------------------------------------------------
# G family
# ---------------------------------------------------------------------------

def _g_truncation_point(p: GIntegralParams, abs_tol: float) -> float:
    """Upper limit X with tail bound Gamma(m+1, nX) / n^(m+1) < abs_tol."""
    x = max(p.rho, (p.m + 1.0) / p.n, 1.0)
    step = max(1.0, 5.0 / p.n)
    for _ in range(10_000):
        if upper_incomplete_gamma(p.m + 1.0, p.n * x) * p.n ** (-p.m - 1.0) < 0.5 * abs_tol:
            return x
        x += step
    raise AccuracyError("could not locate a truncation point for g_exact")


def g_exact(p: GIntegralParams, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Adaptive quadrature of the defining G integral (the oracle)."""
    upper = _g_truncation_point(p, tol.abs_tol)
    if upper <= p.rho:
        return 0.0

    def integrand(x):
        return math.exp(-p.n * x) * x ** p.m * (1.0 - marcum_q1(p.alpha, x, tol))

    val, err = integrate.quad(
        integrand, p.rho, upper,
        epsabs=0.1 * tol.abs_tol, epsrel=tol.rel_tol,
        limit=tol.max_subdivisions,
    )
    if err > max(100.0 * tol.abs_tol, 1e-6 * abs(val)):
        raise AccuracyError("g_exact quadrature did not converge", achieved_error=err)
    return val


def g_approx(p: GIntegralParams) -> float:
    """Two-branch closed form of the G integral.

    Uses the Bessel-asymptotic large-alpha clamps; the fidelity degrades for
    small alpha by construction and is reported, not patched.
    """
    fit = fit_corollary1(p.alpha, use_bessel_asymptote=True)
    c2 = fit.c2
    npow1 = p.n ** (-p.m - 1.0)
    if p.rho >= c2:
        return upper_incomplete_gamma(p.m + 1.0, p.n * p.rho) * npow1
    lo = max(fit.c1, p.rho)
    g1_lo = upper_incomplete_gamma(p.m + 1.0, p.n * lo)
    g1_c2 = upper_incomplete_gamma(p.m + 1.0, p.n * c2)
    g2_lo = upper_incomplete_gamma(p.m + 2.0, p.n * lo)
    g2_c2 = upper_incomplete_gamma(p.m + 2.0, p.n * c2)
    const = -p.alpha / _SQRT_2PI + 0.5 * (1.0 - 1.0 / (_SQRT_2PI * p.alpha))
    return (
        g1_c2 * npow1
        + const * npow1 * (g1_lo - g1_c2)
        + (g2_lo - g2_c2) * p.n ** (-p.m - 2.0) / _SQRT_2PI
    )


# ---------------------------------------------------------------------------
# T family
# ---------------------------------------------------------------------------

def t_exact(p: TIntegralParams, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Adaptive quadrature of the defining T integral (the oracle).

    For theta2 = inf the integral is truncated where both the e^{-mx} factor
    and the super-exponential Q1 tail make the remainder negligible.
    """
    if math.isinf(p.theta2):
        upper = max(p.theta1, p.alpha) + 45.0 + 40.0 / p.m
    else:
        upper = p.theta2

    def integrand(x):
        return math.exp(-p.m * x) * math.log1p(p.a * x) * marcum_q1(p.alpha, x, tol)

    val, err = integrate.quad(
        integrand, p.theta1, upper,
        epsabs=0.1 * tol.abs_tol, epsrel=tol.rel_tol,
        limit=tol.max_subdivisions,
    )
    if err > max(100.0 * tol.abs_tol, 1e-6 * abs(val)):
        raise AccuracyError("t_exact quadrature did not converge", achieved_error=err)
    return val


def _f1(x, m, a):
    """Antiderivative of e^{-mx} log(1+ax); vanishes as x -> inf."""
    u = m * x + m / a
    return -(math.exp(-m * x) / m) * (scaled_exp_e1(u) + math.log1p(a * x))


def _f2(x, m, a, n1, n2):
    """Antiderivative of (n2 x + n1) e^{-mx} log(1+ax); vanishes as x -> inf."""
    u = m * x + m / a
    poly = m * n2 * x + m * n1 + n2
    return (math.exp(-m * x) / (m * m)) * (
        -poly * math.log1p(a * x)
        - n2
        - (m * n1 + n2 - m * n2 / a) * scaled_exp_e1(u)
    )


def _f3(x, a):
    """Antiderivative of log(1+ax)."""
    return (a * x + 1.0) * (math.log1p(a * x) - 1.0) / a


def _f4(x, a, n1, n2):
    """Antiderivative of (n2 x + n1) log(1+ax)."""
    ax = a * x
    first = n2 * ((2.0 * ax * ax - 2.0) * math.log1p(ax) - ax * ax + 2.0 * ax) / (4.0 * a * a)
    return first + n1 * (ax + 1.0) * (math.log1p(ax) - 1.0) / a


def _segments(p: TIntegralParams, fit: SemiLinearFit, f_full, f_linear) -> float:
    """Integrate weight-1 over [theta1, c1] and the line over [c1, c2].

    Beyond c2 the approximated Q1 is zero, so the piecewise antiderivatives
    telescope over any split of (theta1, theta2).
    """
    c1, c2 = float(fit.c1), float(fit.c2)
    total = 0.0
    hi1 = min(p.theta2, c1)
    if hi1 > p.theta1:
        total += f_full(hi1) - f_full(p.theta1)
    lo2 = max(p.theta1, c1)
    hi2 = min(p.theta2, c2)
    if hi2 > lo2:
        total += f_linear(hi2) - f_linear(lo2)
    return total


def t_approx(p: TIntegralParams, fit: SemiLinearFit) -> float:
    """Closed-form T integral for m > 0 using the tangent-line fit."""
    if p.m <= 0:
        raise DomainError("t_approx requires m > 0; use t0_approx for m = 0")
    lc = line_coeffs(fit)
    return _segments(
        p, fit,
        lambda x: _f1(x, p.m, p.a),
        lambda x: _f2(x, p.m, p.a, lc.n1, lc.n2),
    )


def t0_approx(p: TIntegralParams, fit: SemiLinearFit) -> float:
    """Closed-form T integral for m = 0 on a finite range."""
    if p.m != 0:
        raise DomainError("t0_approx requires m = 0; use t_approx for m > 0")
    if math.isinf(p.theta2):
        raise DomainError("t0_approx requires a finite theta2")
    lc = line_coeffs(fit)
    return _segments(
        p, fit,
        lambda x: _f3(x, p.a),
        lambda x: _f4(x, p.a, lc.n1, lc.n2),
    )
