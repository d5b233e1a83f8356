"""Semi-linear approximation of the CDF 1 - Q1(alpha, beta).

The CDF is replaced by the tangent line through its steepest-slope point
(the anchor), clamped to 0 below a lower boundary c1 and to 1 above an upper
boundary c2.  Three fit families are provided: the full tangent construction
(LEMMA1), a moderate/large-alpha simplification anchored at beta0 = alpha in
exact and Bessel-asymptotic flavors (COROLLARY1_*), and a small-alpha
simplification anchored at beta0 = (alpha + sqrt(2))/2 (COROLLARY2).

Fit constructors are elementwise array-aware: passing an alpha array yields a
fit whose numeric fields are arrays of the same shape.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import DEFAULT_TOL, ToleranceConfig, bessel_i0_scaled, marcum_q1

__all__ = [
    "Variant",
    "SemiLinearFit",
    "fit_lemma1",
    "fit_corollary1",
    "fit_corollary2",
    "fit_auto",
    "approx_cdf",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Crossover used by fit_auto, from the visual agreement of the variants over
# the validation grids; configuration, not mathematics.
AUTO_SMALL_ALPHA_MAX = 1.0


class Variant(enum.Enum):
    LEMMA1 = "lemma1"
    COROLLARY1_EXACT = "corollary1"
    COROLLARY1_ASYMPTOTIC = "corollary1-asymptotic"
    COROLLARY2 = "corollary2"


@dataclass(frozen=True)
class SemiLinearFit:
    """Anchor point, slope and clamp boundaries of one semi-linear fit.

    (o1, o2, o3) are the generalized line coefficients: the mid branch is
    o1 * (beta - o2) + o3.  For every variant o1 is the slope, o2 the anchor
    abscissa beta0 and o3 the CDF value at the anchor.
    """

    alpha: float
    beta0: float
    slope: float
    y0: float
    c1: float
    c2: float
    variant: Variant
    o1: float
    o2: float
    o3: float


def _anchor_slope(alpha, beta0):
    """CDF slope beta0 e^{-(alpha^2+beta0^2)/2} I0(alpha*beta0), in log space."""
    return beta0 * np.exp(-0.5 * (alpha - beta0) ** 2) * bessel_i0_scaled(alpha * beta0)


def _check_alpha(alpha, *, positive=False):
    arr = np.asarray(alpha, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("alpha must be finite")
    if positive:
        if np.any(arr <= 0):
            raise DomainError("alpha must be positive for this variant")
    elif np.any(arr < 0):
        raise DomainError("alpha must be nonnegative")
    return arr if np.ndim(alpha) else float(arr)


def fit_lemma1(alpha, tol: ToleranceConfig = DEFAULT_TOL) -> SemiLinearFit:
    """Tangent-line fit at the steepest-slope point of the CDF."""
    a = _check_alpha(alpha)
    beta0 = 0.5 * (a + np.sqrt(a * a + 2.0))
    slope = _anchor_slope(a, beta0)
    q0 = marcum_q1(a, beta0, tol)
    y0 = 1.0 - q0
    c1 = np.maximum(0.0, beta0 + (q0 - 1.0) / slope)
    c2 = beta0 + q0 / slope
    return SemiLinearFit(a, beta0, slope, y0, c1, c2, Variant.LEMMA1, slope, beta0, y0)


def fit_corollary1(alpha, use_bessel_asymptote: bool = False,
                   tol: ToleranceConfig = DEFAULT_TOL) -> SemiLinearFit:
    """Moderate/large-alpha fit anchored at beta0 = alpha.

    With ``use_bessel_asymptote`` the slope becomes the constant 1/sqrt(2*pi)
    and the anchor ordinate uses the large-argument form of I0.
    """
    a = _check_alpha(alpha, positive=True)
    beta0 = a * 1.0
    if use_bessel_asymptote:
        slope = np.full_like(np.asarray(a, dtype=float), 1.0 / _SQRT_2PI) if np.ndim(a) else 1.0 / _SQRT_2PI
        y0 = 0.5 * (1.0 - 1.0 / (_SQRT_2PI * a))
        variant = Variant.COROLLARY1_ASYMPTOTIC
    else:
        s = bessel_i0_scaled(a * a)  # e^{-alpha^2} I0(alpha^2)
        slope = a * s
        y0 = 0.5 * (1.0 - s)
        variant = Variant.COROLLARY1_EXACT
    c1 = np.maximum(0.0, beta0 - y0 / slope)
    c2 = beta0 + (1.0 - y0) / slope
    return SemiLinearFit(a, beta0, slope, y0, c1, c2, variant, slope, beta0, y0)


def fit_corollary2(alpha, tol: ToleranceConfig = DEFAULT_TOL) -> SemiLinearFit:
    """Small-alpha fit anchored at beta0 = (alpha + sqrt(2)) / 2.

    The clamp boundaries follow the small-alpha closed forms, whose reference
    point is alpha rather than beta0; they therefore do not coincide with the
    zero/one crossings of the mid-branch line (the mid branch is clamped to
    [0, 1] by approx_cdf regardless).
    """
    a = _check_alpha(alpha)
    beta0 = 0.5 * (a + math.sqrt(2.0))
    slope = _anchor_slope(a, beta0)
    q0 = marcum_q1(a, beta0, tol)
    y0 = 1.0 - q0
    denom = beta0 * slope  # beta0^2 e^{-(alpha^2+beta0^2)/2} I0(alpha*beta0)
    c1 = np.maximum(0.0, (q0 - 1.0) / denom + a)
    c2 = q0 / denom + a
    return SemiLinearFit(a, beta0, slope, y0, c1, c2, Variant.COROLLARY2, slope, beta0, y0)


def fit_auto(alpha, tol: ToleranceConfig = DEFAULT_TOL) -> SemiLinearFit:
    """Pick the simplified variant suited to alpha's range (scalars only)."""
    a = _check_alpha(alpha)
    if np.ndim(a):
        raise DomainError("fit_auto expects a scalar alpha; batch callers split by range")
    if a < AUTO_SMALL_ALPHA_MAX:
        return fit_corollary2(a, tol)
    return fit_corollary1(a, tol=tol)


def approx_cdf(fit: SemiLinearFit, beta):
    """Evaluate the semi-linear CDF approximation at beta >= 0."""
    b = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(b)):
        raise DomainError("beta must be finite")
    if np.any(b < 0):
        raise DomainError("beta must be nonnegative")
    line = np.clip(fit.o1 * (b - fit.o2) + fit.o3, 0.0, 1.0)
    out = np.where(b < fit.c1, 0.0, np.where(b > fit.c2, 1.0, line))
    return float(out[()]) if (np.ndim(beta) == 0 and np.ndim(fit.alpha) == 0) else out
