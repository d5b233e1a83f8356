"""Rate-allocation policies for the predictor-antenna link.

For each predicted gain g_hat the transmitter picks a rate; decoding succeeds
when log(1 + g P) reaches it.  Policies:

* closed-form rate from the Lambert-W solution of the semi-linear
  approximation of the throughput objective; when the solution leaves the
  fit's linear region the policy either re-maximizes the clamped approximated
  objective on a grid ("rescue", no oracle involved) or falls back to the
  exact search,
* golden-section search on the exact throughput (the oracle),
* the fixed-rate no-CSIT baseline, and
* the genie bound with perfect instantaneous channel knowledge.

All rates are in nats per channel use (npcu); conversion to bits is a
presentation concern (divide by ln 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .pa_model import conditional_gain_cdf
from .semilinear import (
    AUTO_SMALL_ALPHA_MAX,
    fit_corollary1,
    fit_corollary2,
    fit_lemma1,
)
from .specfun import DEFAULT_TOL, ToleranceConfig, lambert_w0, marcum_q1, scaled_exp_e1

__all__ = [
    "Policy",
    "RateDecision",
    "gain_threshold",
    "instantaneous_throughput",
    "conditional_outage",
    "optimal_rate_lemma4",
    "optimal_rate_exact",
    "lemma4_rate_batch",
    "exact_rate_batch",
    "adaptive_rate_batch",
    "no_adaptation_rate",
    "no_adaptation_throughput",
    "genie_throughput",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Policy(enum.Enum):
    LEMMA4_APPROX = "lemma4"
    EXACT_SEARCH = "exact"
    NO_ADAPTATION = "no-adaptation"
    GENIE = "genie"


@dataclass(frozen=True)
class RateDecision:
    """One rate choice together with its conditional outage probability."""

    rate: float
    policy: Policy
    conditional_outage: float
    rescued: bool = False
    used_fallback: bool = False
    rate_zero_flag: bool = False

    def __post_init__(self):
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise DomainError("rate must be finite and nonnegative")
        if not 0.0 <= self.conditional_outage <= 1.0:
            raise DomainError("conditional_outage must lie in [0, 1]")


def _check_scenario_args(g_hat, sigma, power):
    g = np.asarray(g_hat, dtype=float)
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        raise DomainError("g_hat must be finite and nonnegative")
    if not (math.isfinite(sigma) and 0.0 <= sigma <= 1.0):
        raise DomainError("sigma must lie in [0, 1]")
    if not (math.isfinite(power) and power > 0):
        raise DomainError("power must be positive")
    return g


def gain_threshold(rate, power):
    """Smallest gain that decodes the given rate: (e^rate - 1) / P."""
    return np.expm1(rate) / power


def _beta_of_rate(rate, sigma, power):
    return np.sqrt(2.0 * np.expm1(rate) / (power * sigma * sigma))


def _rate_of_beta(beta, sigma, power):
    return np.log1p(0.5 * power * sigma * sigma * beta * beta)


def instantaneous_throughput(rate, g_hat, sigma, power,
                             tol: ToleranceConfig = DEFAULT_TOL):
    """Expected decoded rate for one predicted gain: rate * P(decoding).

    P(decoding) = Q1(sqrt(2 g_hat / sigma^2), beta(rate)); at sigma = 0 the
    gain is deterministic and the probability is a step.
    """
    g = _check_scenario_args(g_hat, sigma, power)
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("rate must be finite and nonnegative")
    scalar = r.ndim == 0 and g.ndim == 0
    if sigma == 0.0:
        out = r * (gain_threshold(r, power) <= g)
    else:
        alpha = np.sqrt(2.0 * g) / sigma
        out = r * marcum_q1(alpha, _beta_of_rate(r, sigma, power), tol)
    return float(np.asarray(out)[()]) if scalar else out


def conditional_outage(rate, g_hat, sigma, power,
                       tol: ToleranceConfig = DEFAULT_TOL):
    """Probability that the realized gain cannot decode the given rate."""
    g = _check_scenario_args(g_hat, sigma, power)
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("rate must be finite and nonnegative")
    return conditional_gain_cdf(gain_threshold(r, power), g, sigma, tol)


# ---------------------------------------------------------------------------
# Closed-form rate (Lambert-W solution of the semi-linear objective)
# ---------------------------------------------------------------------------

_FIT_BUILDERS = {
    "lemma1": fit_lemma1,
    "corollary1": fit_corollary1,
    "corollary2": fit_corollary2,
}


def _fit_fields(alpha, variant, tol):
    """(o1, o2, o3, c1, c2) arrays of the requested fit family at alpha."""
    a = np.asarray(alpha, dtype=float)
    if variant == "auto":
        # Small-alpha and moderate/large-alpha fits each hold on their own
        # range; stitch them at the crossover.
        o1 = np.empty_like(a)
        o2 = np.empty_like(a)
        o3 = np.empty_like(a)
        c1 = np.empty_like(a)
        c2 = np.empty_like(a)
        small = a < AUTO_SMALL_ALPHA_MAX
        for mask, builder in ((small, fit_corollary2), (~small, fit_corollary1)):
            if np.any(mask):
                f = builder(a[mask], tol=tol)
                o1[mask], o2[mask], o3[mask] = f.o1, f.o2, f.o3
                c1[mask], c2[mask] = f.c1, f.c2
        return o1, o2, o3, c1, c2
    try:
        builder = _FIT_BUILDERS[variant]
    except KeyError:
        raise DomainError(f"unknown fit variant {variant!r}") from None
    f = builder(a, tol=tol)
    ones = np.ones_like(a)
    return (np.asarray(f.o1) * ones, np.asarray(f.o2) * ones,
            np.asarray(f.o3) * ones, np.asarray(f.c1) * ones,
            np.asarray(f.c2) * ones)


def lemma4_rate_batch(g_hat, sigma, power, variant: str = "auto",
                      tol: ToleranceConfig = DEFAULT_TOL):
    """Closed-form rates for an array of predicted gains.

    Solves the first-order condition of the linearized throughput objective:
    (R/2 + 1) e^{R/2 + 1} = (1 + o1 o2 - o3) e sqrt(2 P sigma^2) / (2 o1),
    hence R = 2 W(arg) - 2, clamped to >= 0.

    Returns (rates, zero_flags, invalid) where zero_flags marks draws whose
    unclamped solution was negative (rate clamped to 0) and invalid marks
    draws needing out-of-region handling: the threshold beta(R) left the
    fit's linear region [c1, c2], the clamp fired, or the rate is too small
    for the e^R - 1 = e^R simplification behind the closed form.
    """
    g = _check_scenario_args(g_hat, sigma, power)
    g = np.atleast_1d(g)
    if sigma == 0.0:
        rates = np.log1p(power * g)
        flags = np.zeros(g.shape, dtype=bool)
        return rates, flags, flags.copy()
    alpha = np.sqrt(2.0 * g) / sigma
    o1, o2, o3, c1, c2 = _fit_fields(alpha, variant, tol)
    warg = (1.0 + o1 * o2 - o3) * math.e * math.sqrt(2.0 * power * sigma * sigma) \
        / (2.0 * o1)
    raw = 2.0 * lambert_w0(warg) - 2.0
    zero_flags = raw < 0.0
    rates = np.maximum(0.0, raw)
    beta_r = _beta_of_rate(rates, sigma, power)
    invalid = zero_flags | (beta_r < c1) | (beta_r > c2) | (raw < _LOW_RATE_LIMIT)
    return rates, zero_flags, invalid


# Below this rate the dropped -1/-2 terms in the closed form's derivation
# are no longer negligible relative to e^R.
_LOW_RATE_LIMIT = 1.0

_RESCUE_POINTS = 65


def _rescue_rates(g_sub, sigma, power, variant, tol):
    """Maximize the clamped semi-linear objective over beta in [c1, c2].

    Used when the closed form lands outside the linear region; stays entirely
    within the approximation family (no oracle evaluations).  Returns
    (rates, best objective value).
    """
    alpha = np.sqrt(2.0 * g_sub) / sigma
    o1, o2, o3, c1, c2 = _fit_fields(alpha, variant, tol)
    frac = np.linspace(0.0, 1.0, _RESCUE_POINTS)
    beta = c1[:, None] + (c2 - c1)[:, None] * frac[None, :]
    rate = _rate_of_beta(beta, sigma, power)
    survive = 1.0 - np.clip(o1[:, None] * (beta - o2[:, None]) + o3[:, None],
                            0.0, 1.0)
    objective = rate * survive
    best = np.argmax(objective, axis=1)
    rates = np.take_along_axis(rate, best[:, None], axis=1)[:, 0]
    values = np.take_along_axis(objective, best[:, None], axis=1)[:, 0]
    return rates, values


def adaptive_rate_batch(g_hat, sigma, power, variant: str = "auto",
                        fallback: str = "rescue",
                        tol: ToleranceConfig = DEFAULT_TOL):
    """Closed-form rates with out-of-region handling applied.

    fallback="rescue" re-maximizes the approximated objective (fast, no
    oracle); fallback="search" uses the exact golden-section oracle;
    fallback="none" keeps the raw closed form.  Returns (rates, rescued,
    searched) boolean masks over the draws.
    """
    if fallback not in ("rescue", "search", "none"):
        raise DomainError("fallback must be 'rescue', 'search' or 'none'")
    rates, _, invalid = lemma4_rate_batch(g_hat, sigma, power, variant, tol)
    searched = np.zeros_like(invalid)
    rescued = np.zeros_like(invalid)
    if fallback == "none" or not np.any(invalid):
        return rates, rescued, searched
    g = np.atleast_1d(np.asarray(g_hat, dtype=float))
    rates = rates.copy()
    if fallback == "search":
        searched = invalid
        rates[invalid] = exact_rate_batch(g[invalid], sigma, power, tol)
        return rates, rescued, searched
    fixed, values = _rescue_rates(g[invalid], sigma, power, variant, tol)
    degenerate = values <= 0.0
    if np.any(degenerate):
        # The whole linear region scored zero; only the oracle can help.
        idx = np.flatnonzero(invalid)
        bad = idx[degenerate]
        fixed[degenerate] = exact_rate_batch(g[bad], sigma, power, tol)
        searched[bad] = True
    rates[invalid] = fixed
    rescued = invalid & ~searched
    return rates, rescued, searched


# ---------------------------------------------------------------------------
# Exact search (oracle)
# ---------------------------------------------------------------------------

# Upper bracket: gain mean + 10 standard deviations of the non-central
# chi-squared conditional distribution, mapped through log(1 + g P).
_BRACKET_STDS = 10.0
_GRID_POINTS = 33
_GOLDEN_ITERS = 40


def _search_upper(g, sigma, power):
    s2 = sigma * sigma
    spread = _BRACKET_STDS * np.sqrt(s2 * s2 + 2.0 * s2 * g)
    return np.log1p(power * (g + s2 + spread))


def exact_rate_batch(g_hat, sigma, power, tol: ToleranceConfig = DEFAULT_TOL):
    """Throughput-maximizing rates by coarse grid plus golden-section search."""
    g = _check_scenario_args(g_hat, sigma, power)
    g = np.atleast_1d(g)
    if g.size == 0:
        return np.zeros(0)
    if sigma == 0.0:
        return np.log1p(power * g)
    alpha = np.sqrt(2.0 * g) / sigma

    def objective(r):
        return r * marcum_q1(alpha, _beta_of_rate(r, sigma, power), tol)

    hi = _search_upper(g, sigma, power)
    fracs = np.linspace(0.0, 1.0, _GRID_POINTS)
    grid = hi[:, None] * fracs[None, :]
    vals = grid * marcum_q1(
        alpha[:, None], _beta_of_rate(grid, sigma, power), tol)
    best = np.argmax(vals, axis=1)
    lo_idx = np.maximum(best - 1, 0)
    hi_idx = np.minimum(best + 1, _GRID_POINTS - 1)
    a = np.take_along_axis(grid, lo_idx[:, None], axis=1)[:, 0]
    b = np.take_along_axis(grid, hi_idx[:, None], axis=1)[:, 0]
    # Golden-section with one objective evaluation per iteration.
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = objective(x1)
    f2 = objective(x2)
    for _ in range(_GOLDEN_ITERS):
        left = f1 >= f2
        a = np.where(left, a, x1)
        b = np.where(left, x2, b)
        x1_new = np.where(left, b - _INVPHI * (b - a), x2)
        x2_new = np.where(left, x1, a + _INVPHI * (b - a))
        probe = np.where(left, x1_new, x2_new)
        fp = objective(probe)
        f1, f2 = np.where(left, fp, f2), np.where(left, f1, fp)
        x1, x2 = x1_new, x2_new
    return 0.5 * (a + b)


def optimal_rate_lemma4(g_hat, sigma, power, variant: str = "auto",
                        fallback: str = "search",
                        tol: ToleranceConfig = DEFAULT_TOL) -> RateDecision:
    """Closed-form throughput-optimized rate for one predicted gain."""
    if np.ndim(g_hat) != 0:
        raise DomainError("optimal_rate_lemma4 expects a scalar g_hat")
    _, zero_flags, _ = lemma4_rate_batch(g_hat, sigma, power, variant, tol)
    rates, rescued, searched = adaptive_rate_batch(
        g_hat, sigma, power, variant, fallback, tol)
    rate = float(rates[0])
    return RateDecision(
        rate=rate,
        policy=Policy.LEMMA4_APPROX,
        conditional_outage=float(conditional_outage(rate, g_hat, sigma, power, tol)),
        rescued=bool(rescued[0]),
        used_fallback=bool(searched[0]),
        rate_zero_flag=bool(zero_flags[0]),
    )


def optimal_rate_exact(g_hat, sigma, power,
                       tol: ToleranceConfig = DEFAULT_TOL) -> RateDecision:
    """Golden-section-search rate for one predicted gain (the oracle)."""
    if np.ndim(g_hat) != 0:
        raise DomainError("optimal_rate_exact expects a scalar g_hat")
    rate = float(exact_rate_batch(np.asarray([g_hat]), sigma, power, tol)[0])
    return RateDecision(
        rate=rate,
        policy=Policy.EXACT_SEARCH,
        conditional_outage=float(conditional_outage(rate, g_hat, sigma, power, tol)),
    )


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def no_adaptation_rate(power) -> float:
    """Optimal fixed rate without CSIT over Rayleigh fading: W(P)."""
    if not (math.isfinite(power) and power > 0):
        raise DomainError("power must be positive")
    return float(lambert_w0(power))


def no_adaptation_throughput(power) -> float:
    """Throughput of the optimal fixed-rate no-CSIT scheme.

    W(P) e^{-(e^{W(P)} - 1)/P}, using e^{W(P)} = P / W(P).
    """
    w = no_adaptation_rate(power)
    return w * math.exp(-(power / w - 1.0) / power)


def genie_throughput(power) -> float:
    """Perfect-CSIT bound E[log(1 + g P)] over unit-mean exponential gain.

    Equals e^{1/P} E1(1/P), evaluated in scaled form so large P stays stable.
    """
    if not (math.isfinite(power) and power > 0):
        raise DomainError("power must be positive")
    return float(scaled_exp_e1(1.0 / power))
