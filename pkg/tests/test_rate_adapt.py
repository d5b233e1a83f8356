"""Rate policies: closed form, exact search, baselines and fallback logic."""

import math

import numpy as np
import pytest

from marq import DomainError, lambert_w0
from marq.rate_adapt import (
    Policy,
    adaptive_rate_batch,
    conditional_outage,
    exact_rate_batch,
    gain_threshold,
    genie_throughput,
    instantaneous_throughput,
    lemma4_rate_batch,
    no_adaptation_rate,
    no_adaptation_throughput,
    optimal_rate_exact,
    optimal_rate_lemma4,
)
from marq.pa_model import conditional_gain_cdf


def test_baseline_frozen_values():
    # Quadrature / grid-search references at unit SNR.
    assert no_adaptation_throughput(1.0) == pytest.approx(
        0.26438044734963434, rel=1e-12)
    assert genie_throughput(1.0) == pytest.approx(
        0.5963473623231946, rel=1e-12)
    assert no_adaptation_rate(7.0) == pytest.approx(lambert_w0(7.0), rel=1e-14)


def test_no_adaptation_rate_is_stationary():
    # W(P) maximizes r * exp(-(e^r - 1)/P); nudge both ways.
    for p in (0.5, 10.0, 200.0):
        f = lambda r: r * math.exp(-math.expm1(r) / p)
        r0 = no_adaptation_rate(p)
        assert f(r0) >= f(r0 * 0.999)
        assert f(r0) >= f(r0 * 1.001)


def test_closed_form_decision_reference_case():
    # sigma = 0.5, g_hat = 1, P = 10: the Lambert solution stays inside the
    # fit's linear region, so no fallback fires.
    decision = optimal_rate_lemma4(1.0, 0.5, 10.0)
    assert decision.rate == pytest.approx(1.8180116884955928, rel=1e-10)
    assert decision.policy is Policy.LEMMA4_APPROX
    assert not decision.used_fallback and not decision.rescued
    assert not decision.rate_zero_flag

    exact = optimal_rate_exact(1.0, 0.5, 10.0)
    assert exact.rate == pytest.approx(1.9839554159592163, rel=1e-8)
    # The closed form concedes only a few percent of throughput here.
    tp_l4 = instantaneous_throughput(decision.rate, 1.0, 0.5, 10.0)
    tp_ex = instantaneous_throughput(exact.rate, 1.0, 0.5, 10.0)
    assert tp_l4 >= 0.95 * tp_ex


def test_exact_search_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(3)))
    g = rng.uniform(0.2, 3.0, 8)
    sigma, power = 0.45, 25.0
    rates = exact_rate_batch(g, sigma, power)
    for gi, ri in zip(g, rates):
        grid = np.linspace(1e-3, math.log1p(power * (gi + 4.0)), 20_000)
        tp = instantaneous_throughput(grid, float(gi), sigma, power)
        best = grid[int(np.argmax(tp))]
        assert instantaneous_throughput(float(ri), float(gi), sigma, power) \
            >= 0.9999 * float(np.max(tp))
        assert abs(ri - best) < 5e-3


def test_exact_search_degenerate_sigma():
    g = np.array([0.5, 2.0])
    assert np.allclose(exact_rate_batch(g, 0.0, 10.0), np.log1p(10.0 * g))


def test_outage_consistency():
    rate, g_hat, sigma, power = 1.2, 0.8, 0.5, 10.0
    out = conditional_outage(rate, g_hat, sigma, power)
    expected = conditional_gain_cdf(gain_threshold(rate, power), g_hat, sigma)
    assert out == pytest.approx(expected, rel=1e-12)
    # throughput = rate * (1 - outage)
    tp = instantaneous_throughput(rate, g_hat, sigma, power)
    assert tp == pytest.approx(rate * (1.0 - out), rel=1e-10)


def test_throughput_step_at_zero_sigma():
    assert instantaneous_throughput(1.0, 1.0, 0.0, 10.0) == 1.0
    big = math.log1p(10.0) + 0.1  # above capacity: never decodes
    assert instantaneous_throughput(big, 1.0, 0.0, 10.0) == 0.0


def test_low_gain_solution_clamps_to_zero():
    # Tiny predicted gain at low SNR: the unclamped solution is negative.
    rates, zero_flags, invalid = lemma4_rate_batch(
        np.array([0.19]), 0.17, 1.1)
    assert rates[0] == 0.0
    assert zero_flags[0]
    assert invalid[0]


def test_adaptive_batch_fallback_modes():
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(9)))
    g = rng.uniform(0.1, 4.0, 300)
    sigma, power = 0.25, 50.0
    raw, _, invalid = lemma4_rate_batch(g, sigma, power)

    rates_none, rescued, searched = adaptive_rate_batch(
        g, sigma, power, fallback="none")
    assert np.array_equal(rates_none, raw)
    assert not rescued.any() and not searched.any()

    rates_rescue, rescued, searched = adaptive_rate_batch(
        g, sigma, power, fallback="rescue")
    assert np.array_equal(rescued | searched, invalid)
    assert np.array_equal(rates_rescue[~invalid], raw[~invalid])

    rates_search, rescued, searched = adaptive_rate_batch(
        g, sigma, power, fallback="search")
    assert np.array_equal(searched, invalid)
    assert not rescued.any()
    # the oracle never does worse than the rescue on the draws it touched
    tp_rescue = instantaneous_throughput(rates_rescue, g, sigma, power)
    tp_search = instantaneous_throughput(rates_search, g, sigma, power)
    assert np.all(tp_search[invalid] >= tp_rescue[invalid] - 1e-9)

    with pytest.raises(DomainError):
        adaptive_rate_batch(g, sigma, power, fallback="sometimes")


def test_scalar_guards():
    with pytest.raises(DomainError):
        optimal_rate_lemma4(np.array([1.0, 2.0]), 0.5, 10.0)
    with pytest.raises(DomainError):
        instantaneous_throughput(-1.0, 1.0, 0.5, 10.0)
    with pytest.raises(DomainError):
        lemma4_rate_batch(np.array([1.0]), 1.5, 10.0)
    with pytest.raises(DomainError):
        no_adaptation_throughput(0.0)


def test_policy_enum_values():
    assert Policy.LEMMA4_APPROX.value == "lemma4"
    assert Policy.EXACT_SEARCH.value == "exact"
    assert Policy.NO_ADAPTATION.value == "no-adaptation"
    assert Policy.GENIE.value == "genie"
