"""Predictor-antenna geometry, correlation mapping and gain distribution."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from marq import DomainError, marcum_q1
from marq.pa_model import (
    PaScenario,
    apply_estimation_error,
    conditional_gain_cdf,
    conditional_gain_pdf,
    correlation_for,
    correlation_sigma,
    correlation_state,
    effective_distance,
    format_scenario,
    parse_scenario,
    sample_channel,
    sample_channels,
)

# Reference geometry: 2.68 GHz carrier, 1.5-wavelength separation, 114 km/h,
# 5 ms delay (values cross-checked at 30 digits).
REF = PaScenario.from_field_units(fc_ghz=2.68, da_wavelengths=1.5,
                                  v_kmh=114.0, delta_ms=5.0, snr_db=20.0)


def test_reference_geometry():
    assert REF.wavelength == pytest.approx(0.11186285746268657, rel=1e-12)
    assert effective_distance(REF) == pytest.approx(0.0094609528606965174,
                                                    rel=1e-10)
    state = correlation_for(REF)
    assert state.jakes_offdiag == pytest.approx(0.93063745890376354, rel=1e-10)
    assert state.sigma == pytest.approx(0.5449444049115896, rel=1e-10)


def test_sigma_limits():
    lam = REF.wavelength
    # Zero mismatch: perfectly correlated, sigma = 0 exactly.
    assert correlation_sigma(0.0, lam) == 0.0
    # Small mismatch: sigma grows like 2 pi d / lambda.
    for d in (1e-6, 1e-5):
        assert correlation_sigma(d, lam) == pytest.approx(
            2.0 * math.pi * d / lam, rel=5e-3)
    state = correlation_state(0.0, lam)
    assert state.phi1 == pytest.approx(state.phi2)
    assert state.phi1 == pytest.approx(1.0 / math.sqrt(2.0))


def test_conditional_gain_cdf_matches_tail_function():
    g_hat, sigma = 1.3, 0.45
    x = np.array([0.1, 0.5, 1.3, 3.0])
    cdf = conditional_gain_cdf(x, g_hat, sigma)
    expected = 1.0 - marcum_q1(math.sqrt(2.0 * g_hat) / sigma,
                               np.sqrt(2.0 * x) / sigma)
    assert np.allclose(cdf, expected, rtol=1e-12)
    assert np.all(np.diff(cdf) > 0)


def test_conditional_gain_pdf_consistency():
    g_hat, sigma = 1.0, 0.4
    mass, _ = quad(lambda x: conditional_gain_pdf(x, g_hat, sigma),
                   0.0, 40.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-8)
    # integral of the pdf up to x reproduces the cdf
    part, _ = quad(lambda x: conditional_gain_pdf(x, g_hat, sigma),
                   0.0, 1.5, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert part == pytest.approx(conditional_gain_cdf(1.5, g_hat, sigma),
                                 abs=1e-8)


def test_degenerate_sigma():
    assert conditional_gain_cdf(0.9, 1.0, 0.0) == 0.0
    assert conditional_gain_cdf(1.1, 1.0, 0.0) == 1.0
    with pytest.raises(DomainError):
        conditional_gain_pdf(1.0, 1.0, 0.0)


def test_apply_estimation_error():
    # kappa = 1 must return the inputs untouched.
    g, s = apply_estimation_error(1.7, 0.3, 1.0)
    assert g == 1.7 and s == 0.3
    g, s = apply_estimation_error(1.7, 0.3, 0.8)
    assert g == pytest.approx(0.64 * 1.7)
    assert s == pytest.approx(math.sqrt(0.64 * 0.09 + 0.36))
    with pytest.raises(DomainError):
        apply_estimation_error(1.0, 0.3, 1.2)


def test_scenario_round_trip():
    text = format_scenario(REF)
    again = parse_scenario(text)
    assert again == REF


def test_scenario_parse_errors():
    good = format_scenario(REF)
    with pytest.raises(DomainError):
        parse_scenario(good + "bogus_key = 1\n")
    with pytest.raises(DomainError):
        parse_scenario(good + "kappa = 0.9\n")  # duplicate
    with pytest.raises(DomainError):
        parse_scenario("fc_ghz = 2.68\n")  # missing keys
    with pytest.raises(DomainError):
        parse_scenario(good.replace("114", "fast"))


def test_scenario_validation():
    with pytest.raises(DomainError):
        PaScenario.from_field_units(fc_ghz=-1.0)
    with pytest.raises(DomainError):
        PaScenario.from_field_units(kappa=1.5)
    with pytest.raises(DomainError):
        PaScenario.from_field_units(delta_ms=-2.0)


def test_sample_channels_moments():
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(11)))
    sigma = 0.5
    draws = sample_channels(sigma, 1.0, 200_000, rng)
    # realized gain is unit-mean exponential; predicted gain has mean 1-sigma^2
    assert np.mean(draws["g"]) == pytest.approx(1.0, abs=0.01)
    assert np.mean(draws["g_hat"]) == pytest.approx(1.0 - sigma * sigma,
                                                    abs=0.01)


def test_sample_channel_deterministic():
    state = correlation_for(REF)
    one = sample_channel(REF, state, rng_seed=5)
    two = sample_channel(REF, state, rng_seed=5)
    other = sample_channel(REF, state, rng_seed=6)
    assert one == two
    assert one != other
