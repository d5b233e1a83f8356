"""Predictor-antenna channel model.

A predictor antenna (PA) at the front of a vehicle sounds the channel; a
receive antenna (RA) aligned behind it receives data after a processing delay.
The spatial mismatch between where the channel was measured and where it is
used maps, through a Jakes correlation model, to a decorrelation parameter
sigma; conditioned on the predicted gain the realized gain is non-central
chi-squared.  An additional correlation factor kappa models imperfect
estimation of the PA channel itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import DomainError
from .specfun import DEFAULT_TOL, ToleranceConfig, bessel_i0_scaled, bessel_j0, marcum_q1

__all__ = [
    "PaScenario",
    "CorrelationState",
    "ChannelDraw",
    "SCENARIO_KEYS",
    "parse_scenario",
    "format_scenario",
    "effective_distance",
    "correlation_state",
    "correlation_sigma",
    "correlation_for",
    "conditional_gain_cdf",
    "conditional_gain_pdf",
    "apply_estimation_error",
    "sample_channel",
    "sample_channels",
]


@dataclass(frozen=True)
class PaScenario:
    """Physical configuration of one PA deployment (SI units internally)."""

    carrier_freq_hz: float
    antenna_sep_wavelengths: float
    speed_mps: float
    delay_s: float
    power: float  # linear transmit power over unit-variance noise
    kappa: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, f)) for f in (
                "carrier_freq_hz", "antenna_sep_wavelengths", "speed_mps",
                "delay_s", "power", "kappa")):
            raise DomainError("scenario fields must be finite")
        if self.carrier_freq_hz <= 0:
            raise DomainError("carrier_freq_hz must be positive")
        if self.antenna_sep_wavelengths <= 0:
            raise DomainError("antenna_sep_wavelengths must be positive")
        if self.speed_mps < 0 or self.delay_s < 0:
            raise DomainError("speed and delay must be nonnegative")
        if self.power <= 0:
            raise DomainError("power must be positive")
        if not 0.0 <= self.kappa <= 1.0:
            raise DomainError("kappa must lie in [0, 1]")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def antenna_sep_m(self) -> float:
        return self.antenna_sep_wavelengths * self.wavelength

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.power)

    @classmethod
    def from_field_units(cls, fc_ghz=2.68, da_wavelengths=1.5, v_kmh=114.0,
                         delta_ms=5.0, snr_db=20.0, kappa=1.0) -> "PaScenario":
        """Build a scenario from the units used in field reports (GHz, km/h, ms, dB)."""
        return cls(
            carrier_freq_hz=fc_ghz * 1e9,
            antenna_sep_wavelengths=da_wavelengths,
            speed_mps=v_kmh / 3.6,
            delay_s=delta_ms * 1e-3,
            power=10.0 ** (snr_db / 10.0),
            kappa=kappa,
        )


SCENARIO_KEYS = ("fc_ghz", "da_wavelengths", "v_kmh", "delta_ms", "snr_db", "kappa")


def parse_scenario(text: str) -> PaScenario:
    """Parse the flat key-value scenario format (``key = value`` per line)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, val = line.partition(sep)
                break
        else:
            raise DomainError(f"scenario line {lineno}: expected 'key = value'")
        key = key.strip()
        if key not in SCENARIO_KEYS:
            raise DomainError(f"scenario line {lineno}: unknown key {key!r}")
        if key in values:
            raise DomainError(f"scenario line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val.strip())
        except ValueError as exc:
            raise DomainError(f"scenario line {lineno}: bad number for {key!r}") from exc
    missing = [k for k in SCENARIO_KEYS if k not in values]
    if missing:
        raise DomainError(f"scenario is missing keys: {', '.join(missing)}")
    return PaScenario.from_field_units(**values)


def format_scenario(scenario: PaScenario) -> str:
    """Inverse of parse_scenario."""
    vals = {
        "fc_ghz": scenario.carrier_freq_hz / 1e9,
        "da_wavelengths": scenario.antenna_sep_wavelengths,
        "v_kmh": scenario.speed_mps * 3.6,
        "delta_ms": scenario.delay_s * 1e3,
        "snr_db": scenario.snr_db,
        "kappa": scenario.kappa,
    }
    return "".join(f"{k} = {vals[k]:.12g}\n" for k in SCENARIO_KEYS)


@dataclass(frozen=True)
class CorrelationState:
    """Mismatch geometry mapped to the channel correlation quantities."""

    effective_distance: float  # meters
    sigma: float               # decorrelation weight in [0, 1]
    jakes_offdiag: float       # J0(2 pi d / lambda)
    phi1: float                # Phi^(1/2)[0, 0]
    phi2: float                # Phi^(1/2)[0, 1]


def effective_distance(scenario: PaScenario) -> float:
    """Mismatch distance |d_a - v*delta| between sounding and reception points."""
    return abs(scenario.antenna_sep_m - scenario.speed_mps * scenario.delay_s)


def correlation_state(d: float, wavelength: float) -> CorrelationState:
    """Correlation quantities for mismatch distance d under the Jakes model.

    The 2x2 correlation matrix has unit diagonal and off-diagonal
    J0(2 pi d / lambda); its principal square root is closed-form through the
    (1, 1)/(1, -1) eigenbasis.  sigma is taken nonnegative: only sigma^2
    enters the downstream distributions.
    """
    if d < 0 or wavelength <= 0:
        raise DomainError("require d >= 0 and wavelength > 0")
    j = bessel_j0(2.0 * math.pi * d / wavelength)
    phi1 = 0.5 * (math.sqrt(1.0 + j) + math.sqrt(1.0 - j))
    phi2 = 0.5 * (math.sqrt(1.0 + j) - math.sqrt(1.0 - j))
    diff = abs(phi2 * phi2 - phi1 * phi1)  # = sqrt(1 - j^2)
    if diff == 0.0:
        sigma = 0.0
    else:
        sigma = diff / math.sqrt(phi2 * phi2 + diff * diff)
    return CorrelationState(d, sigma, j, phi1, phi2)


def correlation_sigma(d: float, wavelength: float) -> float:
    """Decorrelation parameter sigma(d)."""
    return correlation_state(d, wavelength).sigma


def correlation_for(scenario: PaScenario) -> CorrelationState:
    return correlation_state(effective_distance(scenario), scenario.wavelength)


def _check_gain_args(x, g_hat, sigma):
    x_arr = np.asarray(x, dtype=float)
    g_arr = np.asarray(g_hat, dtype=float)
    if np.any(x_arr < 0) or np.any(g_arr < 0):
        raise DomainError("gain arguments must be nonnegative")
    if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(g_arr)) and math.isfinite(sigma)):
        raise DomainError("gain arguments must be finite")
    if not abs(sigma) <= 1.0:
        raise DomainError("sigma must lie in [-1, 1]")
    return x_arr, g_arr


def conditional_gain_cdf(x, g_hat, sigma, tol: ToleranceConfig = DEFAULT_TOL):
    """CDF of the realized gain g given the predicted gain g_hat.

    1 - Q1(sqrt(2 g_hat / sigma^2), sqrt(2 x / sigma^2)); sigma = 0 degenerates
    to a point mass at g_hat.  Only sigma^2 matters, so the sign of sigma is
    irrelevant.
    """
    x_arr, g_arr = _check_gain_args(x, g_hat, sigma)
    s2 = sigma * sigma
    if s2 == 0.0:
        out = np.where(x_arr < g_arr, 0.0, 1.0)
        return float(out[()]) if (np.ndim(x) == 0 and np.ndim(g_hat) == 0) else out
    return 1.0 - marcum_q1(np.sqrt(2.0 * g_arr / s2), np.sqrt(2.0 * x_arr / s2), tol)


def conditional_gain_pdf(x, g_hat, sigma):
    """Non-central chi-squared density of g given g_hat, evaluated in log space."""
    x_arr, g_arr = _check_gain_args(x, g_hat, sigma)
    s2 = sigma * sigma
    if s2 == 0.0:
        raise DomainError("the sigma = 0 distribution is a point mass with no density")
    root = np.sqrt(x_arr * g_arr)
    out = (1.0 / s2) * np.exp(-((np.sqrt(x_arr) - np.sqrt(g_arr)) ** 2) / s2) \
        * bessel_i0_scaled(2.0 * root / s2)
    return float(out[()]) if (np.ndim(x) == 0 and np.ndim(g_hat) == 0) else out


def apply_estimation_error(g_hat, sigma, kappa):
    """Fold the PA-channel estimation error into (g_hat, sigma).

    The estimation noise and the spatial-mismatch noise combine into one
    Gaussian: sigma_eff^2 = kappa^2 sigma^2 + 1 - kappa^2, g_hat_eff =
    kappa^2 g_hat.  kappa = 1 returns the inputs unchanged (bit-identical).
    """
    if not 0.0 <= kappa <= 1.0:
        raise DomainError("kappa must lie in [0, 1]")
    if kappa == 1.0:
        return g_hat, sigma
    sigma_eff = math.sqrt(kappa * kappa * sigma * sigma + 1.0 - kappa * kappa)
    return kappa * kappa * g_hat, sigma_eff


@dataclass(frozen=True)
class ChannelDraw:
    """One Monte Carlo channel realization."""

    h_hat: complex
    g_hat: float
    g: float


def _complex_normal(rng, n):
    """IID circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


def sample_channels(sigma: float, kappa: float, n: int, rng) -> dict:
    """Draw n channel realizations; returns arrays h_hat, g_hat, g.

    h = kappa sqrt(1-sigma^2) h_hat + sigma_eff q with sigma_eff folding the
    estimation error; at kappa = 1 this is exactly sqrt(1-sigma^2) h_hat +
    sigma q.  g_hat is the predicted gain (1-sigma^2)|h_hat|^2 before the
    kappa scaling.
    """
    h_hat = _complex_normal(rng, n)
    q = _complex_normal(rng, n)
    if kappa == 1.0:
        h = math.sqrt(1.0 - sigma * sigma) * h_hat + sigma * q
    else:
        _, sigma_eff = apply_estimation_error(0.0, sigma, kappa)
        h = kappa * math.sqrt(1.0 - sigma * sigma) * h_hat + sigma_eff * q
    g_hat = (1.0 - sigma * sigma) * np.abs(h_hat) ** 2
    g = np.abs(h) ** 2
    return {"h_hat": h_hat, "g_hat": g_hat, "g": g}


def sample_channel(scenario: PaScenario, correlation: CorrelationState,
                   rng_seed: int) -> ChannelDraw:
    """Draw one realization, deterministic in rng_seed (counter-based PRNG)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rng_seed)))
    draws = sample_channels(correlation.sigma, scenario.kappa, 1, rng)
    return ChannelDraw(
        h_hat=complex(draws["h_hat"][0]),
        g_hat=float(draws["g_hat"][0]),
        g=float(draws["g"][0]),
    )
