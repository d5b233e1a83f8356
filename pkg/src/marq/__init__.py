"""marq: semi-linear Marcum-Q approximations, closed-form integrals and a
predictor-antenna rate-adaptation toolkit."""

from .errors import AccuracyError, DomainError, MarqError
from .specfun import (
    DEFAULT_TOL,
    ToleranceConfig,
    bessel_i0_scaled,
    bessel_j0,
    exp_integral_e1,
    lambert_w0,
    marcum_q1,
    scaled_exp_e1,
    upper_incomplete_gamma,
)
from .semilinear import (
    SemiLinearFit,
    Variant,
    approx_cdf,
    fit_auto,
    fit_corollary1,
    fit_corollary2,
    fit_lemma1,
)
from .closed_integrals import (
    GIntegralParams,
    LineCoeffs,
    TIntegralParams,
    g_approx,
    g_exact,
    line_coeffs,
    t0_approx,
    t_approx,
    t_exact,
)
from .pa_model import (
    CorrelationState,
    PaScenario,
    apply_estimation_error,
    conditional_gain_cdf,
    conditional_gain_pdf,
    correlation_for,
    correlation_sigma,
    effective_distance,
    format_scenario,
    parse_scenario,
    sample_channel,
    sample_channels,
)
from .rate_adapt import (
    Policy,
    RateDecision,
    adaptive_rate_batch,
    conditional_outage,
    exact_rate_batch,
    genie_throughput,
    instantaneous_throughput,
    lemma4_rate_batch,
    no_adaptation_throughput,
    optimal_rate_exact,
    optimal_rate_lemma4,
)
from .sim_harness import (
    SweepResult,
    SweepRow,
    SweepSpec,
    monte_carlo_expected_throughput,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)

__version__ = "1.0.0"
