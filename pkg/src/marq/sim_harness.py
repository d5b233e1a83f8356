"""Monte Carlo engine and parameter-sweep drivers.

A sweep varies one scenario knob (SNR, kappa, processing delay or vehicle
speed) over an ordered grid; at each grid point the engine recomputes the
mismatch geometry, draws channel realizations, applies every requested rate
policy to the same draws (common random numbers) and records mean throughput,
empirical outage and a 95% confidence interval.

Determinism: realizations are split into fixed-size shards, each shard's
generator is seeded from (seed, point index, shard index) with a counter-based
PRNG, and shard statistics are combined in index order.  The result is
bit-identical for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .pa_model import PaScenario, apply_estimation_error, correlation_for, sample_channels
from .rate_adapt import (
    Policy,
    adaptive_rate_batch,
    exact_rate_batch,
    no_adaptation_rate,
    no_adaptation_throughput,
)
from .specfun import DEFAULT_TOL, ToleranceConfig

__all__ = [
    "VARIABLES",
    "DEFAULT_POLICIES",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_sweep",
    "monte_carlo_expected_throughput",
    "sweep_to_csv",
    "sweep_rows_from_csv",
    "sweep_to_json",
]

VARIABLES = ("snr_db", "kappa", "delay_ms", "speed_kmh")

DEFAULT_POLICIES = (Policy.LEMMA4_APPROX, Policy.NO_ADAPTATION, Policy.GENIE)

# Fixed shard size keeps shard boundaries independent of the worker count.
_SHARD_SIZE = 12_500


@dataclass(frozen=True)
class SweepSpec:
    """One parameter sweep: base scenario, varied knob, grid and sampling plan."""

    scenario: PaScenario
    variable: str
    values: tuple
    realizations: int = 100_000
    seed: int = 0
    policies: tuple = DEFAULT_POLICIES
    fit_variant: str = "auto"
    # Out-of-region handling for the closed-form policy.  "rescue" keeps the
    # per-draw work analytic; "search" matches the single-decision oracle
    # fallback at a large Monte Carlo cost.
    fallback: str = "rescue"

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise DomainError(f"variable must be one of {VARIABLES}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("values must be non-empty")
        if any(not math.isfinite(v) for v in vals):
            raise DomainError("values must be finite")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("values must be strictly increasing")
        if self.variable == "kappa" and (vals[0] < 0.0 or vals[-1] > 1.0):
            raise DomainError("kappa sweep values must lie in [0, 1]")
        if self.variable in ("delay_ms", "speed_kmh") and vals[0] < 0.0:
            raise DomainError(f"{self.variable} sweep values must be nonnegative")
        object.__setattr__(self, "values", vals)
        # Below ~1000 draws the normal-theory CI is not trustworthy.
        if self.realizations < 1000:
            raise DomainError("realizations must be at least 1000")
        pols = tuple(self.policies)
        if not pols or any(not isinstance(p, Policy) for p in pols):
            raise DomainError("policies must be a non-empty tuple of Policy members")
        if len(set(pols)) != len(pols):
            raise DomainError("policies must not repeat")
        object.__setattr__(self, "policies", pols)
        if self.fallback not in ("rescue", "search", "none"):
            raise DomainError("fallback must be 'rescue', 'search' or 'none'")


@dataclass(frozen=True)
class SweepRow:
    variable: str
    value: float
    policy: str
    mean_throughput_npcu: float
    outage: float
    ci95: float
    n: int


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple


def scenario_at(spec: SweepSpec, value: float) -> PaScenario:
    """Base scenario with the swept knob replaced by one grid value."""
    if spec.variable == "snr_db":
        return replace(spec.scenario, power=10.0 ** (value / 10.0))
    if spec.variable == "kappa":
        return replace(spec.scenario, kappa=value)
    if spec.variable == "delay_ms":
        return replace(spec.scenario, delay_s=value * 1e-3)
    return replace(spec.scenario, speed_mps=value / 3.6)


@dataclass
class _Acc:
    """Streaming (n, sum, sum of squares, failure count) per policy arm."""

    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    failures: int = 0

    def add(self, other: "_Acc"):
        self.n += other.n
        self.total += other.total
        self.total_sq += other.total_sq
        self.failures += other.failures

    def row(self, variable, value, policy) -> SweepRow:
        mean = self.total / self.n
        var = max(0.0, (self.total_sq - self.total * self.total / self.n)
                  / (self.n - 1))
        ci = 1.96 * math.sqrt(var / self.n)
        return SweepRow(variable, value, policy, mean, self.failures / self.n,
                        ci, self.n)


def _mc_policies(policies):
    return [p for p in policies if p is not Policy.NO_ADAPTATION]


def _eval_shard(scenario: PaScenario, sigma: float, policies, fit_variant,
                fallback, seed: int, point_idx: int, shard_idx: int,
                count: int, tol: ToleranceConfig):
    """Per-policy accumulators for one shard of channel draws."""
    ss = np.random.SeedSequence(seed, spawn_key=(point_idx, shard_idx))
    rng = np.random.Generator(np.random.Philox(ss))
    draws = sample_channels(sigma, scenario.kappa, count, rng)
    g_hat_eff, sigma_eff = apply_estimation_error(
        draws["g_hat"], sigma, scenario.kappa)
    capacity = np.log1p(scenario.power * draws["g"])

    out = {}
    for policy in policies:
        acc = _Acc()
        if policy is Policy.GENIE:
            tp = capacity
            failed = np.zeros(count, dtype=bool)
        else:
            if policy is Policy.LEMMA4_APPROX:
                rates, _, _ = adaptive_rate_batch(
                    g_hat_eff, sigma_eff, scenario.power, fit_variant,
                    fallback, tol)
            elif policy is Policy.EXACT_SEARCH:
                rates = exact_rate_batch(g_hat_eff, sigma_eff, scenario.power, tol)
            else:
                raise DomainError(f"policy {policy} is not Monte Carlo based")
            decoded = capacity >= rates
            tp = np.where(decoded, rates, 0.0)
            failed = (rates > 0.0) & ~decoded
        acc.n = count
        acc.total = float(tp.sum())
        acc.total_sq = float((tp * tp).sum())
        acc.failures = int(failed.sum())
        out[policy] = acc
    return out


def _no_adaptation_row(variable, value, scenario: PaScenario, n: int) -> SweepRow:
    """Closed-form fixed-rate baseline; no sampling noise, ci95 = 0."""
    p = scenario.power
    eta = no_adaptation_throughput(p)
    w = no_adaptation_rate(p)
    outage = 1.0 - math.exp(-(math.exp(w) - 1.0) / p)
    return SweepRow(variable, value, Policy.NO_ADAPTATION.value, eta, outage,
                    0.0, n)


def _shard_counts(total: int):
    counts = [_SHARD_SIZE] * (total // _SHARD_SIZE)
    if total % _SHARD_SIZE:
        counts.append(total % _SHARD_SIZE)
    return counts


def run_sweep(spec: SweepSpec, workers: int = 1,
              tol: ToleranceConfig = DEFAULT_TOL) -> SweepResult:
    """Evaluate every (grid value, policy) cell of the sweep."""
    if workers < 1:
        raise DomainError("workers must be at least 1")
    mc_policies = _mc_policies(spec.policies)

    tasks = []  # (point_idx, shard_idx, scenario, sigma, count)
    sigmas = []
    for point_idx, value in enumerate(spec.values):
        scen = scenario_at(spec, value)
        sigma = correlation_for(scen).sigma
        sigmas.append((scen, sigma))
        if mc_policies:
            for shard_idx, count in enumerate(_shard_counts(spec.realizations)):
                tasks.append((point_idx, shard_idx, scen, sigma, count))

    def work(task):
        point_idx, shard_idx, scen, sigma, count = task
        return _eval_shard(scen, sigma, mc_policies, spec.fit_variant,
                           spec.fallback, spec.seed, point_idx, shard_idx,
                           count, tol)

    if workers == 1 or len(tasks) <= 1:
        shard_stats = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            shard_stats = list(pool.map(work, tasks))

    # Fixed-order reduction: tasks are ordered by (point, shard) already.
    acc = {(t[0], p): _Acc() for t in tasks for p in mc_policies}
    for task, stats in zip(tasks, shard_stats):
        for policy, part in stats.items():
            acc[(task[0], policy)].add(part)

    rows = []
    for point_idx, value in enumerate(spec.values):
        scen, _ = sigmas[point_idx]
        for policy in spec.policies:
            if policy is Policy.NO_ADAPTATION:
                rows.append(_no_adaptation_row(spec.variable, value, scen,
                                               spec.realizations))
            else:
                rows.append(acc[(point_idx, policy)].row(
                    spec.variable, value, policy.value))
    return SweepResult(spec=spec, rows=tuple(rows))


def monte_carlo_expected_throughput(scenario: PaScenario, policy: Policy,
                                    realizations: int = 100_000, seed: int = 0,
                                    fit_variant: str = "auto",
                                    tol: ToleranceConfig = DEFAULT_TOL):
    """(mean throughput, 95% CI halfwidth) for one scenario and policy."""
    if realizations < 1:
        raise DomainError("realizations must be positive")
    if policy is Policy.NO_ADAPTATION:
        return no_adaptation_throughput(scenario.power), 0.0
    sigma = correlation_for(scenario).sigma
    total = _Acc()
    for shard_idx, count in enumerate(_shard_counts(realizations)):
        stats = _eval_shard(scenario, sigma, [policy], fit_variant, "rescue",
                            seed, 0, shard_idx, count, tol)
        total.add(stats[policy])
    row = total.row("", 0.0, policy.value)
    return row.mean_throughput_npcu, row.ci95


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = "variable,value,policy,mean_throughput_npcu,outage,ci95,n"


def sweep_to_csv(result: SweepResult) -> str:
    """Render rows as CSV; float repr keeps re-parse/re-emit byte-stable."""
    lines = [_CSV_HEADER]
    for r in result.rows:
        lines.append(f"{r.variable},{r.value!r},{r.policy},"
                     f"{r.mean_throughput_npcu!r},{r.outage!r},{r.ci95!r},{r.n}")
    return "\n".join(lines) + "\n"


def sweep_rows_from_csv(text: str) -> tuple:
    """Parse rows produced by sweep_to_csv."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != _CSV_HEADER:
        raise DomainError("unrecognized sweep CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise DomainError(f"malformed sweep CSV row: {ln!r}")
        rows.append(SweepRow(parts[0], float(parts[1]), parts[2],
                             float(parts[3]), float(parts[4]), float(parts[5]),
                             int(parts[6])))
    return tuple(rows)


def sweep_to_json(result: SweepResult) -> str:
    """Structured JSON with the full sweep specification echoed."""
    scen = result.spec.scenario
    doc = {
        "spec": {
            "scenario": {
                "fc_ghz": scen.carrier_freq_hz / 1e9,
                "da_wavelengths": scen.antenna_sep_wavelengths,
                "v_kmh": scen.speed_mps * 3.6,
                "delta_ms": scen.delay_s * 1e3,
                "snr_db": scen.snr_db,
                "kappa": scen.kappa,
            },
            "variable": result.spec.variable,
            "values": list(result.spec.values),
            "realizations": result.spec.realizations,
            "seed": result.spec.seed,
            "policies": [p.value for p in result.spec.policies],
            "fit_variant": result.spec.fit_variant,
            "fallback": result.spec.fallback,
        },
        "rows": [
            {
                "variable": r.variable,
                "value": r.value,
                "policy": r.policy,
                "mean_throughput_npcu": r.mean_throughput_npcu,
                "outage": r.outage,
                "ci95": r.ci95,
                "n": r.n,
            }
            for r in result.rows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
