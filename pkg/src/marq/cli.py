"""Command-line front end.

Subcommands: ``approx`` tabulates a semi-linear fit against the exact CDF,
``integrate`` evaluates the closed-form integrals against their quadrature
oracles, ``rate`` reports the rate policies for one scenario, ``sweep`` runs
Monte Carlo parameter sweeps (with embedded figure presets), and ``selftest``
runs the built-in check suites.

Exit codes: 0 success, 1 self-test failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import closed_integrals as ci
from . import pa_model, rate_adapt, selftest, semilinear, sim_harness
from .errors import DomainError, MarqError
from .specfun import marcum_q1

_VARIANTS = ("lemma1", "corollary1", "corollary1-asymptotic", "corollary2")

_FIT_BUILDERS = {
    "lemma1": semilinear.fit_lemma1,
    "corollary1": lambda a: semilinear.fit_corollary1(a),
    "corollary1-asymptotic": lambda a: semilinear.fit_corollary1(
        a, use_bessel_asymptote=True),
    "corollary2": semilinear.fit_corollary2,
}


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(header, rows, fmt):
    if fmt == "json":
        docs = [dict(zip(header, row)) for row in rows]
        return json.dumps(docs, indent=2) + "\n"
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, str) else repr(float(v))
                              for v in row))
    return "\n".join(lines) + "\n"


def _record(doc, fmt):
    if fmt == "csv":
        keys = list(doc)
        return (",".join(keys) + "\n"
                + ",".join(str(doc[k]) for k in keys) + "\n")
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# approx
# ---------------------------------------------------------------------------

def _parse_grid(text: str):
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise DomainError(f"bad grid {text!r}; use start:step:stop") from exc
    if len(nums) == 3:
        start, step, stop = nums
    elif len(nums) == 2:
        start, stop = nums
        step = (stop - start) / 100.0
    else:
        raise DomainError(f"bad grid {text!r}; use start:step:stop")
    if start < 0:
        raise DomainError("grid start must be nonnegative")
    if step <= 0 or stop <= start:
        raise DomainError("grid requires step > 0 and stop > start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def cmd_approx(args) -> int:
    fit = _FIT_BUILDERS[args.variant](args.alpha)
    beta = _parse_grid(args.beta)
    exact = 1.0 - marcum_q1(args.alpha, beta)
    approx = semilinear.approx_cdf(fit, beta)
    rows = [(float(b), float(e), float(z), float(abs(z - e)))
            for b, e, z in zip(beta, exact, approx)]
    _emit(_table(("beta", "exact_cdf", "approx_cdf", "abs_error"), rows,
                 args.format), args.out)
    return 0


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------

FIG2_PRESET = {
    "alpha": 2.0,
    "pairs": ((4.0, 4.0), (3.0, 3.0), (2.0, 2.0), (0.0, 1.0), (1.0, 1.0)),
    "rho": tuple(0.5 * k for k in range(9)),
}

FIG3_PRESET = {
    "grid": tuple((alpha, m, a)
                  for alpha in (1.0, 2.0, 3.0)
                  for m in (0.5, 1.0, 2.0)
                  for a in (1.0, 5.0)),
}


def _rel_error(approx, exact):
    return abs(approx - exact) / abs(exact) if exact != 0 else abs(approx)


def _integrate_preset(name, fmt):
    if name == "fig2":
        rows = []
        for m, n in FIG2_PRESET["pairs"]:
            for rho in FIG2_PRESET["rho"]:
                p = ci.GIntegralParams(alpha=FIG2_PRESET["alpha"], rho=rho,
                                       m=m, n=n)
                approx, exact = ci.g_approx(p), ci.g_exact(p)
                rows.append((m, n, rho, approx, exact,
                             _rel_error(approx, exact)))
        return _table(("m", "n", "rho", "closed_form", "oracle", "rel_error"),
                      rows, fmt)
    if name == "fig3":
        rows = []
        for alpha, m, a in FIG3_PRESET["grid"]:
            p = ci.TIntegralParams(alpha=alpha, m=m, a=a, theta1=0.0,
                                   theta2=math.inf)
            fit = semilinear.fit_corollary1(alpha)
            approx, exact = ci.t_approx(p, fit), ci.t_exact(p)
            rows.append((alpha, m, a, approx, exact,
                         _rel_error(approx, exact)))
        return _table(("alpha", "m", "a", "closed_form", "oracle", "rel_error"),
                      rows, fmt)
    raise DomainError(f"unknown integrate preset {name!r}")


def _require_params(args, names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise DomainError(
            f"family {args.family} requires --" + ", --".join(missing))


def cmd_integrate(args) -> int:
    if args.preset:
        _emit(_integrate_preset(args.preset, args.format), args.out)
        return 0
    if not args.family:
        raise DomainError("provide --family or --preset")
    if args.family == "G":
        _require_params(args, ("alpha", "rho", "m", "n"))
        p = ci.GIntegralParams(alpha=args.alpha, rho=args.rho, m=args.m,
                               n=args.n)
        approx, exact = ci.g_approx(p), ci.g_exact(p)
        doc = {"family": "G", "alpha": args.alpha, "rho": args.rho,
               "m": args.m, "n": args.n}
    else:
        _require_params(args, ("alpha", "a", "theta1", "theta2"))
        m = args.m
        if args.family == "T0":
            if m not in (None, 0.0):
                raise DomainError("family T0 fixes m = 0")
            m = 0.0
        elif m is None:
            raise DomainError("family T requires --m")
        p = ci.TIntegralParams(alpha=args.alpha, m=m, a=args.a,
                               theta1=args.theta1, theta2=args.theta2)
        fit = semilinear.fit_lemma1(args.alpha)
        if args.family == "T0":
            approx = ci.t0_approx(p, fit)
        else:
            approx = ci.t_approx(p, fit)
        exact = ci.t_exact(p)
        doc = {"family": args.family, "alpha": args.alpha, "m": m,
               "a": args.a, "theta1": args.theta1, "theta2": args.theta2}
    doc.update({"closed_form": approx, "oracle": exact,
                "rel_error": _rel_error(approx, exact)})
    _emit(_record(doc, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

def _scenario_from_args(args) -> pa_model.PaScenario:
    return pa_model.PaScenario.from_field_units(
        fc_ghz=args.fc_ghz, da_wavelengths=args.da_wavelengths,
        v_kmh=args.v_kmh, delta_ms=args.delta_ms, snr_db=args.snr_db,
        kappa=args.kappa)


def cmd_rate(args) -> int:
    scenario = _scenario_from_args(args)
    if args.g_hat < 0 or not math.isfinite(args.g_hat):
        raise DomainError("g_hat must be finite and nonnegative")
    corr = pa_model.correlation_for(scenario)
    g_eff, sigma_eff = pa_model.apply_estimation_error(
        args.g_hat, corr.sigma, scenario.kappa)
    closed = rate_adapt.optimal_rate_lemma4(
        g_eff, sigma_eff, scenario.power, variant=args.variant)
    exact = rate_adapt.optimal_rate_exact(g_eff, sigma_eff, scenario.power)
    doc = {
        "effective_distance_m": corr.effective_distance,
        "sigma": corr.sigma,
        "sigma_eff": sigma_eff,
        "g_hat": args.g_hat,
        "g_hat_eff": g_eff,
        "power": scenario.power,
        "lemma4_rate_npcu": closed.rate,
        "lemma4_outage": closed.conditional_outage,
        "exact_rate_npcu": exact.rate,
        "exact_outage": exact.conditional_outage,
        "rescued": closed.rescued,
        "used_fallback": closed.used_fallback,
        "rate_zero_flag": closed.rate_zero_flag,
    }
    _emit(_record(doc, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _float_range(start, step, stop):
    n = int(round((stop - start) / step)) + 1
    return tuple(round(start + k * step, 10) for k in range(n))


def _base_scenario(v_kmh, delta_ms, snr_db, kappa):
    return pa_model.PaScenario.from_field_units(
        fc_ghz=2.68, da_wavelengths=1.5, v_kmh=v_kmh, delta_ms=delta_ms,
        snr_db=snr_db, kappa=kappa)


def _sweep_presets():
    """(label, SweepSpec) lists keyed by preset name.

    Axis extents not pinned elsewhere are preset defaults: fig5 SNR 0-30 dB
    step 2; fig6 kappa 0.5-1 step 0.05 at SNR 19 dB; fig7 delay 3-8 ms step
    0.25 at 120 and 150 km/h; fig8 speed windows covering mismatch up to a
    quarter wavelength for both delays, kappa 0.95.
    """
    lemma4 = (rate_adapt.Policy.LEMMA4_APPROX,)
    return {
        "fig5": [("", sim_harness.SweepSpec(
            scenario=_base_scenario(114.0, 5.0, 20.0, 1.0),
            variable="snr_db", values=_float_range(0.0, 2.0, 30.0)))],
        "fig6": [("", sim_harness.SweepSpec(
            scenario=_base_scenario(114.5, 5.0, 19.0, 1.0),
            variable="kappa", values=_float_range(0.5, 0.05, 1.0)))],
        "fig7": [
            ("v120", sim_harness.SweepSpec(
                scenario=_base_scenario(120.0, 5.0, 23.0, 1.0),
                variable="delay_ms", values=_float_range(3.0, 0.25, 8.0),
                policies=lemma4)),
            ("v150", sim_harness.SweepSpec(
                scenario=_base_scenario(150.0, 5.0, 23.0, 1.0),
                variable="delay_ms", values=_float_range(3.0, 0.25, 8.0),
                policies=lemma4)),
        ],
        "fig8": [
            ("delta5.35ms", sim_harness.SweepSpec(
                scenario=_base_scenario(113.0, 5.35, 10.0, 0.95),
                variable="speed_kmh", values=_float_range(94.0, 2.0, 132.0),
                policies=lemma4)),
            ("delta4.68ms", sim_harness.SweepSpec(
                scenario=_base_scenario(129.0, 4.68, 10.0, 0.95),
                variable="speed_kmh", values=_float_range(108.0, 2.0, 150.0),
                policies=lemma4)),
        ],
    }


_SWEEP_KEYS = pa_model.SCENARIO_KEYS + (
    "variable", "values", "realizations", "seed", "policies", "fit_variant",
    "fallback")


def _parse_values(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError("values range must be start:step:stop")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError as exc:
            raise DomainError("bad number in values range") from exc
        if step <= 0 or stop < start:
            raise DomainError("values range requires step > 0, stop >= start")
        return _float_range(start, step, stop)
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise DomainError("values must be numbers separated by commas") from exc


def parse_sweep_spec(text: str) -> sim_harness.SweepSpec:
    """Flat key-value sweep description (scenario keys plus sweep keys)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DomainError(f"sweep spec line {lineno}: expected 'key = value'")
        key, val = key.strip(), val.strip()
        if key not in _SWEEP_KEYS:
            raise DomainError(f"sweep spec line {lineno}: unknown key {key!r}")
        if key in values:
            raise DomainError(f"sweep spec line {lineno}: duplicate key {key!r}")
        values[key] = val
    missing = [k for k in ("variable", "values") if k not in values]
    if missing:
        raise DomainError("sweep spec is missing keys: " + ", ".join(missing))

    scenario_kwargs = {}
    for key in pa_model.SCENARIO_KEYS:
        if key in values:
            try:
                scenario_kwargs[key] = float(values[key])
            except ValueError as exc:
                raise DomainError(f"bad number for {key!r}") from exc
    kwargs = {
        "scenario": pa_model.PaScenario.from_field_units(**scenario_kwargs),
        "variable": values["variable"],
        "values": _parse_values(values["values"]),
    }
    if "realizations" in values:
        kwargs["realizations"] = int(values["realizations"])
    if "seed" in values:
        kwargs["seed"] = int(values["seed"])
    if "fit_variant" in values:
        kwargs["fit_variant"] = values["fit_variant"]
    if "fallback" in values:
        kwargs["fallback"] = values["fallback"]
    if "policies" in values:
        by_value = {p.value: p for p in rate_adapt.Policy}
        pols = []
        for name in values["policies"].split(","):
            name = name.strip()
            if name not in by_value:
                raise DomainError(f"unknown policy {name!r}")
            pols.append(by_value[name])
        kwargs["policies"] = tuple(pols)
    return sim_harness.SweepSpec(**kwargs)


def _suffixed(path: str, label: str) -> str:
    if not label:
        return path
    root, dot, ext = path.rpartition(".")
    if not dot:
        return f"{path}-{label}"
    return f"{root}-{label}.{ext}"


def cmd_sweep(args) -> int:
    from dataclasses import replace as dc_replace

    if bool(args.preset) == bool(args.spec):
        raise DomainError("provide exactly one of --preset or --spec")
    if args.preset:
        presets = _sweep_presets()
        if args.preset not in presets:
            raise DomainError(f"unknown preset {args.preset!r}; "
                              f"choose from {sorted(presets)}")
        jobs = presets[args.preset]
    else:
        with open(args.spec, "r", encoding="utf-8") as fh:
            jobs = [("", parse_sweep_spec(fh.read()))]
    overrides = {}
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.seed is not None:
        overrides["seed"] = args.seed
    jobs = [(label, dc_replace(spec, **overrides) if overrides else spec)
            for label, spec in jobs]

    # Run everything before writing anything: a validation or runtime error
    # must not leave partial output behind.
    rendered = []
    for label, spec in jobs:
        result = sim_harness.run_sweep(spec, workers=args.workers)
        if args.format == "json":
            rendered.append((label, sim_harness.sweep_to_json(result)))
        else:
            rendered.append((label, sim_harness.sweep_to_csv(result)))
    if args.out:
        for label, text in rendered:
            _emit(text, _suffixed(args.out, label))
    else:
        sys.stdout.write("\n".join(text for _, text in rendered))
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def cmd_selftest(args) -> int:
    report = selftest.run_suite(args.level)
    _emit(json.dumps(report, indent=2, default=str) + "\n", args.out)
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_output_args(p, default_format="csv"):
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marq",
        description="Marcum-Q semi-linear approximations, closed-form "
                    "integrals and predictor-antenna rate adaptation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="tabulate a semi-linear fit vs the exact CDF")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", required=True,
                   help="grid start:step:stop (or start:stop)")
    p.add_argument("--variant", choices=_VARIANTS, default="lemma1")
    _add_output_args(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("integrate", help="closed-form integral vs oracle")
    p.add_argument("--family", choices=("G", "T", "T0"))
    p.add_argument("--preset", choices=("fig2", "fig3"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--theta1", type=float)
    p.add_argument("--theta2", type=float,
                   help="upper limit; inf allowed for family T")
    _add_output_args(p, default_format="json")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("rate", help="rate policies for one scenario")
    p.add_argument("--fc-ghz", type=float, default=2.68)
    p.add_argument("--da-wavelengths", type=float, default=1.5)
    p.add_argument("--v-kmh", type=float, default=114.0)
    p.add_argument("--delta-ms", type=float, default=5.0)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--g-hat", type=float, required=True)
    p.add_argument("--variant", default="auto",
                   choices=("auto",) + tuple(_VARIANTS[:2]) + ("corollary2",))
    _add_output_args(p, default_format="json")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("sweep", help="Monte Carlo parameter sweep")
    p.add_argument("--preset", help="fig5, fig6, fig7 or fig8")
    p.add_argument("--spec", help="flat key-value sweep spec file")
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    _add_output_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the built-in check suites")
    p.add_argument("level", choices=("fast", "full"))
    p.add_argument("--out", help="write the JSON report to this path")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MarqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
