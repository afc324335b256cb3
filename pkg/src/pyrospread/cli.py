"""Command-line pipeline driver.

Subcommands: synth, simulate, fit-source, gen-prior, export-vcu, evaluate.
Exit codes: 0 success, 1 usage error, 2 validation error (bad parameters,
grid mismatch, CFL), 3 runtime failure (blow-up, file formats, I/O).
Diagnostics go to stderr; results go to files (and the evaluate report to
stdout). Every command is a pure function of its arguments, config file
and seed, so repeated runs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import BadHeader, FireModelError, ValidationError
from .fields import GridSpec, field_from_mask
from .io_formats import (
    export_vcu_bundle,
    fit_report_kv,
    format_value,
    metric_report_kv,
    read_environment,
    read_field_sequence,
    read_kv,
    read_mask_pgm,
    read_mask_sequence,
    write_environment,
    write_field_sequence,
    write_kv,
    write_mask_sequence,
)
from .metrics import (
    ScoredFrame,
    evaluate_field_sequences,
    evaluate_mask_sequences,
    pr_curve,
)
from .pde import PhysicalParams
from .simulator import (
    SCENARIO_KINDS,
    SimConfig,
    SimState,
    fitted_injection,
    physical_source,
    run_prior,
    run_simulation,
    synth_scenario,
)

_PARAM_OPTS = ("c", "k", "gamma", "a_coeff", "c_cool", "b_arrhenius", "t_ambient", "t_burn")
_SIM_FLOAT_OPTS = ("dt", "threshold_theta", "beta_fuel", "smooth_radius", "fit_tol")
_SIM_INT_OPTS = ("steps_per_frame", "horizon_frames", "fit_max_iters")

_DEFAULTS = {
    "c": 1.0,
    "k": 0.25,
    "gamma": 0.0,
    "a_coeff": 1.0,
    "c_cool": 0.8,
    "b_arrhenius": 0.2,
    "t_ambient": 0.0,
    "t_burn": 1.0,
    "dt": None,
    "steps_per_frame": 10,
    "horizon_frames": 17,
    "threshold_theta": 0.5,
    "fuel_depletion": False,
    "beta_fuel": 0.0134,
    "smooth_radius": 1.0,
    "fit_tol": 1e-8,
    "fit_max_iters": 10_000,
}


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {s!r}")


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file; flags override it")
    for key in _PARAM_OPTS + _SIM_FLOAT_OPTS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None)
    for key in _SIM_INT_OPTS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int, default=None)
    p.add_argument("--fuel-depletion", dest="fuel_depletion", type=_parse_bool, default=None)


def _merged_options(args) -> dict:
    """defaults < config file < explicit command-line flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        kv = read_kv(args.config)
        for key, default in _DEFAULTS.items():
            if key not in kv:
                continue
            raw = kv[key]
            try:
                if key == "fuel_depletion":
                    merged[key] = raw.lower() == "true"
                elif key in _SIM_INT_OPTS:
                    merged[key] = int(raw)
                else:
                    merged[key] = float(raw)
            except ValueError:
                raise BadHeader(f"{args.config}: bad value for {key!r}: {raw!r}") from None
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _params_from(merged: dict) -> PhysicalParams:
    return PhysicalParams(**{k: merged[k] for k in _PARAM_OPTS})


def _config_from(merged: dict, dt_frame: float, horizon: int | None = None) -> SimConfig:
    steps = merged["steps_per_frame"]
    dt = merged["dt"] if merged["dt"] is not None else dt_frame / steps
    return SimConfig(
        dt=dt,
        steps_per_frame=steps,
        horizon_frames=horizon if horizon is not None else merged["horizon_frames"],
        threshold_theta=merged["threshold_theta"],
        fuel_depletion=merged["fuel_depletion"],
        beta_fuel=merged["beta_fuel"],
        smooth_radius=merged["smooth_radius"],
    )


def _log(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    spec = GridSpec(args.size, args.size, args.dx)
    sc = synth_scenario(
        args.kind,
        spec,
        args.seed,
        n_observed=args.observed,
        n_future=args.future,
        dt_frame=args.dt_frame,
        steps_per_frame=args.steps_per_frame or 10,
    )
    out = Path(args.out)
    write_mask_sequence(sc.observed, out / "obs")
    write_mask_sequence(sc.future, out / "truth")
    write_environment(sc.env, out / "env")
    write_field_sequence(sc.temps_observed, sc.observed.dt_frame, out / "fields")
    p, cfg = sc.params, sc.config
    write_kv(
        out / "scenario.cfg",
        {
            "kind": sc.kind,
            "seed": sc.seed,
            **{key: getattr(p, key) for key in _PARAM_OPTS},
            "dt": cfg.dt,
            "steps_per_frame": cfg.steps_per_frame,
            "horizon_frames": cfg.horizon_frames,
            "threshold_theta": cfg.threshold_theta,
            "fuel_depletion": cfg.fuel_depletion,
            "beta_fuel": cfg.beta_fuel,
            "smooth_radius": cfg.smooth_radius,
        },
    )
    _log(args, f"synth {sc.kind} seed={sc.seed}: {len(sc.observed)} observed + "
               f"{len(sc.future)} truth frames -> {out}")
    return 0


def cmd_simulate(args) -> int:
    merged = _merged_options(args)
    params = _params_from(merged)
    env = read_environment(args.env)
    cfg = _config_from(merged, args.dt_frame)
    init_mask = read_mask_pgm(args.init, env.spec.dx)
    temp0 = field_from_mask(init_mask, params.t_ambient, params.t_burn, cfg.smooth_radius)
    state = SimState(temp0, env.fuel0, 0.0)
    masks, temps = run_simulation(
        state, env, params, cfg, args.frames, physical_source(params),
        record_fields=args.fields_out is not None,
    )
    write_mask_sequence(masks, args.out)
    if args.fields_out:
        write_field_sequence(temps, cfg.dt_frame, args.fields_out)
    _log(args, f"simulated {args.frames} frames -> {args.out}")
    return 0


def cmd_fit_source(args) -> int:
    merged = _merged_options(args)
    params = _params_from(merged)
    observed = read_mask_sequence(args.obs)
    env = read_environment(args.env)
    cfg = _config_from(merged, observed.dt_frame)
    _, fit, _ = fitted_injection(
        observed, env, params, cfg,
        fit_tol=merged["fit_tol"], fit_max_iters=merged["fit_max_iters"],
    )
    write_kv(args.out, fit_report_kv(fit))
    if not fit.converged:
        _log(args, f"fit did not converge within {fit.iterations} iterations "
                   f"(residual {fit.residual_norm:.6g})")
    _log(args, f"fit report -> {args.out}")
    return 0


def cmd_gen_prior(args) -> int:
    merged = _merged_options(args)
    params = _params_from(merged)
    observed = read_mask_sequence(args.obs)
    env = read_environment(args.env)
    cfg = _config_from(merged, observed.dt_frame, horizon=args.horizon)
    priors, fit = run_prior(
        observed, env, params, cfg,
        fit_tol=merged["fit_tol"], fit_max_iters=merged["fit_max_iters"],
    )
    out = Path(args.out)
    write_mask_sequence(priors, out)
    write_kv(out / "fit_report.txt", fit_report_kv(fit))
    if not fit.converged:
        _log(args, f"fit did not converge within {fit.iterations} iterations; "
                   f"continuing with best weights (residual {fit.residual_norm:.6g})")
    if args.figures:
        from . import figures

        figdir = out / "figures"
        figdir.mkdir(parents=True, exist_ok=True)
        figures.save_fit_summary(fit, figdir / "fit_summary.png")
        figures.save_mask_strip(priors, figdir / "prior_frames.png", title="prior masks")
    _log(args, f"{len(priors)} prior frames -> {out}")
    return 0


def cmd_export_vcu(args) -> int:
    fields, _ = read_field_sequence(args.frames)
    priors = read_mask_sequence(args.priors)
    bundle = export_vcu_bundle(
        fields,
        priors,
        args.out,
        provenance={
            "frames": Path(args.frames).name,
            "priors": Path(args.priors).name,
            "tool": f"pyrospread {__version__} export-vcu",
        },
    )
    _log(args, f"bundle a={bundle.a} b={bundle.b} -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    if args.fields:
        pred, _ = read_field_sequence(args.pred)
        truth, _ = read_field_sequence(args.truth)
        report = evaluate_field_sequences(pred, truth, args.max_value)
    else:
        pred = read_mask_sequence(args.pred)
        truth = read_mask_sequence(args.truth)
        report = evaluate_mask_sequences(pred, truth)
    kv = metric_report_kv(report)
    for key, value in kv.items():
        print(f"{key} = {format_value(value)}")
    if args.out:
        write_kv(args.out, kv)
        _log(args, f"report -> {args.out}")
    if args.figures:
        from . import figures

        figdir = Path(args.figures)
        figdir.mkdir(parents=True, exist_ok=True)
        figures.save_metric_curves(report, figdir / "metric_curves.png")
        if not args.fields:
            recall, precision = pr_curve(
                [
                    ScoredFrame(
                        field_from_mask(p, 0.0, 1.0, 0.0), t
                    )
                    for p, t in zip(pred.frames, truth.frames)
                ]
            )
            figures.save_pr_curve(recall, precision, report.auprc, figdir / "pr_curve.png")
            figures.save_mask_overlay(
                pred.frames[-1], truth.frames[-1], figdir / "overlay_last.png",
                title="last frame: white hit / red false alarm / blue miss",
            )
        _log(args, f"figures -> {figdir}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyrospread",
        description="Fire-spread prior masks from fitted-source finite-difference simulation",
    )
    parser.add_argument("--version", action="version", version=f"pyrospread {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress stderr progress lines")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic scenario")
    p.add_argument("--kind", required=True, choices=SCENARIO_KINDS)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observed", type=int, default=17)
    p.add_argument("--future", type=int, default=17)
    p.add_argument("--dt-frame", dest="dt_frame", type=float, default=5.0)
    p.add_argument("--steps-per-frame", dest="steps_per_frame", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", parents=[common], help="integrate the physical source forward")
    p.add_argument("--env", required=True)
    p.add_argument("--init", required=True, help="initial ignition mask (PGM)")
    p.add_argument("--frames", type=int, default=17)
    p.add_argument("--dt-frame", dest="dt_frame", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.add_argument("--fields-out", dest="fields_out", default=None)
    _add_model_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit-source", parents=[common], help="fit the combination source weights")
    p.add_argument("--obs", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--out", required=True, help="fit report file")
    _add_model_flags(p)
    p.set_defaults(func=cmd_fit_source)

    p = sub.add_parser("gen-prior", parents=[common], help="generate the prior mask sequence")
    p.add_argument("--obs", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true", help="render fit/prior figures")
    _add_model_flags(p)
    p.set_defaults(func=cmd_gen_prior)

    p = sub.add_parser("export-vcu", parents=[common], help="write the conditioning bundle")
    p.add_argument("--frames", required=True, help="observed field sequence directory")
    p.add_argument("--priors", required=True, help="prior mask sequence directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_vcu)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--fields", action="store_true", help="compare field sequences instead of masks")
    p.add_argument("--max-value", dest="max_value", type=float, default=1.0)
    p.add_argument("--out", default=None, help="also write the report to this file")
    p.add_argument("--figures", default=None, help="directory for rendered figures")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except FireModelError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()
