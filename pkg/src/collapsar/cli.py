"""``collapsar`` command line: solve, verify, blowup and legacy runs.

Exit codes: 0 success, 2 configuration or validation error, 3 numerical
failure, 4 residual thresholds exceeded.  ``COLLAPSAR_LOG`` selects the log
level (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import FORMATS, RunConfig
from .errors import BlowupReached, InvalidArgument, NumericalFailure
from .legacy import integrate_emden
from .model import validate
from .profile import integrate_profile
from .report import plot_profile, plot_residual_map, plot_scaling, write_csv, write_json
from .scaling import a_eval, amplification_window, emden_scaling_integrate, make_scaling
from .verify import verify_solution

log = logging.getLogger("collapsar")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_THRESHOLD = 4

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging() -> None:
    name = os.environ.get("COLLAPSAR_LOG", "warn").strip().lower()
    level = LOG_LEVELS.get(name, logging.WARNING)
    root = logging.getLogger("collapsar")
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
    if name not in LOG_LEVELS:
        root.warning("unknown COLLAPSAR_LOG value %r, using warn", name)


def _meta(cfg: RunConfig) -> dict:
    return {"version": __version__, "case": cfg.solution_case.value, "params": cfg.params().to_dict()}


def cmd_solve(cfg: RunConfig, out: Path, formats) -> int:
    params = cfg.params()
    profile = integrate_profile(params, cfg.solution_case, z_max=cfg.z_max, rel_tol=cfg.rel_tol,
                                abs_tol=cfg.abs_tol, z0=cfg.z0, eps_cut=cfg.eps_cut)
    if "csv" in formats:
        rows = zip(profile.z_nodes, profile.f_values, profile.fprime_values, profile.M_values)
        write_csv(out / "profile.csv", ("z", "f", "fprime", "M"), rows)
    if "json" in formats:
        payload = _meta(cfg) | {
            "Z_mu": profile.Z_mu,
            "support_kind": profile.support_kind,
            "support_end": profile.support_end,
            "total_M": profile.total_M,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "z0": cfg.z0,
            "eps_cut": cfg.eps_cut,
            "integrator_stats": profile.integrator_stats,
        }
        write_json(out / "profile.json", payload)
    if "svg" in formats:
        z = np.linspace(0.0, profile.support_end, 400)
        plot_profile(out / "profile.svg", z, profile.evaluate(z)[0], profile.Z_mu, title=cfg.solution_case.value)
    return EXIT_OK


def verify_summary(cfg: RunConfig, report) -> dict:
    checks = {
        "mass": report.mass_residual_max <= cfg.mass_threshold,
        "momentum": report.momentum_residual_max <= cfg.momentum_threshold,
    }

    def offenders(rows):
        return [{"t": t, "r": r, "value": v} for t, r, v in rows]

    return _meta(cfg) | {
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "derivatives": report.derivatives,
        "grid": {"t_samples": len(report.t_grid), "r_samples": int(report.r_grid.shape[1]),
                 "t_grid": report.t_grid},
        "Z_mu": report.Z_mu,
        "support_kind": report.support_kind,
        "support_end": report.support_end,
        "mass_residual_max": report.mass_residual_max,
        "mass_residual_l2": report.mass_residual_l2,
        "momentum_residual_max": report.momentum_residual_max,
        "momentum_residual_l2": report.momentum_residual_l2,
        "mass_raw_max": report.mass_raw_max,
        "momentum_raw_max": report.momentum_raw_max,
        "scale_factors": {
            "mass_max": float(np.max(report.mass_scale)),
            "mass_min": float(np.min(report.mass_scale)),
            "momentum_max": float(np.max(report.momentum_scale)),
            "momentum_min": float(np.min(report.momentum_scale)),
        },
        "worst_offenders": {k: offenders(v) for k, v in report.worst.items()},
        "thresholds": {"mass": cfg.mass_threshold, "momentum": cfg.momentum_threshold},
        "checks": checks,
        "pass": all(checks.values()),
    }


def cmd_verify(cfg: RunConfig, out: Path, formats) -> int:
    report = verify_solution(
        cfg.params(), cfg.solution_case, t_samples=cfg.t_samples, r_samples_per_t=cfg.r_samples,
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, z_max=cfg.z_max, t_max=cfg.t_max, z0=cfg.z0,
        eps_cut=cfg.eps_cut, derivatives=cfg.derivatives, workers=cfg.workers,
    )
    summary = verify_summary(cfg, report)
    if "csv" in formats:
        header = ("t", "r", "mass_raw", "mass_scaled", "momentum_raw", "momentum_scaled")
        write_csv(out / "residuals.csv", header, report.rows())
    # the pass/fail record is always written
    write_json(out / "summary.json", summary)
    if "svg" in formats:
        plot_residual_map(out / "momentum_residual.svg", report.t_grid, report.momentum_scaled, "momentum residual")
        plot_residual_map(out / "mass_residual.svg", report.t_grid, report.mass_scaled, "mass residual")
    if not summary["pass"]:
        log.error("residual thresholds exceeded: %s", summary["checks"])
        return EXIT_THRESHOLD
    return EXIT_OK


def _legacy_blowup(cfg: RunConfig, out: Path, formats) -> int:
    params = cfg.params()
    validate(params, cfg.solution_case).raise_if_invalid()
    t_max = 10.0 if cfg.t_max is None else cfg.t_max
    s = emden_scaling_integrate(cfg.lambda_legacy, cfg.a0, cfg.a1, cfg.N, t_max, rel_tol=min(cfg.rel_tol, 1e-12))
    tr = s.trajectory
    t = np.linspace(0.0, tr.t_end, 201)
    a, a_dot = tr.dense(t)
    rows = [{"t": float(ti), "a": float(ai), "a_dot": float(bi), "amplification": float((cfg.a0 / ai) ** cfg.N)}
            for ti, ai, bi in zip(t[::20], a[::20], a_dot[::20])]
    payload = _meta(cfg) | {
        "T": tr.collapse_time,
        "message": "collapse to the positivity floor" if tr.collapsed else "no collapse within t_max",
        "t_end": tr.t_end,
        "energy0": tr.energy0,
        "relative_energy_drift": tr.energy_drift,
        "table": rows,
    }
    if "json" in formats:
        write_json(out / "blowup.json", payload)
    if "csv" in formats:
        write_csv(out / "scaling.csv", ("t", "a", "a_dot"), zip(t, a, a_dot))
    if "svg" in formats:
        plot_scaling(out / "scaling.svg", t, a, tr.collapse_time)
    return EXIT_OK


def cmd_blowup(cfg: RunConfig, out: Path, formats) -> int:
    case = cfg.solution_case
    if case.is_legacy:
        return _legacy_blowup(cfg, out, formats)
    params = cfg.params()
    validate(params, case).raise_if_invalid()
    s = make_scaling(params, case)
    T = s.blowup_time
    if T is not None:
        times = [T * (1.0 - 10.0 ** (-k)) for k in range(cfg.approach_decades + 1)]
        message = f"blowup at T = {T!r}"
    else:
        horizon = 1.0 if cfg.t_max is None else cfg.t_max
        times = list(np.linspace(0.0, horizon, cfg.approach_decades + 1))
        message = "no blowup (exponential scaling)" if case.value == "Case2" else "no blowup"
    a0 = a_eval(s, 0.0)[0]
    rows = []
    for t in times:
        a, a_dot, _ = a_eval(s, t)
        rows.append({
            "t": float(t),
            "a": a,
            "a_dot": a_dot,
            "central_density": params.alpha_ic / a**params.N,
            "amplification": (a0 / a) ** params.N,
        })
    windows = {repr(float(f)): amplification_window(s, f) for f in cfg.amplification_factors}
    payload = _meta(cfg) | {"T": T, "message": message, "table": rows, "amplification_windows": windows}
    if "json" in formats:
        write_json(out / "blowup.json", payload)
    if "csv" in formats:
        write_csv(out / "blowup.csv", ("t", "a", "a_dot", "central_density", "amplification"),
                  ([r["t"], r["a"], r["a_dot"], r["central_density"], r["amplification"]] for r in rows))
    if "svg" in formats:
        end = times[-1] if T is None else 0.999 * T
        tt = np.linspace(0.0, end, 300)
        plot_scaling(out / "scaling.svg", tt, [a_eval(s, x)[0] for x in tt], T)
    return EXIT_OK


def cmd_legacy(cfg: RunConfig, out: Path, formats) -> int:
    prof = integrate_emden(cfg.emden_kind, cfg.N, cfg.K, cfg.mu, cfg.alpha_ic, z_max=cfg.z_max,
                           rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, z0=cfg.z0)
    if "csv" in formats:
        write_csv(out / "profile.csv", ("z", "y", "yprime"), zip(prof.y_nodes, prof.y_values, prof.yprime_values))
    if "json" in formats:
        payload = {
            "version": __version__,
            "kind": prof.kind,
            "N": prof.N,
            "K": prof.K,
            "mu": prof.mu,
            "alpha_ic": prof.alpha_ic,
            "coefficient": prof.coeff,
            "exponent": prof.exponent,
            "Z_mu": prof.Z_mu,
            "support_end": prof.support_end,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "integrator_stats": prof.integrator_stats,
        }
        write_json(out / "profile.json", payload)
    if "svg" in formats:
        z = np.linspace(prof.z0, prof.support_end, 400)
        plot_profile(out / "profile.svg", z, prof.dense(z)[0], prof.Z_mu, ylabel="y(z)", title=prof.kind.value)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "blowup": cmd_blowup, "legacy": cmd_legacy}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collapsar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--format", help=f"comma-separated subset of {','.join(FORMATS)}")
    return parser


def _parse_formats(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in FORMATS]
    if bad or not items:
        raise InvalidArgument(f"--format must be a comma-separated subset of {','.join(FORMATS)}")
    return items


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = RunConfig.load(args.config)
        formats = _parse_formats(args.format) if args.format else list(cfg.formats)
        out = Path(args.out or cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, formats)
    except InvalidArgument as exc:
        print(f"collapsar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, BlowupReached) as exc:
        print(f"collapsar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
