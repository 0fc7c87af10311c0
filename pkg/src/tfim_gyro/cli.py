"""Command-line front end: echo curves, half-width fits, protocol runs.

Exit codes: 0 success, 2 validation error, 3 insufficient data,
4 verification failure.  Units are dimensionless with J = hbar = a = 1
unless ``--coupling`` / ``--hbar`` override them.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, ed
from .core import ChainSpec, FieldConfig, characteristic_time, loschmidt_echo
from .errors import ConfigError, CrossingNotBracketedError, EchoError, ValleyTooShallowError
from .protocol import ProtocolConfig, run_trials

EXIT_OK, EXIT_VALIDATION, EXIT_INSUFFICIENT, EXIT_VERIFY = 0, 2, 3, 4

TRIAL_COLUMNS = ("trial", "omega0", "lambda0", "omega1", "omega1_corrected", "abs_error", "status")

# JSON keys accepted in a run configuration
RUN_CONFIG_KEYS = {
    "n_spins", "lattice_spacing", "coupling", "hbar",
    "lambda", "delta", "omega",
    "time", "omega_min", "omega_max", "points",
    "true_omega", "sigma", "noise_model", "scan_points", "trials", "seed",
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{x:.17g}"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def _spec_from_args(args) -> ChainSpec:
    return ChainSpec(args.n, coupling=args.coupling, hbar=args.hbar, lattice_spacing=args.lattice_spacing)


def _time_arg(args, spec: ChainSpec) -> float:
    return characteristic_time(spec) if args.time is None else args.time


def _parse_deltas(text: str) -> list[float]:
    try:
        deltas = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--deltas must be a comma-separated list of numbers, got {text!r}") from None
    if not deltas:
        raise UsageError("--deltas is empty")
    if any(d < 0 or not math.isfinite(d) for d in deltas):
        raise UsageError("--deltas must be finite and >= 0")
    return deltas


def cmd_curve(args) -> int:
    spec = _spec_from_args(args)
    t = _time_arg(args, spec)
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.points > 1 and not args.omega_max > args.omega_min:
        raise UsageError("--omega-max must exceed --omega-min")
    grid = np.linspace(args.omega_min, args.omega_max, args.points)
    curve = analysis.scan_curve(spec, args.delta, args.lam, grid, time=t)
    buf = io.StringIO()
    buf.write("omega,lambda_tilde,loschmidt_echo\n")
    for w, lt, L in curve.samples:
        buf.write(f"{fmt(w)},{fmt(lt)},{fmt(L)}\n")
    write_atomic(args.out, buf.getvalue())
    return EXIT_OK


def _half_width_points(args, spec, t, deltas):
    points = []
    for d in deltas:
        try:
            r = analysis.half_width(spec, d, args.lam, t)
        except (ValleyTooShallowError, CrossingNotBracketedError) as exc:
            points.append({"delta": d, "epsilon0": None, "delta_omega": None, "note": str(exc)})
        else:
            points.append({"delta": d, "epsilon0": r.epsilon0, "delta_omega": r.delta_omega})
    return points


def _width_report(args, fit_required: bool) -> int:
    spec = _spec_from_args(args)
    t = _time_arg(args, spec)
    deltas = _parse_deltas(args.deltas)
    if fit_required and len(deltas) < 3:
        raise UsageError("fit needs at least 3 deltas")
    points = _half_width_points(args, spec, t, deltas)
    usable = [(p["delta"], p["epsilon0"]) for p in points if p["epsilon0"] is not None]
    report = {
        "n": spec.n_spins,
        "time": t,
        "convention": args.convention,
        "points": points,
        "sqrt_eta": None,
        "r_squared": None,
    }
    if len(usable) >= 3:
        fit = analysis.fit_eta(usable, spec.n_spins, args.convention)
        report["sqrt_eta"] = fit.sqrt_eta
        report["r_squared"] = fit.r_squared
    write_atomic(args.out, dump_json(report))
    if fit_required and len(usable) < 3:
        print(f"error: only {len(usable)} usable half-width points, need 3", file=sys.stderr)
        return EXIT_INSUFFICIENT
    if not usable:
        print("error: no usable half-width points", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return EXIT_OK


def cmd_halfwidth(args) -> int:
    return _width_report(args, fit_required=False)


def cmd_fit(args) -> int:
    return _width_report(args, fit_required=True)


def _parse_cases(text: str) -> list[tuple[int, float]]:
    cases = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            n, d = tok.split(":")
            cases.append((int(n), float(d)))
        except ValueError:
            raise UsageError(f"--cases entries must look like N:delta, got {tok!r}") from None
    if not cases:
        raise UsageError("--cases is empty")
    return cases


def cmd_collapse(args) -> int:
    cases = _parse_cases(args.cases)
    time = args.time
    try:
        report = analysis.collapse_check(cases, args.lam, time, args.coupling, args.hbar)
    except (ValleyTooShallowError, CrossingNotBracketedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    out = {
        "time": report.results[0].time,
        "cases": [
            {"n": n, "delta": d, "delta_sqrt_n": d * math.sqrt(n), "delta_omega": w}
            for (n, d), w in zip(report.cases, report.half_widths)
        ],
        "max_deviation": report.max_deviation,
        "tolerance": report.tolerance,
        "passed": report.passed,
    }
    write_atomic(args.out, dump_json(out))
    return EXIT_OK


def load_run_config(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - RUN_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def protocol_config(raw: dict) -> ProtocolConfig:
    missing = [k for k in ("n_spins", "delta", "true_omega", "sigma") if k not in raw]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    spec = ChainSpec(
        raw["n_spins"],
        lattice_spacing=raw.get("lattice_spacing", 1.0),
        coupling=raw.get("coupling", 1.0),
        hbar=raw.get("hbar", 1.0),
    )
    extra = {k: raw[k] for k in ("noise_model", "time", "scan_points", "trials", "seed") if k in raw}
    return ProtocolConfig(spec, raw["true_omega"], raw["sigma"], raw["delta"], **extra)


def cmd_protocol(args) -> int:
    config = protocol_config(load_run_config(args.config))
    summary = run_trials(config)
    rows = io.StringIO()
    writer = csv.writer(rows, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for rec in summary.records:
        tr = rec.trial
        if tr is None:
            writer.writerow([rec.index, fmt(rec.omega0), "", "", "", "", rec.status])
        else:
            writer.writerow([
                rec.index, fmt(tr.omega0), fmt(tr.lambda0), fmt(tr.omega1),
                fmt(tr.omega1_corrected), fmt(tr.abs_error), rec.status,
            ])
    out = {
        "trials": summary.trials,
        "mean_abs_error": _finite_or_none(summary.mean_abs_error),
        "p95_abs_error": _finite_or_none(summary.p95_abs_error),
        "success_rate": _finite_or_none(summary.success_rate),
        "resolution_delta_omega": summary.resolution_delta_omega,
        "feasible": summary.feasible,
        "completed": summary.completed,
        "success_rate_uncorrected": _finite_or_none(summary.success_rate_uncorrected),
        "mean_error": _finite_or_none(summary.mean_error),
        "mean_abs_error_corrected": _finite_or_none(summary.mean_abs_error_corrected),
        "time": config.eval_time,
        "seed": config.seed,
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_atomic(out_dir / "trials.csv", rows.getvalue())
    text = dump_json(out)
    write_atomic(out_dir / "summary.json", text)
    sys.stdout.write(text)
    if summary.completed == 0:
        print("error: no trial produced an estimate", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return EXIT_OK


def verify_report(max_n: int, bound: float, frame_bound: float, delta: float = 0.1) -> dict:
    """ED against the mode product for even N in 4..max_n, plus the frame check."""
    spec_t0 = characteristic_time(ChainSpec(2))
    times = np.linspace(0.0, 2.0 * spec_t0, 20)
    echo = []
    for n in range(4, max_n + 1, 2):
        spec = ChainSpec(n)
        worst = 0.0
        for lt in (1.5, 2.0):
            ref, _, _ = ed.loschmidt_echo_ed_series(n, lt, delta, times)
            prod = np.array([loschmidt_echo(spec, FieldConfig(lt, delta), t) for t in times])
            worst = max(worst, float(np.abs(prod - ref).max()))
        echo.append({"n": n, "max_deviation": worst})
    frame = []
    for n in (1, 2, 3):
        history = ed.frame_convergence(n, 2.0, 2.0, 10.0, target=frame_bound)
        control = ed.frame_equivalence_check(n, 2.0, 0.0, 10.0, 1000)
        frame.append({
            "n": n,
            "steps": history[-1].steps,
            "max_infidelity": history[-1].max_infidelity,
            "control_infidelity": control.max_infidelity,
        })
    ok = all(e["max_deviation"] <= bound for e in echo) and all(
        f["max_infidelity"] < frame_bound and f["control_infidelity"] < 1e-10 for f in frame
    )
    return {
        "echo_bound": bound,
        "frame_bound": frame_bound,
        "echo": echo,
        "frame": frame,
        "decreasing_in_n": all(
            b["max_deviation"] < a["max_deviation"] for a, b in zip(echo, echo[1:])
        ),
        "passed": ok,
    }


def cmd_verify(args) -> int:
    if not 4 <= args.max_n <= ed.MAX_DENSE_SPINS:
        raise UsageError(f"--max-n must be in [4, {ed.MAX_DENSE_SPINS}], got {args.max_n}")
    report = verify_report(args.max_n, args.bound, args.frame_bound)
    write_atomic(args.out, dump_json(report))
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _add_chain_args(p, n_default=2000):
    p.add_argument("--n", type=int, default=n_default, help="number of spins (even)")
    p.add_argument("--coupling", type=float, default=1.0, help="J")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--lattice-spacing", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfim-gyro", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="echo versus rotation velocity (CSV)")
    _add_chain_args(p)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--time", type=float, default=None, help="evaluation time (default t0)")
    p.add_argument("--omega-min", type=float, default=0.0)
    p.add_argument("--omega-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_curve)

    for name, func in (("halfwidth", cmd_halfwidth), ("fit", cmd_fit)):
        p = sub.add_parser(name, help="half-widths and sqrt(eta) fit (JSON)")
        _add_chain_args(p, 20000)
        p.add_argument("--deltas", required=True, help="comma-separated coupling list")
        p.add_argument("--lambda", dest="lam", type=float, default=2.0)
        p.add_argument("--time", type=float, default=None)
        p.add_argument("--convention", choices=analysis.CONVENTIONS, default="one_sided")
        p.add_argument("--out", default="-")
        p.set_defaults(func=func)

    p = sub.add_parser("collapse", help="half-widths at fixed delta*sqrt(N) (JSON)")
    p.add_argument("--cases", default="200:0.1,500:0.063,2000:0.032,20000:0.01")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("protocol", help="Monte Carlo sensing protocol")
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("verify", help="dense-oracle checks")
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--bound", type=float, default=0.05, help="max |L_product - L_ed|")
    p.add_argument("--frame-bound", type=float, default=1e-6)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, TypeError) as exc:
        # ConfigError and the input-validation EchoErrors are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EchoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT


if __name__ == "__main__":
    sys.exit(main())
