"""Command-line front end: simulate, verify, sweep, classify.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure, 3 an identity suite failed.  ``FRW_LOG`` (error|warn|info|debug)
sets the log level; logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import scenario as scn
from .errors import ConfigError, ConstraintViolation, DomainError, FRWError
from .friedmann import classify_omega
from .trajectory import COLUMN_HELP, COLUMNS, format_number, to_csv

log = logging.getLogger("frwflow")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IDENTITY = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
BAD_EVENTS = ("divergence", "step-underflow")

# shorthand sweep parameters; anything else is a dotted path into the JSON form
SWEEP_ALIASES = {"w": "fluids.0.w", "rho0": "fluids.0.rho0", "a0": "initial.a", "w_bd": "brans_dicke.w_bd"}

SWEEP_COLUMNS = (
    "value", "status", "t_final", "a_final", "event", "t_event",
    "max_constraint_residual", "max_identity_residual", "rho_exponent", "message",
)


def setup_logging():
    name = os.environ.get("FRW_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(name, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    if name not in LOG_LEVELS:
        log.warning("FRW_LOG=%r not recognised; using warn", name)


def _columns_epilog() -> str:
    lines = ["CSV columns (fixed order; quantities a model does not produce are empty cells):"]
    lines += [f"  {name:<20} {COLUMN_HELP[name]}" for name in COLUMNS]
    lines.append("\nExit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 identity suite failure.")
    return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def run_summary(sc, traj) -> dict:
    summary = {
        "model": sc.model,
        "rows": len(traj),
        "t_final": float(traj.t[-1]),
        "events": [ev.to_dict() for ev in traj.events],
        "terminal_event": None if traj.terminal_event is None else traj.terminal_event.kind,
        "final_state": traj.final_state(),
        "max_residuals": {
            name: traj.max_abs(name) for name in ("constraint_residual", "identity_residual") if name in traj
        },
        "params": traj.params,
        "scenario": scn.to_dict(sc),
    }
    if "a_exact" in traj:
        with np.errstate(invalid="ignore", divide="ignore"):
            summary["max_relative_deviation_from_exact"] = float(np.nanmax(np.abs(traj["a"] / traj["a_exact"] - 1)))
    if sc.model == "flow" and sc.formulation.kind != "intrinsic":
        from .flow import calibrate_sigma, chi_residual

        diag = chi_residual(traj)
        summary["flow_diagnostics"] = {
            "sigma": diag.sigma,
            "sigma_report": calibrate_sigma().report(),
            "residual_stipulation": diag.residual_stipulation,
            "residual_chi_form": diag.residual_chi,
            "residual_integrating_factor": diag.residual_integral,
            "c0": diag.c0,
            "printed_form_residuals": diag.literal,
        }
    return _jsonable(summary)


PLOT_TEMPLATE = '''"""Plot {what} written by frwflow."""
import csv

import matplotlib.pyplot as plt

with open({path!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))


def column(name):
    return [float(r[name]) if r[name] not in ("", "nan") else float("nan") for r in rows]


fig, axes = plt.subplots(len({ys!r}), 1, sharex=True, figsize=(7, 2.5 * len({ys!r})), squeeze=False)
for ax, name in zip(axes[:, 0], {ys!r}):
    ax.plot(column({x!r}), column(name), marker=".")
    ax.set_ylabel(name)
axes[-1, 0].set_xlabel({x!r})
fig.tight_layout()
fig.savefig({png!r}, dpi=120)
'''


def plot_script(csv_path: Path, x: str, ys, what: str) -> str:
    return PLOT_TEMPLATE.format(path=csv_path.name, x=x, ys=list(ys), png=csv_path.stem + ".png", what=what)


def cmd_simulate(args) -> int:
    try:
        sc = scn.load(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        traj = scn.run(sc)
    except ConstraintViolation as exc:
        print(f"error: inconsistent initial data: {exc} (residual {exc.residual!r})", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"error: invalid initial data: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FRWError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(to_csv(traj))
    summary = run_summary(sc, traj)
    summary_path = _sidecar(out, ".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    ys = [c for c in ("a", "H", "rho", "phi", "constraint_residual") if c in traj]
    _sidecar(out, "_plot.py").write_text(plot_script(out, "t", ys, "a trajectory"), encoding="utf-8")
    ev = traj.terminal_event
    msg = f"wrote {out} ({len(traj)} rows) and {summary_path.name}"
    if ev is not None:
        msg += f"; terminated by {ev.kind} at t={format_number(ev.t_event)}"
    print(msg)
    if ev is not None and ev.kind in BAD_EVENTS:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite

    checks = run_suite(args.suite, args.tol_scale)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    graded = [c for c in checks if not c.info]
    print(f"{len(graded) - len(failed)}/{len(graded)} checks passed")
    return EXIT_IDENTITY if failed else EXIT_OK


def parse_values(tokens) -> list:
    """Sweep values: numbers (fractions such as 1/3 allowed) or bare strings; commas also separate."""
    out = []
    for tok in tokens:
        for part in tok.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                v = float(Fraction(part))
            except (ValueError, ZeroDivisionError):
                out.append(part)
                continue
            out.append(int(v) if v.is_integer() and "." not in part and "/" not in part else v)
    return out


def apply_param(sc, param: str, value):
    if param == "c0":
        # c0 = a0^2 a'(0)
        return sc.with_param("initial.a_dot", float(value) / sc.initial.a**2)
    return sc.with_param(SWEEP_ALIASES.get(param, param), value)


def _density_exponent(traj):
    """Slope of log rho against log a, when both vary."""
    if "rho" not in traj:
        return None
    a, rho = np.asarray(traj["a"]), np.asarray(traj["rho"])
    if np.any(rho <= 0) or np.ptp(np.log(a)) < 1e-6:
        return None
    return float(np.polyfit(np.log(a), np.log(rho), 1)[0])


def sweep_cell(sc, param, value) -> dict:
    row = dict.fromkeys(SWEEP_COLUMNS)
    row["value"] = value
    try:
        cell = apply_param(sc, param, value)
        traj = scn.run(cell)
    except (FRWError, KeyError, IndexError, ValueError) as exc:
        row.update(status="error", message=f"{type(exc).__name__}: {exc}")
        return row
    ev = traj.terminal_event
    row.update(
        status="ok" if ev is None or ev.kind not in BAD_EVENTS else "numeric-failure",
        t_final=float(traj.t[-1]),
        a_final=float(traj["a"][-1]),
        event="" if ev is None else ev.kind,
        t_event=None if ev is None else ev.t_event,
        max_constraint_residual=traj.max_abs("constraint_residual"),
        max_identity_residual=traj.max_abs("identity_residual"),
        rho_exponent=_density_exponent(traj),
        message="",
    )
    return row


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_number(v)
    return str(v).replace(",", ";").replace("\n", " ")


def sweep_table(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    lines += [",".join(_cell(r[c]) for c in SWEEP_COLUMNS) for r in rows]
    return "\n".join(lines) + "\n"


def run_sweep(sc, param, values, jobs=1) -> list[dict]:
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map keeps grid order whatever the completion order
            return list(pool.map(sweep_cell, [sc] * len(values), [param] * len(values), values))
    return [sweep_cell(sc, param, v) for v in values]


def cmd_sweep(args) -> int:
    try:
        sc = scn.load(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    values = parse_values(args.values)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    rows = run_sweep(sc, args.param, values, args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(sweep_table(rows))
    _sidecar(out, "_plot.py").write_text(plot_script(out, "value", ["a_final", "t_final"], f"a sweep over {args.param}"), encoding="utf-8")
    n_bad = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {out}: {len(rows)} cells, {n_bad} failed")
    return EXIT_OK


def cmd_classify(args) -> int:
    try:
        c = classify_omega(args.rho, args.H, args.a, args.kappa, args.G)
    except DomainError as exc:
        print(f"error: {exc}; the density parameter needs a nonzero Hubble rate", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"Omega = {format_number(c.omega)}")
    print(f"label = {c.label} (sign of kappa implied: {c.kappa_sign:+d})")
    print(f"identity residual Omega - 1 - kappa/(H^2 a^2) = {format_number(c.identity_residual)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frwflow",
        description="FRW cosmology under a Ricci-flow stipulation, with Friedmann and Brans-Dicke models.",
        epilog=_columns_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="run one scenario", epilog=_columns_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Run a JSON scenario. Writes OUT (CSV), OUT-stem.summary.json and OUT-stem_plot.py.",
    )
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run identity suites")
    p.add_argument("--suite", default="all", choices=["geometry", "flow", "friedmann", "bd", "wdw", "odekit", "all"])
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by this factor")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "sweep", help="run a scenario over a parameter grid",
        description="Columns: " + ", ".join(SWEEP_COLUMNS) + ". rho_exponent is the fitted slope of log rho vs log a.",
    )
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True,
                   help="dotted config path (e.g. kappa, Lambda, fluids.0.w) or one of: c0, " + ", ".join(SWEEP_ALIASES))
    p.add_argument("--values", nargs="*", default=[], help="values, space or comma separated; fractions like 1/3 allowed")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("classify", help="density parameter and spatial openness of a state")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--G", type=float, default=1.0)
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; report those as invalid input
        return EXIT_VALIDATION if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
