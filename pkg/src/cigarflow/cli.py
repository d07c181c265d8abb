"""Command-line driver.

    cigarflow run <config.json> [--out DIR] [--quiet]
    cigarflow verify <config.json> [--quiet]
    cigarflow converge <config.json> [--quiet]
    cigarflow oracle
    cigarflow report <run-dir>

Exit codes: 0 success, 1 invariant violation, 2 usage/config error,
3 numerical abort (or output I/O failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from cigarflow import cigar
from cigarflow.diagnostics import emit_diagnostics, read_diagnostics
from cigarflow.scenarios import (
    ConfigError,
    load_config,
    manufactured_solution_error,
    run_scenario,
    verify_scenario,
)
from cigarflow.snapshots import save_snapshot

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _progress_printer(quiet):
    if quiet:
        return None

    def show(rec):
        print(
            f"  t={rec.t:<8g} dt={rec.dt:.3e} sup_R={rec.sup_R:.4f} "
            f"w_drift={rec.w_drift:.2e} sup_h={rec.sup_h:.4e} width={rec.width_bound:.5f}",
            file=sys.stderr,
        )

    return show


def _snapshot_times(config):
    if config.snapshot_interval is None:
        return []
    k = 1
    times = [0.0]
    while k * config.snapshot_interval <= config.t_end + 1e-12:
        times.append(round(k * config.snapshot_interval, 12))
        k += 1
    return times


def cmd_run(args):
    config = load_config(args.config)
    out_dir = Path(args.out or config.output_directory or f"runs/{config.name}")
    out_dir.mkdir(parents=True, exist_ok=True)

    times = _snapshot_times(config)

    def snapshot_hook(state):
        save_snapshot(state, out_dir / f"snapshot_t{state.t:.6f}.txt")

    if not args.quiet:
        print(f"running scenario {config.name!r} to t={config.t_end}", file=sys.stderr)
    result = run_scenario(
        config,
        snapshot_times=times,
        snapshot_hook=snapshot_hook if times else None,
        progress=_progress_printer(args.quiet),
    )

    try:
        with open(out_dir / "diagnostics.csv", "w") as fh:
            emit_diagnostics(result.records, fh)
        save_snapshot(result.final_state, out_dir / "snapshot_final.txt")
        summary = {
            "name": config.name,
            "t_final": result.final_state.t,
            "aborted": result.aborted,
            "abort_message": result.abort_message,
            "profile_distance_final": result.profile_distance_final,
            "dist_trace": result.dist_trace,
            "kahler_trace": result.kahler_trace,
            "hypothesis": {
                "sup_log_u0": result.final_state.init.sup_log_u0,
                "sup_grad_log_u0": result.final_state.init.sup_grad_log_u0,
                "sup_potential_gap": result.final_state.init.sup_potential_gap,
                "res_poisson0": result.final_state.init.res_poisson0,
            },
            "config": config.raw,
        }
        with open(out_dir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    except OSError as err:
        print(f"error: failed to write outputs: {err}", file=sys.stderr)
        return EXIT_NUMERICAL

    if result.aborted:
        print(f"aborted: {result.abort_message}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(f"wrote {out_dir}/diagnostics.csv ({len(result.records)} records)", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    config = load_config(args.config)
    report = verify_scenario(config)
    for line in report.lines():
        print(line)
    if report.result.aborted:
        return EXIT_NUMERICAL
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_converge(args):
    config = load_config(args.config)
    if config.grid["kind"] != "radial" or config.initial["type"] != "exact_cigar":
        print(
            "error: converge needs a radial exact_cigar config (the exact family "
            "is the reference solution)",
            file=sys.stderr,
        )
        return EXIT_USAGE
    n = int(config.grid["n"])
    s_max = float(config.grid["s_max"])
    levels = [max(17, (n - 1) // 2 + 1), n, 2 * (n - 1) + 1]
    errors = []
    print(f"refinement study on [0, {s_max}] to t={config.t_end} (safety {config.safety}):")
    for nn in levels:
        err, _ = manufactured_solution_error(nn, s_max, config.safety, config.t_end,
                                             frame=config.frame)
        errors.append(err)
        print(f"  n={nn:5d}  h={s_max/(nn-1):.5f}  max|u~ - exact| = {err:.6e}")
    orders = [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]
    for (na, nb), order in zip(zip(levels, levels[1:]), orders):
        print(f"  observed order ({na} -> {nb}): {order:.3f}")
    slope = float(np.polyfit(np.log([s_max / (nn - 1) for nn in levels]), np.log(errors), 1)[0])
    print(f"  least-squares order: {slope:.3f}")
    return EXIT_OK


def cmd_oracle(args):
    """Closed-form identity suite for the cigar family."""
    r = np.logspace(-3, 3, 1000)
    s = cigar.arc_length(r)
    checks = []

    dev = np.max(np.abs(cigar.cigar_potential(r) + np.log(cigar.cigar_density(r))))
    checks.append(("log w0 + f0 = 0", dev, 1e-12))

    rel = np.max(
        np.abs(cigar.cigar_potential(r) - cigar.cigar_potential_arclength(s))
        / np.abs(cigar.cigar_potential(r))
    )
    checks.append(("f0 = 2 log cosh s (relative)", rel, 1e-12))

    rel = np.max(
        np.abs(cigar.cigar_scalar_curvature(r) - cigar.cigar_curvature_arclength(s))
        / cigar.cigar_scalar_curvature(r)
    )
    checks.append(("R_c = 4 cosh^-2 s (relative)", rel, 1e-12))

    rel = np.max(np.abs(cigar.radius_of(s) - r) / r)
    checks.append(("radius_of(arc_length(r)) = r (relative)", rel, 1e-12))

    rng = np.random.default_rng(7)
    worst = 0.0
    for t in (0.1, 0.5, 1.0):
        a = rng.uniform(-3.0, 3.0, 100)
        b = rng.uniform(-3.0, 3.0, 100)
        xa, xb = cigar.soliton_pullback(a, b, t)
        lhs = np.exp(4.0 * t) * cigar.soliton_density(xa, xb, t)
        rhs = cigar.cigar_density(np.hypot(a, b))
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / rhs)))
    checks.append(("pullback staticity (relative)", worst, 1e-12))

    ok = True
    for name, dev, tol in checks:
        passed = dev <= tol
        ok = ok and passed
        print(f"  [{'ok' if passed else 'FAIL'}] {name}: {dev:.3e} (tol {tol:.0e})")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_report(args):
    run_dir = Path(args.run_dir)
    csv_path = run_dir / "diagnostics.csv"
    summary_path = run_dir / "summary.json"
    if not csv_path.exists():
        print(f"error: {csv_path} not found", file=sys.stderr)
        return EXIT_USAGE
    records = read_diagnostics(csv_path)
    summary = {}
    if summary_path.exists():
        with open(summary_path) as fh:
            summary = json.load(fh)

    print(f"run: {summary.get('name', run_dir.name)}")
    print(f"  records: {len(records)}, t in [{records[0].t:g}, {records[-1].t:g}]")
    if summary.get("aborted"):
        print(f"  ABORTED: {summary.get('abort_message')}")
    dist = summary.get("dist_trace") or []
    dist = [(t, d) for t, d in dist if d is not None]
    if dist:
        print(f"  profile distance to cigar: {dist[0][1]:.6e} at t={dist[0][0]:g} "
              f"-> {dist[-1][1]:.6e} at t={dist[-1][0]:g}")
    kah = [(t, v) for t, v in (summary.get("kahler_trace") or []) if v is not None]
    if kah:
        print(f"  Kahler reconstruction residual at t={kah[-1][0]:g}: {kah[-1][1]:.6e}")
    drift = max(rec.w_drift for rec in records)
    print(f"  max w drift: {drift:.6e}")
    print(f"  width bound: {records[0].width_bound:.6f} -> {records[-1].width_bound:.6f}")
    print(f"  sup h: {records[0].sup_h:.6e} -> {records[-1].sup_h:.6e}")
    print(f"  sup |R|: {max(max(abs(r.sup_R), abs(r.inf_R)) for r in records):.6f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cigarflow",
        description="2-D Ricci flow in conformal gauge: runs, invariant checks, "
                    "refinement studies, and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a scenario, emit diagnostics CSV and snapshots")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--quiet", action="store_true", help="suppress progress on stderr")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the invariant suite; nonzero exit on violation")
    p.add_argument("config")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="grid/step refinement study against the exact family")
    p.add_argument("config")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("oracle", help="closed-form cigar identity suite")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
