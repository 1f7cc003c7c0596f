"""Command-line front end: run a scenario, run a temporal-rate study, verify.

``run`` executes a configured scenario and leaves a run directory with
the effective configuration, the CSV ledger, a final snapshot (plus
periodic ones if requested) and report figures.  The exit code is zero
only when no invariant violations were flagged along the way.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from .config import parse_config, render_config
from .diagnostics import temporal_convergence_study
from .errors import MaxPrincipleViolation, NonConvergence, ParseError, ValidationError
from .figures import render_convergence_figure, render_run_figures
from .integrator import initialize, run
from .io_out import write_snapshot, write_timeseries
from .scenarios import build_scenario
from .verify import run_verification

SIGMA_BOUND_TOL = 1e-12


def _cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except (OSError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    outdir = args.output_dir or cfg.output.directory
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config_effective.ini"), "w") as fh:
        fh.write(render_config(cfg))

    scenario = build_scenario(cfg.scenario, cfg.grid, cfg.fluid, cfg.scenario_options)
    params = cfg.run_params()
    state = initialize(scenario.rho0, scenario.u0, params)

    violations: List[str] = []
    snap_every = cfg.output.snapshot_every

    def observer(s, report):
        if report is None:
            return
        if report.sigma_max > 1.0 + SIGMA_BOUND_TOL:
            violations.append(f"step {report.n}: |sigma| = {report.sigma_max!r} > 1")
        if snap_every > 0 and report.n % snap_every == 0:
            write_snapshot(s, os.path.join(outdir, f"snapshot_{report.n:06d}.vtk"))
        if not args.quiet and report.n % max(1, cfg.output.csv_every * 50) == 0:
            print(f"step {report.n:6d}  t={report.t:.5f}  fp={report.fixed_point.iterations:3d}"
                  f"  div={report.div_residual:.2e}  rho=[{report.rho_min:.4f},{report.rho_max:.4f}]")

    try:
        final, reports = run(state, params, cfg.t_end, observers=[observer],
                             forcing=scenario.forcing)
    except (MaxPrincipleViolation, NonConvergence) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1

    kept = [r for r in reports if cfg.output.csv_every <= 1
            or r.n % cfg.output.csv_every == 0]
    write_timeseries(kept, os.path.join(outdir, "timeseries.csv"))
    write_snapshot(final, os.path.join(outdir, "final.vtk"))
    if cfg.output.figures:
        render_run_figures(reports, final, outdir)

    stalled = sum(1 for r in reports if not r.fixed_point.converged)
    if stalled and cfg.stability_mode:
        violations.append(f"{stalled} steps hit the fixed-point iteration cap")
    for v in violations:
        print(f"invariant violation: {v}", file=sys.stderr)
    if not args.quiet:
        print(f"finished {len(reports)} steps -> {outdir}")
    return 1 if violations else 0


def _cmd_convergence(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except (OSError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    dts = [float(tok) for tok in args.dts.split(",") if tok]
    outdir = args.output_dir or cfg.output.directory
    os.makedirs(outdir, exist_ok=True)

    scenario = build_scenario(cfg.scenario, cfg.grid, cfg.fluid, cfg.scenario_options)
    params = cfg.run_params()
    state0 = initialize(scenario.rho0, scenario.u0, params)

    if args.theta_rule == "dt":
        rule = lambda dt: dt
    elif args.theta_rule.startswith("const:"):
        val = float(args.theta_rule.split(":", 1)[1])
        rule = lambda dt: val
    else:
        print(f"error: unknown theta rule {args.theta_rule!r}", file=sys.stderr)
        return 2

    study = temporal_convergence_study(
        state0, params, cfg.t_end, dts, theta_rule=rule, dt_ref=args.dt_ref,
        forcing=scenario.forcing, fp_max_iter=args.fp_max_iter)

    rows = ["dt,error_u,error_rho"]
    for dt, eu, er in zip(study.dts, study.errors_u, study.errors_rho):
        rows.append(f"{dt!r},{eu!r},{er!r}")
    rows.append("")
    with open(os.path.join(outdir, "convergence.csv"), "w") as fh:
        fh.write("\n".join(rows))
    render_convergence_figure(study.dts, study.errors_u, study.errors_rho,
                              os.path.join(outdir, "convergence.png"),
                              study.slope_u, study.slope_rho)
    print(f"velocity slope {study.slope_u:.3f}, density slope {study.slope_rho:.3f} "
          f"(reference dt = {study.dt_ref:g})")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="binghamflow",
        description="Incompressible yield-stress flow solver with variable density")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured scenario")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--quiet", action="store_true")

    p_conv = sub.add_parser("convergence", help="temporal self-convergence study")
    p_conv.add_argument("config")
    p_conv.add_argument("--dts", required=True,
                        help="comma-separated list of time steps")
    p_conv.add_argument("--dt-ref", type=float, default=None)
    p_conv.add_argument("--theta-rule", default="dt",
                        help="'dt' (theta = dt) or 'const:<value>'")
    p_conv.add_argument("--fp-max-iter", type=int, default=None)
    p_conv.add_argument("--output-dir", default=None)

    p_ver = sub.add_parser("verify", help="run the structural property checks")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "convergence":
        return _cmd_convergence(args)
    if args.command == "verify":
        return run_verification(seed=args.seed, quiet=args.quiet)
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
