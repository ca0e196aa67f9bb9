"""Command line: ``regnewt run | rate-study | verify <config>``.

Exit codes: 0 on success, 1 when a run or check fails, 2 when the
configuration is invalid (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from typing import List, Optional, Sequence

from .config import ExperimentConfig, load_config
from .exceptions import ConfigurationError, RegNewtError
from .experiments import (fit_rate, fmt, prepare, render_rate_svg, run_cells,
                          validate_discrepancy_csv, write_iterations_csv, write_rate_csv,
                          write_summary_csv)
from .solver import RunStatus
from . import verify as checks

__all__ = ["main", "build_parser", "run_checks"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_OUT = "regnewt_out"

log = logging.getLogger("regnewt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regnewt",
        description="Newton-type iterative regularization with discrepancy stopping.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "one run per (delta, seed) cell"),
                           ("rate-study", "fit convergence rates over the noise levels"),
                           ("verify", "check the structural inequalities")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="YAML configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes for independent cells")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the seed list by this single seed")
    return parser


def _out_dir(args, config: ExperimentConfig) -> str:
    return args.out or config.output_dir or DEFAULT_OUT


def _execute(config: ExperimentConfig, out: str, workers: int):
    cells = run_cells(config, workers)
    os.makedirs(out, exist_ok=True)
    write_iterations_csv(os.path.join(out, "iterations.csv"), cells)
    write_summary_csv(os.path.join(out, "summary.csv"), cells)
    return cells


def cmd_run(args) -> int:
    config = load_config(args.config, args.seed_override)
    prepare(config)
    out = _out_dir(args, config)
    cells = _execute(config, out, args.workers)
    failed = 0
    for key in sorted(cells, key=lambda k: (-k[0], k[1])):
        cell = cells[key]
        last = cell.final_record
        print(f"delta={fmt(cell.delta)} seed={cell.seed} status={cell.status.value} "
              f"k_delta={cell.k_delta} final_error={fmt(last.error_norm)}")
        if cell.status is not RunStatus.StoppedByDiscrepancy:
            failed += 1
            print(f"  diagnostic: {cell.message or cell.status.value}", file=sys.stderr)
    violations = validate_discrepancy_csv(out)
    for v in violations:
        print(f"validator: {v}", file=sys.stderr)
    return EXIT_OK if failed == 0 and not violations else EXIT_FAIL


def cmd_rate_study(args) -> int:
    config = load_config(args.config, args.seed_override)
    if config.source is None:
        raise ConfigurationError("rate-study needs a source section")
    if len(config.delta_list) < 4:
        raise ConfigurationError("rate-study needs at least four noise levels")
    setup = prepare(config)
    out = _out_dir(args, config)
    cells = _execute(config, out, args.workers)
    for key in sorted(cells, key=lambda k: (-k[0], k[1])):
        cell = cells[key]
        if cell.status is not RunStatus.StoppedByDiscrepancy:
            print(f"rate study aborted: cell delta={fmt(cell.delta)} seed={cell.seed} "
                  f"ended with {cell.status.value} {cell.message}".rstrip(), file=sys.stderr)
            return EXIT_FAIL
    violations = validate_discrepancy_csv(out)
    if violations:
        for v in violations:
            print(f"validator: {v}", file=sys.stderr)
        return EXIT_FAIL
    fit = fit_rate(config, cells, setup.omega_norm)
    write_rate_csv(out, fit)
    with open(os.path.join(out, "rate.svg"), "w", encoding="utf-8") as fh:
        fh.write(render_rate_svg(fit))
    print(f"{'delta':>12s} {'median error':>14s} {'k_delta':>12s}")
    for d, med, kmin, kmax, _ in fit.per_delta:
        print(f"{d:12.3g} {med:14.6g} {kmin:>5d}-{kmax:<6d}")
    print(f"fitted slope {fit.fitted_slope:.4f}, reference exponent "
          f"{fit.theoretical_exponent:.4f}")
    return EXIT_OK


def run_checks(config: ExperimentConfig) -> List[checks.CheckReport]:
    """Run the configured (or all applicable) checks."""
    fam, opts = config.family, config.check_options
    seed = int(opts.get("seed", 0))
    const = fam.constants()
    names = config.checks
    if names is None:
        names = ["filter_bounds", "derived_bounds", "qualification", "interpolation",
                 "commutators"]
        if config.schedule is not None:
            names.append("ratio_bound")
        if config.problem is not None and config.problem.x_true is not None:
            names += ["nonlinearity", "strengthened_commutators"]
    reports: List[checks.CheckReport] = []
    for name in names:
        if name == "filter_bounds":
            reports += checks.check_filter_bounds(fam)
        elif name == "derived_bounds":
            reports += checks.check_derived_bounds(fam)
        elif name == "qualification":
            nus = [nu for nu in opts.get("nus", [0.5, 1.0, 2.0]) if nu <= const.qualification]
            reports += checks.check_qualification(fam, nus)
        elif name == "ratio_bound":
            if config.schedule is None:
                raise ConfigurationError("ratio_bound needs a schedule")
            reports.append(checks.check_ratio_bound(fam, config.schedule,
                                                    int(opts.get("kmax", 50))))
        elif name == "log_qualification":
            alpha0 = 1.0 if config.schedule is None else float(config.schedule.alpha(0))
            reports += checks.check_log_qualification(fam, opts.get("mus", [1.0]),
                                                      alpha0=alpha0)
        elif name == "interpolation":
            reports.append(checks.check_interpolation_lemma(
                fam, int(opts.get("interpolation_trials", 1000)), seed))
        elif name == "commutators":
            reports += checks.check_commutators(fam, int(opts.get("commutator_trials", 200)),
                                                seed=seed)
        elif name in ("nonlinearity", "strengthened_commutators"):
            prob = config.problem
            if prob is None or prob.x_true is None:
                raise ConfigurationError(f"{name} needs a problem with an exact solution")
            pts = checks.sample_ball(prob, int(opts.get("samples", 20)),
                                     float(opts.get("radius", 0.1)), seed)
            if name == "nonlinearity":
                reports += checks.estimate_nonlinearity(prob, pts, seed)
            else:
                pairs = list(zip(pts[::2], pts[1::2]))
                reports += checks.check_strengthened_commutators(prob, fam, pairs, seed=seed)
        else:  # pragma: no cover - names are validated when parsing
            raise ConfigurationError(f"unknown check {name!r}")
    return reports


def cmd_verify(args) -> int:
    config = load_config(args.config, args.seed_override, require_run=False)
    reports = run_checks(config)
    print(f"{len(reports)} checks for {config.family.name}")
    for rep in reports:
        print(rep.row())
    if args.out or config.output_dir:
        out = _out_dir(args, config)
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "verify.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "measured", "bound", "passed", "worst_case", "note"])
            for rep in reports:
                writer.writerow([rep.name, fmt(rep.measured), fmt(rep.bound), rep.passed,
                                 rep.worst_case, rep.note])
    failed = [r for r in reports if not r.passed]
    for rep in failed:
        print(f"failed: {rep.name}: measured {rep.measured:.6g} at {rep.worst_case}",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


_COMMANDS = {"run": cmd_run, "rate-study": cmd_rate_study, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegNewtError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
