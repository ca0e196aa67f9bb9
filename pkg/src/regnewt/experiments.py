"""Experiment harness behind the command line: runs, rate fits, CSV and SVG output."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import ExperimentConfig, parse_config
from .core import Vector
from .exceptions import ConfigurationError, InsufficientDataError
from .problems import NoiseSpec, construct_source, make_noisy, rescale_problem
from .solver import (IterationRecord, RunStatus, SolverConfig, run_discrepancy,
                     run_noise_free, with_stability)

__all__ = [
    "Setup",
    "CellResult",
    "RateFit",
    "prepare",
    "run_cell",
    "run_cells",
    "fit_rate",
    "write_iterations_csv",
    "write_summary_csv",
    "read_csv",
    "validate_discrepancy_csv",
    "write_rate_csv",
    "render_rate_svg",
    "fmt",
]

ITERATION_COLUMNS = ("delta", "seed", "k", "alpha_k", "residual_norm", "error_norm",
                     "stability_ratio")
SUMMARY_COLUMNS = ("delta", "seed", "noise_level", "tau", "status", "k_delta",
                   "final_residual", "final_error", "scale")


def fmt(value) -> str:
    """17 significant digits, which round-trips every double; ``None`` -> ``""``."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class Setup:
    """Problem (possibly rescaled), start point and exact data of an experiment."""

    problem: object
    scale: float
    x0: Vector
    y: Vector
    omega_norm: Optional[float]


def prepare(config: ExperimentConfig) -> Setup:
    problem = config.problem
    if problem is None or config.schedule is None:
        raise ConfigurationError("runs need a problem and a schedule")
    if problem.x_true is None:
        raise ConfigurationError("runs need an exact solution")
    scale = 1.0
    if config.rescale:
        problem, scale = rescale_problem(problem, config.family,
                                         float(config.schedule.alpha(0)), [problem.x_true])
    if config.source is None:
        x0, omega_norm = problem.x_true, None
    else:
        built = construct_source(problem, config.source)
        x0, omega_norm = built.x0, built.omega_norm
    return Setup(problem, scale, x0, problem.exact_data(), omega_norm)


@dataclass(frozen=True)
class CellResult:
    delta: float
    seed: int
    noise_level: float
    tau: float
    status: RunStatus
    k_delta: Optional[int]
    records: Tuple[IterationRecord, ...]
    scale: float
    message: str = ""

    @property
    def final_record(self) -> IterationRecord:
        return self.records[-1]


def run_cell(config: ExperimentConfig, delta: float, seed: int,
             setup: Optional[Setup] = None) -> CellResult:
    """One noisy run, plus the exact-data companion when stability is requested."""
    setup = prepare(config) if setup is None else setup
    noise = delta * setup.scale
    ydelta = make_noisy(setup.y, NoiseSpec(noise, seed))
    solver_cfg = SolverConfig(config.tau, noise, config.kmax)
    result = run_discrepancy(setup.problem, config.family, config.schedule, solver_cfg,
                             setup.x0, ydelta, keep_iterates=config.stability)
    if config.stability and noise > 0:
        clean = run_noise_free(setup.problem, config.family, config.schedule,
                               len(result.records) - 1, setup.x0, setup.y)
        result = with_stability(result, clean, noise)
    return CellResult(delta, seed, noise, config.tau, result.status, result.k_delta,
                      result.records, setup.scale, result.message)


def _worker(args):
    raw, delta, seed = args
    config = parse_config(raw)
    return run_cell(config, delta, seed)


def run_cells(config: ExperimentConfig, workers: int = 1) -> Dict[Tuple[float, int], CellResult]:
    """All ``(delta, seed)`` cells, keyed by cell; order of execution is irrelevant."""
    cells = [(d, s) for d in config.delta_list for s in config.seeds]
    if workers <= 1:
        setup = prepare(config)
        return {(d, s): run_cell(config, d, s, setup) for d, s in cells}
    raw = dict(config.raw)
    raw["seeds"] = list(config.seeds)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = pool.map(_worker, [(raw, d, s) for d, s in cells])
        return {(r.delta, r.seed): r for r in results}


def _ordered(cells: Dict[Tuple[float, int], CellResult]) -> List[CellResult]:
    return [cells[key] for key in sorted(cells, key=lambda k: (-k[0], k[1]))]


def write_iterations_csv(path: str, cells: Dict[Tuple[float, int], CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ITERATION_COLUMNS)
        for cell in _ordered(cells):
            for rec in cell.records:
                writer.writerow([fmt(cell.delta), cell.seed, rec.k, fmt(rec.alpha_k),
                                 fmt(rec.residual_norm), fmt(rec.error_norm),
                                 fmt(rec.stability_ratio)])


def write_summary_csv(path: str, cells: Dict[Tuple[float, int], CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for cell in _ordered(cells):
            last = cell.final_record
            writer.writerow([fmt(cell.delta), cell.seed, fmt(cell.noise_level),
                             fmt(cell.tau), cell.status.value, fmt(cell.k_delta),
                             fmt(last.residual_norm), fmt(last.error_norm),
                             fmt(cell.scale)])


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _opt(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def validate_discrepancy_csv(directory: str) -> List[str]:
    """Re-check the stopping rule from ``summary.csv`` and ``iterations.csv`` alone.

    For every stopped cell: ``residual(k_delta) <= tau * noise_level`` and
    ``residual(j) > tau * noise_level`` for all ``j < k_delta``, and
    ``k_delta`` is the last recorded index. Returns the list of violations.
    """
    summary = read_csv(os.path.join(directory, "summary.csv"))
    rows = read_csv(os.path.join(directory, "iterations.csv"))
    by_cell: Dict[Tuple[str, str], List[Tuple[int, float]]] = {}
    for row in rows:
        by_cell.setdefault((row["delta"], row["seed"]), []).append(
            (int(row["k"]), float(row["residual_norm"])))
    problems = []
    for row in summary:
        if row["status"] != RunStatus.StoppedByDiscrepancy.value:
            continue
        key = (row["delta"], row["seed"])
        level = float(row["tau"]) * float(row["noise_level"])
        k_delta = int(row["k_delta"])
        recs = sorted(by_cell.get(key, []))
        if not recs or recs[-1][0] != k_delta or [k for k, _ in recs] != list(range(k_delta + 1)):
            problems.append(f"cell delta={key[0]} seed={key[1]}: records do not end at k_delta")
            continue
        if not recs[-1][1] <= level:
            problems.append(f"cell delta={key[0]} seed={key[1]}: residual at k_delta "
                            f"{recs[-1][1]:.6g} exceeds {level:.6g}")
        for k, res in recs[:-1]:
            if not res > level:
                problems.append(f"cell delta={key[0]} seed={key[1]}: residual at k={k} "
                                f"{res:.6g} already below {level:.6g}")
                break
    return problems


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of the log error against the log noise level.

    For logarithmic sources the abscissa is ``(1 + |ln(delta/||omega||)|)^-mu``
    instead of ``delta`` and the reference exponent is 1.
    """

    kind: str
    nu_or_mu: float
    theoretical_exponent: float
    fitted_slope: float
    intercept: float
    per_delta: Tuple[Tuple[float, float, int, int, float], ...]  # delta, median, kmin, kmax, abscissa


def fit_rate(config: ExperimentConfig, cells: Dict[Tuple[float, int], CellResult],
             omega_norm: Optional[float]) -> RateFit:
    if config.source is None:
        raise ConfigurationError("a rate study needs a source")
    if len(config.delta_list) < 4:
        raise InsufficientDataError("a rate fit needs at least four noise levels")
    kind, expo = config.source.kind, config.source.exponent
    per = []
    for d in config.delta_list:
        group = [cells[(d, s)] for s in config.seeds]
        errs = [c.final_record.error_norm for c in group]
        ks = [c.k_delta for c in group]
        if kind == "holder":
            absc = d
        else:
            absc = (1.0 + abs(math.log(d / omega_norm))) ** (-expo)
        per.append((d, float(np.median(errs)), min(ks), max(ks), absc))
    xs = np.log([p[4] for p in per])
    ys = np.log([p[1] for p in per])
    slope, intercept = np.polyfit(xs, ys, 1)
    theory = 2 * expo / (1 + 2 * expo) if kind == "holder" else 1.0
    return RateFit(kind, expo, theory, float(slope), float(intercept), tuple(per))


def write_rate_csv(directory: str, fit: RateFit) -> None:
    with open(os.path.join(directory, "rate.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "median_error", "k_delta_min", "k_delta_max", "abscissa"])
        for d, med, kmin, kmax, absc in fit.per_delta:
            writer.writerow([fmt(d), fmt(med), kmin, kmax, fmt(absc)])
    with open(os.path.join(directory, "fit.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "nu_or_mu", "theoretical_exponent", "fitted_slope",
                         "intercept"])
        writer.writerow([fit.kind, fmt(fit.nu_or_mu), fmt(fit.theoretical_exponent),
                         fmt(fit.fitted_slope), fmt(fit.intercept)])


def _decades(lo: float, hi: float) -> List[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def render_rate_svg(fit: RateFit, width: int = 560, height: int = 420) -> str:
    """Log-log plot: data points, fitted line, reference slope through the data centre."""
    xs = np.log10([p[4] for p in fit.per_delta])
    ys = np.log10([p[1] for p in fit.per_delta])
    xlo, xhi = math.floor(xs.min()), math.ceil(xs.max())
    if xhi == xlo:
        xhi = xlo + 1
    ylo, yhi = math.floor(ys.min()), math.ceil(ys.max())
    if yhi == ylo:
        yhi = ylo + 1
    left, right, top, bottom = 70, 20, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return top + (yhi - y) / (yhi - ylo) * ph

    # slopes are defined in natural logs, identical in base 10
    b10 = fit.intercept / math.log(10)
    xc, yc = float(xs.mean()), float(ys.mean())
    fitted = [(x, fit.fitted_slope * x + b10) for x in (xs.min(), xs.max())]
    reference = [(x, yc + fit.theoretical_exponent * (x - xc)) for x in (xs.min(), xs.max())]
    xlabel = "delta" if fit.kind == "holder" else "(1+|ln(delta/|omega|)|)^-mu"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in _decades(xlo, xhi):
        x = px(d)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" font-size="11" '
                   f'text-anchor="middle">1e{d}</text>')
    for d in _decades(ylo, yhi):
        y = py(d)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" '
                   'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">1e{d}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2:.2f})">median error</text>')
    for pts, colour, dash in ((fitted, "#1f77b4", ""), (reference, "#d62728", ' stroke-dasharray="6 4"')):
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.5"{dash}/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" fill="black"/>')
    lx, ly = left + 12, top + 16
    out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="#1f77b4" '
               'stroke-width="1.5"/>')
    out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="11">fitted slope '
               f'{fit.fitted_slope:.4f}</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 18}" x2="{lx + 24}" y2="{ly + 18}" '
               'stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>')
    out.append(f'<text x="{lx + 30}" y="{ly + 22}" font-size="11">reference slope '
               f'{fit.theoretical_exponent:.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
