"""Experiment configuration files (YAML) and their translation into objects.

Schema (all numbers decimal; keys not listed are rejected)::

    problem:
      kind: diagonal            # or: elliptic
      n: 64                     # diagonal: number of modes; elliptic: grid points
      sigma: [0.5, 0.25]        # diagonal, optional; default min(sigma_scale/i, 1/sqrt 2)
      sigma_scale: 0.7          # diagonal, optional
      x_true: [0, 0]            # diagonal, optional; default zeros
      rho: .inf                 # optional domain radius around x_true
    filter:
      kind: landweber           # iterated_tikhonov | landweber | lardy | exponential
      m: 1                      # iterated_tikhonov only
      literal: false            # lardy only: index-zero summation (negative control)
    schedule:
      kind: arith_int           # geometric | arith_int | arith_real
      alpha0: 1.0               # geometric
      rho: 2.0                  # geometric
      n0: 1                     # arith_int
      q: 1                      # arith_int
      t0: 1.0                   # arith_real
      theta0: 1.0               # arith_real
    source:                     # optional; without it x0 = x_true
      kind: holder              # or: logarithmic
      exponent: 1.0
      omega: {profile: power, scale: 1.0, exponent: 0.5}
             # or {profile: log_tail, scale: 0.02}, {profile: constant, value: 0.5},
             # or an explicit list
    tau: 1.5
    delta_list: [1.0e-2, 3.0e-3, 1.0e-3, 3.0e-4, 1.0e-4, 3.0e-5, 1.0e-5]
    seeds: [0, 1, 2, 3, 4]
    kmax: 10000
    rescale: false              # scale F so that ||F'|| meets the filter's bound at alpha0
    stability: true             # also run on exact data to record stability ratios
    output_dir: out
    checks: [...]               # verify only, see ``CHECK_NAMES``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import yaml

from .core import Vector
from .exceptions import ConfigurationError, RegNewtError
from .filters import Exponential, FilterFamily, IteratedTikhonov, Landweber, Lardy
from .problems import (NonlinearProblem, SourceSpec, diagonal_problem, elliptic_benchmark,
                       log_tail_omega, power_omega, power_sigma)
from .solver import (AlphaSchedule, ArithReciprocalInt, ArithReciprocalReal, Geometric,
                     c5_bound)

__all__ = ["ExperimentConfig", "load_config", "parse_config", "DEFAULT_DELTAS",
           "CHECK_NAMES"]

DEFAULT_DELTAS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)

CHECK_NAMES = ("filter_bounds", "derived_bounds", "qualification", "ratio_bound",
               "log_qualification", "interpolation", "commutators", "nonlinearity",
               "strengthened_commutators")

_TOP_KEYS = {"problem", "filter", "schedule", "source", "tau", "delta_list", "seeds",
             "kmax", "rescale", "stability", "output_dir", "checks", "check_options"}


def _num(section: Dict, key: str, default=None, kind=float):
    if key not in section:
        if default is None:
            raise ConfigurationError(f"missing required key {key!r}")
        return default
    value = section[key]
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms without a dot (1e-3) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key!r} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigurationError(f"{key!r} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _section(raw: Dict, key: str, allowed: set, required: bool = True) -> Optional[Dict]:
    if key not in raw or raw[key] is None:
        if required:
            raise ConfigurationError(f"missing section {key!r}")
        return None
    sec = raw[key]
    if not isinstance(sec, dict):
        raise ConfigurationError(f"section {key!r} must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in {key!r}: {sorted(unknown)}")
    return sec


def build_filter(sec: Dict) -> FilterFamily:
    kind = sec.get("kind")
    if kind == "iterated_tikhonov":
        return IteratedTikhonov(_num(sec, "m", 1, int))
    if kind == "landweber":
        return Landweber()
    if kind == "lardy":
        literal = sec.get("literal", False)
        if not isinstance(literal, bool):
            raise ConfigurationError("'literal' must be true or false")
        return Lardy(literal=literal)
    if kind == "exponential":
        return Exponential()
    raise ConfigurationError(f"unknown filter kind {kind!r}")


def build_schedule(sec: Dict) -> AlphaSchedule:
    kind = sec.get("kind")
    if kind == "geometric":
        return Geometric(_num(sec, "alpha0", 1.0), _num(sec, "rho", 2.0))
    if kind == "arith_int":
        return ArithReciprocalInt(_num(sec, "n0", 1, int), _num(sec, "q", 1, int))
    if kind == "arith_real":
        return ArithReciprocalReal(_num(sec, "t0", 1.0), _num(sec, "theta0", 1.0))
    raise ConfigurationError(f"unknown schedule kind {kind!r}")


def schedule_alpha0(schedule: AlphaSchedule) -> float:
    return float(schedule.alpha(0))


def build_problem(sec: Dict) -> NonlinearProblem:
    kind = sec.get("kind")
    rho = _num(sec, "rho", math.inf)
    if kind == "diagonal":
        if "sigma" in sec:
            sigma = np.asarray(sec["sigma"], dtype=float)
        else:
            sigma = power_sigma(_num(sec, "n", 64, int), _num(sec, "sigma_scale", 0.7))
        x_true = sec.get("x_true")
        x_true = np.zeros(sigma.size) if x_true is None else np.asarray(x_true, float)
        return diagonal_problem(sigma, rho, x_true)
    if kind == "elliptic":
        return elliptic_benchmark(_num(sec, "n", 64, int), rho)
    raise ConfigurationError(f"unknown problem kind {kind!r}")


def build_omega(spec, n: int) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if not isinstance(spec, dict):
        raise ConfigurationError("omega must be a list or a profile mapping")
    profile = spec.get("profile")
    if profile == "power":
        return power_omega(n, _num(spec, "scale", 1.0), _num(spec, "exponent", 0.5))
    if profile == "log_tail":
        return log_tail_omega(n, _num(spec, "scale", 0.02), _num(spec, "sigma_scale", 0.7),
                              _num(spec, "mu", 1.0))
    if profile == "constant":
        return np.full(n, _num(spec, "value", 1.0))
    raise ConfigurationError(f"unknown omega profile {profile!r}")


def build_source(sec: Optional[Dict], problem: NonlinearProblem) -> Optional[SourceSpec]:
    if sec is None:
        return None
    kind = sec.get("kind")
    omega = build_omega(sec.get("omega", {"profile": "constant", "value": 1.0}),
                        problem.dim_x)
    if omega.size != problem.dim_x:
        raise ConfigurationError(f"omega has length {omega.size}, expected {problem.dim_x}")
    return SourceSpec(kind, _num(sec, "exponent"), Vector(omega, problem.weights_x))


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the parsed mapping for workers."""

    raw: Dict[str, Any]
    family: FilterFamily
    schedule: Optional[AlphaSchedule]
    problem: Optional[NonlinearProblem]
    source: Optional[SourceSpec]
    tau: float
    delta_list: Tuple[float, ...]
    seeds: Tuple[int, ...]
    kmax: int
    rescale: bool
    stability: bool
    output_dir: Optional[str]
    checks: Optional[Tuple[str, ...]]
    check_options: Dict[str, Any] = field(default_factory=dict)


def parse_config(raw: Any, seed_override: Optional[int] = None,
                 require_run: bool = True) -> ExperimentConfig:
    """Validate a parsed mapping; any problem raises :class:`ConfigurationError`.

    ``require_run=False`` (used by ``verify``) makes problem, schedule and
    the run parameters optional.
    """
    try:
        return _parse(raw, seed_override, require_run)
    except ConfigurationError:
        raise
    except (RegNewtError, TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None


def _parse(raw, seed_override, require_run):
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a mapping at top level")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {sorted(unknown)}")
    family = build_filter(_section(raw, "filter", {"kind", "m", "literal"}))
    sched_sec = _section(raw, "schedule", {"kind", "alpha0", "rho", "n0", "q", "t0",
                                           "theta0"}, require_run)
    schedule = None if sched_sec is None else build_schedule(sched_sec)
    if schedule is not None:
        c5_bound(family, schedule)  # rejects incompatible pairings early
    prob_sec = _section(raw, "problem", {"kind", "n", "sigma", "sigma_scale", "x_true",
                                         "rho"}, require_run)
    problem = None if prob_sec is None else build_problem(prob_sec)
    src_sec = _section(raw, "source", {"kind", "exponent", "omega"}, False)
    if src_sec is not None and problem is None:
        raise ConfigurationError("a source needs a problem")
    source = build_source(src_sec, problem) if src_sec is not None else None

    tau = _num(raw, "tau", 1.5)
    if not tau > 1:
        raise ConfigurationError(f"tau must exceed 1, got {tau}")
    deltas = raw.get("delta_list", list(DEFAULT_DELTAS))
    if not isinstance(deltas, list) or not deltas:
        raise ConfigurationError("delta_list must be a nonempty list")
    deltas = tuple(_num({"d": d}, "d") for d in deltas)
    if any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigurationError("delta_list must be positive and strictly decreasing")
    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigurationError("seeds must be a nonempty list")
    seeds = tuple(_num({"s": s}, "s", kind=int) for s in seeds)
    if seed_override is not None:
        seeds = (int(seed_override),)
    kmax = _num(raw, "kmax", 10_000, int)
    if kmax < 1:
        raise ConfigurationError("kmax must be >= 1")
    flags = {}
    for key, default in (("rescale", False), ("stability", True)):
        value = raw.get(key, default)
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key!r} must be true or false")
        flags[key] = value
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigurationError("output_dir must be a string")
    checks = raw.get("checks")
    if checks is not None:
        if not isinstance(checks, list) or any(c not in CHECK_NAMES for c in checks):
            raise ConfigurationError(f"checks must be a list drawn from {CHECK_NAMES}")
        checks = tuple(checks)
    options = raw.get("check_options") or {}
    if not isinstance(options, dict):
        raise ConfigurationError("check_options must be a mapping")
    return ExperimentConfig(raw, family, schedule, problem, source, tau, deltas, seeds,
                            kmax, flags["rescale"], flags["stability"], out, checks,
                            options)


def load_config(path: str, seed_override: Optional[int] = None,
                require_run: bool = True) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return parse_config(raw, seed_override, require_run)
