"""Outer Newton-type iteration, regularization schedules and stopping.

One step linearizes ``F`` at the current iterate and applies a spectral
filter to the linearized problem, anchored at the initial guess ``x0``::

    x_{k+1} = x0 + g_{alpha_k}(A_k* A_k) A_k* (y_delta - F(x_k) + A_k (x_k - x0))

with ``A_k = F'(x_k)``. Iteration stops at the first ``k`` whose residual
``||F(x_k) - y_delta||`` is at most ``tau * delta``. The residual is
measured before each step, so ``k_delta = 0`` is possible.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .core import LinearOperator, Vector
from .exceptions import ConfigurationError, ScheduleCompatibilityError
from .filters import (Exponential, FilterFamily, IteratedTikhonov, Landweber, Lardy,
                      _check_scaling, apply_filter, default_lambda_grid)

__all__ = [
    "AlphaSchedule",
    "Geometric",
    "ArithReciprocalInt",
    "ArithReciprocalReal",
    "schedule_alpha",
    "validate_schedule",
    "c5_bound",
    "SolverConfig",
    "IterationRecord",
    "RunStatus",
    "RunResult",
    "newton_step",
    "run_discrepancy",
    "run_noise_free",
    "with_stability",
]

log = logging.getLogger(__name__)


class AlphaSchedule:
    """Nonincreasing regularization parameters ``alpha_k``."""

    bounded_increments = False

    def alpha(self, k: int) -> float:
        raise NotImplementedError

    @property
    def ratio_bound(self) -> float:
        """Upper bound ``r`` on ``alpha_k / alpha_{k+1}``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(AlphaSchedule):
    """``alpha_k = alpha0 / rho**k``."""

    alpha0: float = 1.0
    rho: float = 2.0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ConfigurationError(f"alpha0 must be positive, got {self.alpha0}")
        if not self.rho > 1:
            raise ConfigurationError(f"rho must exceed 1, got {self.rho}")

    def alpha(self, k):
        return self.alpha0 / self.rho ** k

    @property
    def ratio_bound(self):
        return float(self.rho)


@dataclass(frozen=True)
class ArithReciprocalInt(AlphaSchedule):
    """``alpha_k = 1/(n0 + q k)`` with integer ``n0 >= 1``, ``q >= 0``.

    ``q = 0`` gives a constant sequence; it does not tend to zero and is
    meant for checks only.
    """

    n0: int = 1
    q: int = 1
    bounded_increments = True

    def __post_init__(self):
        if int(self.n0) != self.n0 or self.n0 < 1:
            raise ConfigurationError(f"n0 must be a positive integer, got {self.n0}")
        if int(self.q) != self.q or self.q < 0:
            raise ConfigurationError(f"q must be a nonnegative integer, got {self.q}")

    def alpha(self, k):
        return 1.0 / (self.n0 + self.q * k)

    @property
    def ratio_bound(self):
        return (self.n0 + self.q) / self.n0

    @property
    def increment(self) -> float:
        return float(self.q)


@dataclass(frozen=True)
class ArithReciprocalReal(AlphaSchedule):
    """``alpha_k = 1/(t0 + theta0 k)`` with ``t0 > 0``, ``theta0 >= 0``."""

    t0: float = 1.0
    theta0: float = 1.0
    bounded_increments = True

    def __post_init__(self):
        if not self.t0 > 0:
            raise ConfigurationError(f"t0 must be positive, got {self.t0}")
        if not self.theta0 >= 0:
            raise ConfigurationError(f"theta0 must be nonnegative, got {self.theta0}")

    def alpha(self, k):
        return 1.0 / (self.t0 + self.theta0 * k)

    @property
    def ratio_bound(self):
        return (self.t0 + self.theta0) / self.t0

    @property
    def increment(self) -> float:
        return float(self.theta0)


def schedule_alpha(schedule: AlphaSchedule, k: int) -> float:
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    return float(schedule.alpha(k))


def _check_pairing(schedule: AlphaSchedule, family: FilterFamily) -> None:
    if family.bounded_increments and not schedule.bounded_increments:
        raise ScheduleCompatibilityError(
            f"{family.name} needs a schedule with bounded increments of 1/alpha_k, "
            f"got {type(schedule).__name__}")


def c5_bound(family: FilterFamily, schedule: AlphaSchedule) -> float:
    """Analytic bound on ``sup r_{alpha_k} / r_{alpha_{k+1}}`` for a pairing."""
    _check_pairing(schedule, family)
    if isinstance(family, IteratedTikhonov):
        return schedule.ratio_bound ** family.m
    if isinstance(family, (Landweber, Lardy)):
        # integer step counts floor(1/alpha_k) grow by at most ceil(increment)
        steps = math.ceil(schedule.increment - 1e-12)
        if isinstance(family, Landweber):
            return 2.0 ** steps
        if family.literal:
            return math.inf
        return 1.5 ** steps
    if isinstance(family, Exponential):
        return math.exp(schedule.increment)
    raise ConfigurationError(f"no ratio bound known for {family.name}")


def validate_schedule(schedule: AlphaSchedule, family: FilterFamily, kmax: int,
                      lambda_grid: Optional[np.ndarray] = None) -> float:
    """Grid supremum of ``r_{alpha_k}(lam) / r_{alpha_{k+1}}(lam)`` over ``k < kmax``.

    The value is a lower bound of the true supremum. A warning is logged
    when it exceeds :func:`c5_bound`.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    _check_pairing(schedule, family)
    lam = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, float)
    worst = 1.0
    prev = family.r(schedule.alpha(0), lam)
    for k in range(kmax):
        nxt = family.r(schedule.alpha(k + 1), lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(nxt > 0, prev / nxt, np.inf)
        worst = max(worst, float(np.max(ratio)))
        prev = nxt
    bound = c5_bound(family, schedule)
    if worst > bound * (1 + 1e-9):
        log.warning("measured ratio %.6g exceeds the analytic bound %.6g for %s",
                    worst, bound, family.name)
    return worst


@dataclass(frozen=True)
class SolverConfig:
    """Stopping parameters: ``tau > 1``, noise level ``delta >= 0``, ``kmax >= 1``."""

    tau: float = 1.5
    delta: float = 0.0
    kmax: int = 10_000
    record_errors: bool = True

    def __post_init__(self):
        if not self.tau > 1:
            raise ConfigurationError(f"tau must exceed 1, got {self.tau}")
        if not self.delta >= 0:
            raise ConfigurationError(f"delta must be nonnegative, got {self.delta}")
        if int(self.kmax) != self.kmax or self.kmax < 1:
            raise ConfigurationError(f"kmax must be a positive integer, got {self.kmax}")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    alpha_k: float
    residual_norm: float
    error_norm: Optional[float] = None
    stability_ratio: Optional[float] = None


class RunStatus(enum.Enum):
    StoppedByDiscrepancy = "StoppedByDiscrepancy"
    ReachedKmax = "ReachedKmax"
    LeftDomainBall = "LeftDomainBall"
    NumericalFailure = "NumericalFailure"


@dataclass(frozen=True)
class RunResult:
    """Outcome of one run; ``iterates`` is filled only on request."""

    status: RunStatus
    k_delta: Optional[int]
    final_iterate: Vector
    records: tuple
    iterates: Optional[tuple] = None
    message: str = ""

    @property
    def stopped(self) -> bool:
        return self.status is RunStatus.StoppedByDiscrepancy


def newton_step(problem, family: FilterFamily, alpha_k: float, x0: Vector, x_k: Vector,
                ydelta: Vector, check_scaling: bool = True) -> Vector:
    """One step of the iteration from ``x_k`` with parameter ``alpha_k``."""
    a = problem.derivative(x_k)
    b = ydelta - problem.forward(x_k) + a.apply(x_k - x0)
    return x0 + apply_filter(family, alpha_k, a, b, check_scaling=check_scaling)


class _ScalingCache:
    """Checks the norm bound once per distinct derivative object."""

    def __init__(self):
        self._last: Optional[LinearOperator] = None

    def __call__(self, problem, x: Vector) -> None:
        op = problem.derivative(x)
        if op is not self._last:
            _check_scaling(op)
            self._last = op


def _iterate(problem, family, schedule, x0, data, tau_delta, kmax, record_errors,
             keep_iterates, stop_on_discrepancy):
    x_true = getattr(problem, "x_true", None)
    rho = getattr(problem, "rho", math.inf)
    check = _ScalingCache()
    records: List[IterationRecord] = []
    iterates: List[Vector] = []
    x = x0

    def finish(status, k_delta=None, message=""):
        return RunResult(status, k_delta, x, tuple(records),
                         tuple(iterates) if keep_iterates else None, message)

    for k in range(kmax + 1):
        alpha_k = float(schedule.alpha(k))
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                res = (problem.forward(x) - data).norm()
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            return finish(RunStatus.NumericalFailure, message=f"k={k}: {exc}")
        dist = None if x_true is None else (x - x_true).norm()
        if not (math.isfinite(res) and x.is_finite()):
            return finish(RunStatus.NumericalFailure, message=f"k={k}: non-finite iterate")
        records.append(IterationRecord(k, alpha_k, res,
                                       dist if record_errors else None))
        if keep_iterates:
            iterates.append(x)
        if dist is not None and dist > rho:
            return finish(RunStatus.LeftDomainBall,
                          message=f"k={k}: distance {dist:.6g} exceeds rho={rho:.6g}")
        if stop_on_discrepancy and res <= tau_delta:
            return finish(RunStatus.StoppedByDiscrepancy, k_delta=k)
        if k == kmax:
            break
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                check(problem, x)
                x = newton_step(problem, family, alpha_k, x0, x, data, check_scaling=False)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            return finish(RunStatus.NumericalFailure, message=f"k={k}: {exc}")
    return finish(RunStatus.ReachedKmax)


def run_discrepancy(problem, family: FilterFamily, schedule: AlphaSchedule,
                    config: SolverConfig, x0: Vector, ydelta: Vector,
                    keep_iterates: bool = False) -> RunResult:
    """Iterate until ``||F(x_k) - y_delta|| <= tau delta`` or ``kmax`` steps.

    With ``delta = 0`` the rule fires only on an exact fit, so runs on
    exact data normally end with status ``ReachedKmax``. When the problem
    knows ``x_true``, leaving the ball of radius ``problem.rho`` around it
    ends the run with status ``LeftDomainBall``.
    """
    _check_pairing(schedule, family)
    return _iterate(problem, family, schedule, x0, ydelta, config.tau * config.delta,
                    config.kmax, config.record_errors, keep_iterates, True)


def run_noise_free(problem, family: FilterFamily, schedule: AlphaSchedule, kmax: int,
                   x0: Vector, y: Vector, keep_iterates: bool = True) -> RunResult:
    """Exactly ``kmax`` steps on exact data ``y`` (``kmax = 0`` returns ``x0``)."""
    if int(kmax) != kmax or kmax < 0:
        raise ConfigurationError(f"kmax must be a nonnegative integer, got {kmax}")
    _check_pairing(schedule, family)
    return _iterate(problem, family, schedule, x0, y, -1.0, int(kmax), True,
                    keep_iterates, False)


def with_stability(noisy: RunResult, clean: RunResult, delta: float) -> RunResult:
    """Fill ``stability_ratio = ||x_k^delta - x_k|| sqrt(alpha_k) / delta``.

    Both runs must carry iterates; records past the end of ``clean`` keep
    ``None``.
    """
    if noisy.iterates is None or clean.iterates is None:
        raise ConfigurationError("both runs need iterates (keep_iterates=True)")
    if not delta > 0:
        raise ConfigurationError("stability ratios need delta > 0")
    out = []
    for rec, xd in zip(noisy.records, noisy.iterates):
        ratio = None
        if rec.k < len(clean.iterates):
            ratio = (xd - clean.iterates[rec.k]).norm() * math.sqrt(rec.alpha_k) / delta
        out.append(replace(rec, stability_ratio=ratio))
    return replace(noisy, records=tuple(out))
