"""Concrete inverse problems, source conditions, scaling and noise.

Two instances are provided:

* :func:`diagonal_problem` -- the linear map ``x -> sigma * x``.
* :func:`elliptic_problem` -- recovery of ``c`` in ``-u'' + c u = f`` on
  ``(0, 1)`` from ``u``, discretized by centered differences with
  mesh-width weights on both spaces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .core import LinearOperator, Vector, operator_norm, svd_dense
from .exceptions import (
    ConfigurationError,
    DegenerateProblemError,
    DimensionError,
    DomainError,
    IllPosedInstanceError,
    ScalingError,
)
from .filters import NORM_BOUND, FilterFamily, beta0

__all__ = [
    "NonlinearProblem",
    "SourceSpec",
    "SourceConstruction",
    "NoiseSpec",
    "diagonal_problem",
    "elliptic_problem",
    "elliptic_benchmark",
    "construct_initial_guess",
    "construct_source",
    "rescale_problem",
    "make_noisy",
    "power_sigma",
    "power_omega",
    "log_tail_omega",
]

log = logging.getLogger(__name__)

# singular values below this fraction of the largest count as zero
SPAN_RTOL = 1e-10


@dataclass(frozen=True)
class NonlinearProblem:
    """Forward map ``F`` with derivative ``F'``, domain radius and optional truth.

    ``forward`` maps an ``X``-vector to a ``Y``-vector and ``derivative``
    returns ``F'(x)`` as a :class:`LinearOperator`.
    """

    dim_x: int
    dim_y: int
    forward: Callable[[Vector], Vector]
    derivative: Callable[[Vector], LinearOperator]
    weights_x: np.ndarray
    weights_y: np.ndarray
    rho: float = math.inf
    x_true: Optional[Vector] = None
    name: str = "problem"

    def exact_data(self) -> Vector:
        if self.x_true is None:
            raise ConfigurationError(f"{self.name} has no exact solution set")
        return self.forward(self.x_true)

    def with_truth(self, x_true) -> "NonlinearProblem":
        x = x_true if isinstance(x_true, Vector) else Vector(x_true, self.weights_x)
        if len(x) != self.dim_x:
            raise DimensionError(f"x_true has length {len(x)}, expected {self.dim_x}")
        return replace(self, x_true=Vector(x.entries, self.weights_x))

    def vector_x(self, entries) -> Vector:
        return Vector(entries, self.weights_x)

    def vector_y(self, entries) -> Vector:
        return Vector(entries, self.weights_y)


def diagonal_problem(sigma: Sequence[float], rho: float = math.inf,
                     x_true=None) -> NonlinearProblem:
    """Linear problem ``F(x) = diag(sigma) x`` with unit weights.

    Raises
    ------
    ScalingError
        If some ``sigma_i`` exceeds ``1/sqrt(2)``.
    """
    s = np.array(sigma, dtype=float).reshape(-1)
    if s.size == 0:
        raise DimensionError("sigma must be nonempty")
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ConfigurationError("sigma entries must be positive and finite")
    if np.max(s) > NORM_BOUND * (1 + 1e-12):
        raise ScalingError(f"max sigma {np.max(s):.6g} exceeds 1/sqrt(2)")
    w = np.ones(s.size)
    w.setflags(write=False)
    op = LinearOperator.diagonal(s, w)
    w = op.weights_in

    def forward(x: Vector) -> Vector:
        return Vector._wrap(s * x.entries, w)

    prob = NonlinearProblem(s.size, s.size, forward, lambda x: op, w, w, rho,
                            name="diagonal")
    return prob if x_true is None else prob.with_truth(x_true)


def power_sigma(n: int, scale: float = 0.7) -> np.ndarray:
    """``sigma_i = min(scale / i, 1/sqrt(2))`` for ``i = 1 .. n``."""
    i = np.arange(1, n + 1, dtype=float)
    return np.minimum(scale / i, NORM_BOUND)


def power_omega(n: int, scale: float = 1.0, exponent: float = 0.5) -> np.ndarray:
    """``omega_i = scale * i**(-exponent)``."""
    return scale * np.arange(1, n + 1, dtype=float) ** (-exponent)


def log_tail_omega(n: int, scale: float = 0.02, sigma_scale: float = 0.7,
                   mu: float = 1.0) -> np.ndarray:
    """Source element for a logarithmic condition on ``sigma_i = sigma_scale / i``.

    Modes ``i < n`` get ``omega_i = scale / sqrt(i (-ln lam_i))`` with
    ``lam_i = sigma_i**2``. The last mode absorbs the infinite tail: it is
    chosen so that its contribution to ``x0 - x_true`` carries the energy
    ``sum_{i >= n} scale**2 / (i (-ln lam_i)**(1 + 2 mu))``, which a
    truncated profile would otherwise lose. This keeps the error decay of
    the finite problem on the logarithmic curve down to small noise levels.
    """
    if n < 2:
        raise ConfigurationError("need at least two modes")
    i = np.arange(1, n + 1, dtype=float)
    neg_log = -np.log((sigma_scale / i) ** 2)
    if np.any(neg_log <= 0):
        raise DomainError("all sigma_i**2 must be below 1")
    omega = scale / np.sqrt(i * neg_log)
    # explicit sum to a cutoff, then the integral of the tail in L = ln(x/sigma_scale)
    cutoff = 10 ** 6
    j = np.arange(n, cutoff, dtype=float)
    terms = scale ** 2 / (j * (2.0 * np.log(j / sigma_scale)) ** (1 + 2 * mu))
    lc = math.log(cutoff / sigma_scale)
    tail = float(np.sum(terms)) + scale ** 2 * lc ** (-2 * mu) / (2 ** (1 + 2 * mu) * 2 * mu)
    omega[-1] = neg_log[-1] ** mu * math.sqrt(tail)
    return omega


def _tridiag_banded(c: np.ndarray, h: float) -> np.ndarray:
    """Upper banded storage of the symmetric finite-difference operator."""
    n = c.size
    ab = np.empty((2, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -1.0 / h ** 2
    ab[1] = (2.0 + h ** 2 * c) / h ** 2
    return ab


def elliptic_problem(n: int, f, g0: float, g1: float, c_true=None,
                     rho: float = math.inf) -> NonlinearProblem:
    """Parameter-to-solution map ``c -> u`` of ``-u'' + c u = f``, ``u(0)=g0, u(1)=g1``.

    Parameters
    ----------
    n : int
        Number of interior grid points, ``h = 1/(n+1)``; ``n >= 8``.
    f : array_like or Vector
        Source values at the interior points.
    g0, g1 : float
        Boundary values, folded into the right-hand side.
    c_true : array_like or Vector, optional
        Exact coefficient; must be nonnegative.
    rho : float
        Radius of the admissible ball around ``c_true``.

    Both spaces carry the weights ``h``. ``F'(c) v = -T(c)^{-1}(v u(c))`` and
    ``F'(c)* w = -u(c) T(c)^{-1} w`` where ``T(c)`` is the tridiagonal matrix
    with diagonal ``(2 + h^2 c)/h^2`` and off-diagonals ``-1/h^2``.

    Raises
    ------
    IllPosedInstanceError
        If ``T(c)`` is not positive definite at an evaluation point.
    """
    if int(n) != n or n < 8:
        raise ConfigurationError(f"grid size must be an integer >= 8, got {n}")
    n = int(n)
    h = 1.0 / (n + 1)
    w = np.full(n, h)
    w.setflags(write=False)
    rhs = np.array(f.entries if isinstance(f, Vector) else f, dtype=float).reshape(-1)
    if rhs.size != n:
        raise DimensionError(f"f has length {rhs.size}, expected {n}")
    rhs = rhs.copy()
    rhs[0] += g0 / h ** 2
    rhs[-1] += g1 / h ** 2

    def factor(c: np.ndarray) -> np.ndarray:
        if c.size != n:
            raise DimensionError(f"coefficient has length {c.size}, expected {n}")
        if not np.all(np.isfinite(c)):
            raise IllPosedInstanceError("coefficient has non-finite entries")
        try:
            return scipy.linalg.cholesky_banded(_tridiag_banded(c, h))
        except np.linalg.LinAlgError as exc:
            raise IllPosedInstanceError(
                f"finite-difference operator is not positive definite: {exc}") from None

    def solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve_banded((chol, False), b)

    def forward(c: Vector) -> Vector:
        chol = factor(np.asarray(c.entries))
        return Vector._wrap(solve(chol, rhs), w)

    def derivative(c: Vector) -> LinearOperator:
        chol = factor(np.asarray(c.entries))
        u = solve(chol, rhs)
        dense = -solve(chol, np.diag(u))
        return LinearOperator(
            n, n,
            lambda v: -solve(chol, u * v),
            lambda z: -u * solve(chol, z),
            w, w, dense=dense)

    prob = NonlinearProblem(n, n, forward, derivative, w, w, rho, name="elliptic")
    if c_true is None:
        return prob
    ct = np.array(c_true.entries if isinstance(c_true, Vector) else c_true, dtype=float)
    if np.any(ct < 0):
        raise ConfigurationError("c_true must be nonnegative")
    return prob.with_truth(ct)


def elliptic_benchmark(n: int = 64, rho: float = math.inf) -> NonlinearProblem:
    """Elliptic instance with ``c_true = 1 + sin(2 pi x)/2`` and ``u_true = 1 + sin(pi x)``.

    ``f`` is the discrete residual of ``u_true``, so ``F(c_true)`` equals
    ``u_true`` at the grid points to rounding.
    """
    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)
    c = 1.0 + 0.5 * np.sin(2 * np.pi * x)
    u = 1.0 + np.sin(np.pi * x)
    g0 = g1 = 1.0
    padded = np.concatenate([[g0], u, [g1]])
    f = (2 * padded[1:-1] - padded[:-2] - padded[2:]) / h ** 2 + c * u
    return elliptic_problem(n, f, g0, g1, c, rho)


@dataclass(frozen=True)
class SourceSpec:
    """Smoothness of ``x0 - x_true``: ``kind`` is ``"holder"`` or ``"logarithmic"``."""

    kind: str
    exponent: float
    omega: object

    def __post_init__(self):
        if self.kind not in ("holder", "logarithmic"):
            raise ConfigurationError(f"unknown source kind {self.kind!r}")
        if not self.exponent >= 0 or (self.kind == "logarithmic" and not self.exponent > 0):
            raise ConfigurationError(f"invalid source exponent {self.exponent}")

    def phi(self, lam: np.ndarray) -> np.ndarray:
        if self.kind == "holder":
            return lam ** self.exponent
        return (-np.log(lam)) ** (-self.exponent)


@dataclass(frozen=True)
class SourceConstruction:
    x0: Vector
    omega_norm: float
    dropped_norm: float


def construct_source(problem: NonlinearProblem, spec: SourceSpec) -> SourceConstruction:
    """``x0 = x_true + phi(A*A) omega`` with ``A = F'(x_true)``.

    Components of ``omega`` outside the span of right singular vectors with
    nonzero singular values are dropped; their norm is returned.
    """
    if problem.x_true is None:
        raise ConfigurationError("source construction needs x_true")
    a = problem.derivative(problem.x_true)
    svd = svd_dense(a)
    omega = spec.omega if isinstance(spec.omega, Vector) else Vector(spec.omega,
                                                                     problem.weights_x)
    if len(omega) != problem.dim_x:
        raise DimensionError(f"omega has length {len(omega)}, expected {problem.dim_x}")
    s = svd.singular_values
    keep = s > SPAN_RTOL * (s[0] if s.size else 0.0)
    lam = s[keep] ** 2
    if spec.kind == "logarithmic" and np.any(lam > 0.5 + 1e-9):
        raise ScalingError("logarithmic sources need the spectrum of A*A in (0, 1/2]")
    v = svd.right_vectors[:, keep]
    coeff = v.T @ (problem.weights_x * omega.entries)
    shift = v @ (spec.phi(lam) * coeff)
    dropped = omega.entries - v @ coeff
    dropped_norm = float(np.sqrt(np.dot(problem.weights_x * dropped, dropped)))
    if dropped_norm > 1e-12 * max(1.0, omega.norm()):
        log.info("dropped omega component of norm %.3g outside the singular span",
                 dropped_norm)
    x0 = Vector._wrap(problem.x_true.entries + shift, problem.weights_x)
    return SourceConstruction(x0, omega.norm(), dropped_norm)


def construct_initial_guess(problem: NonlinearProblem, spec: SourceSpec) -> Vector:
    return construct_source(problem, spec).x0


def rescale_problem(problem: NonlinearProblem, family: FilterFamily, alpha0: float,
                    sample_points: Sequence[Vector]) -> Tuple[NonlinearProblem, float]:
    """Scale ``F`` so every sampled ``||F'(x)||`` is below ``min(c3 sqrt(alpha0), sqrt(beta0))``.

    Returns the scaled problem and the factor ``s <= 1``. Data and noise
    levels are not touched: the caller multiplies ``y_delta`` and ``delta``
    by ``s``.
    """
    if not sample_points:
        raise ConfigurationError("need at least one sample point")
    m = max(operator_norm(problem.derivative(x)) for x in sample_points)
    if m == 0.0:
        raise DegenerateProblemError("derivative vanishes at every sample point")
    bound = min(family.constants().c3 * math.sqrt(alpha0), math.sqrt(beta0(family, alpha0)))
    s = min(1.0, bound / m)
    if s == 1.0:
        return problem, 1.0
    fwd, der = problem.forward, problem.derivative

    def forward(x: Vector) -> Vector:
        return fwd(x) * s

    def derivative(x: Vector) -> LinearOperator:
        return der(x).scaled(s)

    return replace(problem, forward=forward, derivative=derivative), s


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ConfigurationError(f"delta must be nonnegative, got {self.delta}")


def make_noisy(y: Vector, spec: NoiseSpec) -> Vector:
    """``y + delta xi / ||xi||`` with ``xi`` uniform on ``[-1, 1]^n`` (seeded)."""
    if len(y) == 0:
        raise DimensionError("empty data vector")
    if spec.delta == 0:
        return y
    rng = np.random.default_rng(spec.seed)
    xi = Vector._wrap(rng.uniform(-1.0, 1.0, len(y)), y.weights)
    return y + xi * (spec.delta / xi.norm())
