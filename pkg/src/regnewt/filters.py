"""Spectral filter families ``g_alpha`` and their residual functions.

Each family evaluates ``g_alpha(lam)`` and ``r_alpha(lam) = 1 - lam g_alpha(lam)``
on the spectral interval ``[0, 1/2]`` and applies ``g_alpha(A*A) A* b`` to an
operator through its own iteration:

* :class:`IteratedTikhonov` -- ``m`` Tikhonov solves, each warm-started
  from the previous one.
* :class:`Landweber` -- ``floor(1/alpha) + 1`` gradient steps.
* :class:`Lardy` -- ``floor(1/alpha) + 1`` implicit (proximal) steps.
* :class:`Exponential` -- the gradient flow ``w' = A*(b - A w)`` run to
  time ``1/alpha``; exact via the SVD, or by fixed-step RK4 when the
  operator is matrix-free.

The Lardy family follows the ``i = 1 .. floor(1/alpha) + 1`` summation,
whose residual ``(1 + lam)^-(n+1)`` stays positive. ``Lardy(literal=True)``
keeps the ``i = 0 .. floor(1/alpha)`` sum, whose residual
``(1 + lam)^-n - lam`` turns negative; it exists only as a negative control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
import scipy.linalg
import scipy.optimize

from .core import LinearOperator, SvdFactors, Vector, operator_norm, svd_dense
from .exceptions import (
    DimensionError,
    DomainError,
    QualificationError,
    ScalingError,
)

__all__ = [
    "FilterFamily",
    "FilterConstants",
    "IteratedTikhonov",
    "Landweber",
    "Lardy",
    "Exponential",
    "eval_g",
    "eval_r",
    "apply_filter",
    "apply_residual",
    "family_constants",
    "qualification_bound",
    "beta0",
    "filter_via_svd",
    "residual_via_svd",
    "iteration_count",
    "default_lambda_grid",
    "default_alpha_grid",
    "NORM_BOUND",
]

NORM_BOUND = 1.0 / math.sqrt(2.0)
LAMBDA_MAX = 0.5
_LAMBDA_TOL = 1e-9
# dense recursions longer than this are evaluated by repeated squaring of the step map
_SQUARING_THRESHOLD = 32


@dataclass(frozen=True)
class FilterConstants:
    """Structural constants of a filter family.

    ``c0, c1`` bound ``r lam <= c0 alpha`` and ``g <= c1/alpha``; ``c2`` is
    the constant of the interpolation inequality; ``c3, c4`` bound
    ``r lam^{1/2}`` and ``g lam^{1/2}``. ``c5_hint`` names the analytic
    ratio bound ``r_{alpha_k} <= c5 r_{alpha_{k+1}}`` in terms of the
    schedule (``r`` its ratio bound, ``q`` or ``theta0`` its increment).
    """

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5_hint: str
    qualification: float


def default_lambda_grid(size: int = 512, smallest: float = 1e-9) -> np.ndarray:
    """``0`` followed by ``size - 1`` geometrically spaced points up to ``1/2``.

    Geometric spacing resolves maxima located near ``lam ~ alpha`` for
    every ``alpha`` on the default parameter grid.
    """
    return np.concatenate([[0.0], np.geomspace(smallest, LAMBDA_MAX, size - 1)])


def default_alpha_grid(size: int = 16, low: float = 1e-4, high: float = 1.0) -> np.ndarray:
    return np.geomspace(low, high, size)


def iteration_count(alpha: float) -> int:
    """``floor(1/alpha)``, robust to ``alpha = 1/n`` rounding to just below."""
    return int(math.floor(1.0 / alpha + 1e-9))


def _as_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < -_LAMBDA_TOL) or np.any(lam > LAMBDA_MAX + _LAMBDA_TOL) \
            or np.any(np.isnan(lam)):
        raise DomainError(f"lambda must lie in [0, 1/2], got range "
                          f"[{np.min(lam)}, {np.max(lam)}]")
    return np.clip(lam, 0.0, LAMBDA_MAX)


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


class FilterFamily:
    """Common interface; concrete families override the ``_g``/``_r`` kernels."""

    name = "filter"
    bounded_increments = True  # needs schedules with bounded 1/alpha increments

    def _check_alpha(self, alpha: float) -> float:
        alpha = float(alpha)
        if not alpha > 0 or not math.isfinite(alpha):
            raise DomainError(f"alpha must be positive and finite, got {alpha}")
        return alpha

    def g(self, alpha: float, lam):
        alpha = self._check_alpha(alpha)
        lam_arr = _as_lambda(lam)
        return _out(self._g(alpha, lam_arr), lam)

    def r(self, alpha: float, lam):
        alpha = self._check_alpha(alpha)
        lam_arr = _as_lambda(lam)
        return _out(self._r(alpha, lam_arr), lam)

    def _g(self, alpha, lam):
        raise NotImplementedError

    def _r(self, alpha, lam):
        raise NotImplementedError

    def constants(self) -> FilterConstants:
        raise NotImplementedError

    def d_nu(self, nu: float) -> float:
        raise NotImplementedError

    def beta0(self, alpha0: float) -> float:
        """Largest ``beta <= 1/2`` with ``r_alpha0 >= 3/4`` on ``[0, beta]``."""
        alpha0 = self._check_alpha(alpha0)
        f = lambda lam: self._r(alpha0, np.asarray(lam, dtype=float)) - 0.75
        if f(LAMBDA_MAX) >= 0:
            return LAMBDA_MAX
        return float(scipy.optimize.brentq(f, 0.0, LAMBDA_MAX, xtol=1e-14, rtol=1e-14))

    def _apply(self, alpha: float, op: LinearOperator, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _gram_dense(op: LinearOperator) -> np.ndarray:
    """Coordinate matrix of ``A*A`` (self-adjoint in the input weights)."""
    m = op.require_dense()
    return (m.T * op.weights_out[None, :]) @ m / op.weights_in[:, None]


def _affine_power(step: np.ndarray, shift: np.ndarray, times: int) -> np.ndarray:
    """``T^times(0)`` for the affine map ``T(x) = step @ x + shift``.

    Uses binary powering: ``T^2 = (step^2, step @ shift + shift)``.
    """
    acc = np.zeros_like(shift)
    base_m, base_c = step, shift
    k = times
    while k:
        if k & 1:
            acc = base_m @ acc + base_c
        k >>= 1
        if k:
            base_c = base_m @ base_c + base_c
            base_m = base_m @ base_m
    return acc


@dataclass(frozen=True)
class IteratedTikhonov(FilterFamily):
    """Iterated Tikhonov regularization of order ``m`` (``m = 1``: Tikhonov)."""

    m: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"order m must be an integer >= 1, got {self.m}")

    @property
    def name(self):
        return f"iterated_tikhonov(m={self.m})"

    bounded_increments = False

    def _g(self, alpha, lam):
        # alpha^-1 sum_{i=1}^m (alpha/(alpha+lam))^i: finite at lam = 0
        t = alpha / (alpha + lam)
        acc = np.zeros_like(lam)
        p = np.ones_like(lam)
        for _ in range(self.m):
            p = p * t
            acc = acc + p
        return acc / alpha

    def _r(self, alpha, lam):
        return (alpha / (alpha + lam)) ** self.m

    def constants(self):
        m = self.m
        return FilterConstants(
            c0=(m - 1) ** (m - 1) / m ** m,
            c1=float(m),
            c2=math.sqrt(m),
            c3=((2 * m - 1) / (2 * m)) ** m / math.sqrt(2 * m - 1),
            c4=(1 - ((m + 1) / (m + 3)) ** m) * math.sqrt(m),
            c5_hint="r**m",
            qualification=float(m),
        )

    def d_nu(self, nu):
        m = self.m
        return (nu / m) ** nu * ((m - nu) / m) ** (m - nu)

    def beta0(self, alpha0):
        alpha0 = self._check_alpha(alpha0)
        return min(LAMBDA_MAX, alpha0 * ((4.0 / 3.0) ** (1.0 / self.m) - 1.0))

    def _apply(self, alpha, op, b):
        m = op.require_dense()
        w_in = op.weights_in
        # alpha I + A*A, symmetrized by W_in
        k = (m.T * op.weights_out[None, :]) @ m
        k[np.diag_indices_from(k)] += alpha * w_in
        factor = scipy.linalg.cho_factor(k)
        atb = op.rmatvec(b)
        z = np.zeros(op.dim_in)
        for _ in range(self.m):
            z = scipy.linalg.cho_solve(factor, w_in * (alpha * z + atb))
        return z


class _StepCountFamily(FilterFamily):
    """Families whose iteration count is ``floor(1/alpha) + 1`` (alpha <= 1)."""

    def _check_alpha(self, alpha):
        alpha = super()._check_alpha(alpha)
        if alpha > 1.0 + 1e-12:
            raise DomainError(f"{self.name} needs alpha <= 1, got {alpha}")
        return alpha

    def steps(self, alpha: float) -> int:
        return iteration_count(self._check_alpha(alpha)) + 1


@dataclass(frozen=True)
class Landweber(_StepCountFamily):
    """Landweber iteration with unit step, ``floor(1/alpha) + 1`` steps."""

    name = "landweber"

    def _g(self, alpha, lam):
        k = iteration_count(alpha) + 1
        safe = np.where(lam > 0, lam, 0.5)
        return np.where(lam > 0, -np.expm1(k * np.log1p(-safe)) / safe, float(k))

    def _r(self, alpha, lam):
        return np.exp((iteration_count(alpha) + 1) * np.log1p(-lam))

    def constants(self):
        return FilterConstants(c0=0.5, c1=2.0, c2=1.0, c3=math.sqrt(2.0) / 3.0,
                               c4=math.sqrt(2.0), c5_hint="2**q",
                               qualification=math.inf)

    def d_nu(self, nu):
        return nu ** nu

    def beta0(self, alpha0):
        k = self.steps(alpha0)
        return min(LAMBDA_MAX, 1.0 - 0.75 ** (1.0 / k))

    def _apply(self, alpha, op, b):
        k = self.steps(alpha)
        atb = op.rmatvec(b)
        if op.has_dense and k > _SQUARING_THRESHOLD:
            step = np.eye(op.dim_in) - _gram_dense(op)
            return _affine_power(step, atb, k)
        x = np.zeros(op.dim_in)
        for _ in range(k):
            x = x + op.rmatvec(b - op.matvec(x))
        return x


@dataclass(frozen=True)
class Lardy(_StepCountFamily):
    """Lardy's method: implicit steps ``x <- (I + A*A)^-1 (x + A* b)``.

    ``literal=True`` selects the summation starting at ``i = 0`` (one step
    fewer, plus an extra identity term) and violates positivity of the
    residual function; it is a debugging aid only.
    """

    literal: bool = False

    @property
    def name(self):
        return "lardy_literal" if self.literal else "lardy"

    def _g(self, alpha, lam):
        n = iteration_count(alpha)
        safe = np.where(lam > 0, lam, 0.5)
        tail = -np.expm1(-(n + 1) * np.log1p(safe)) / safe
        if self.literal:
            return np.where(lam > 0, (1.0 + lam) * tail, float(n + 1))
        return np.where(lam > 0, tail, float(n + 1))

    def _r(self, alpha, lam):
        n = iteration_count(alpha)
        if self.literal:
            return np.exp(-n * np.log1p(lam)) - lam
        return np.exp(-(n + 1) * np.log1p(lam))

    def constants(self):
        return FilterConstants(c0=0.5, c1=2.0, c2=1.0, c3=0.5, c4=math.sqrt(2.0),
                               c5_hint="1.5**q", qualification=math.inf)

    def d_nu(self, nu):
        # (1 + lam) >= exp(2 ln(3/2) lam) on [0, 1/2]
        return (nu / (2.0 * math.e * math.log(1.5))) ** nu

    def beta0(self, alpha0):
        if self.literal:
            return super().beta0(alpha0)
        k = self.steps(alpha0)
        return min(LAMBDA_MAX, (4.0 / 3.0) ** (1.0 / k) - 1.0)

    def _apply(self, alpha, op, b):
        m = op.require_dense()
        w_in = op.weights_in
        k = (m.T * op.weights_out[None, :]) @ m
        k[np.diag_indices_from(k)] += w_in
        factor = scipy.linalg.cho_factor(k)
        atb = op.rmatvec(b)
        n = iteration_count(self._check_alpha(alpha))
        steps = n if self.literal else n + 1
        shift = scipy.linalg.cho_solve(factor, w_in * atb)
        if steps > _SQUARING_THRESHOLD:
            step = scipy.linalg.cho_solve(factor, np.diag(w_in))
            x = _affine_power(step, shift, steps)
        else:
            x = np.zeros(op.dim_in)
            for _ in range(steps):
                x = scipy.linalg.cho_solve(factor, w_in * (x + atb))
        if self.literal:
            # extra i = 0 term of the sum: g includes (1+lam)^0, i.e. + A* b
            x = x + atb
        return x


@dataclass(frozen=True)
class Exponential(FilterFamily):
    """Asymptotic regularization (Showalter flow) stopped at ``t = 1/alpha``."""

    name = "exponential"
    ode_step: float = 0.25

    def _g(self, alpha, lam):
        safe = np.where(lam > 0, lam, 0.5)
        return np.where(lam > 0, -np.expm1(-safe / alpha) / safe, 1.0 / alpha)

    def _r(self, alpha, lam):
        return np.exp(-lam / alpha)

    def constants(self):
        return FilterConstants(c0=math.exp(-1.0), c1=1.0, c2=1.0,
                               c3=1.0 / math.sqrt(2.0 * math.e),
                               c4=math.sqrt(2.0 / math.e), c5_hint="exp(theta0)",
                               qualification=math.inf)

    def d_nu(self, nu):
        return (nu / math.e) ** nu

    def beta0(self, alpha0):
        alpha0 = self._check_alpha(alpha0)
        return min(LAMBDA_MAX, alpha0 * math.log(4.0 / 3.0))

    def _apply(self, alpha, op, b):
        if op.has_dense:
            return filter_via_svd(self, alpha, svd_dense(op), b)
        return self.integrate(alpha, op, b)

    def integrate(self, alpha: float, op: LinearOperator, b: np.ndarray) -> np.ndarray:
        """Classical RK4 for ``w' = A*(b - A w)``, ``w(0) = 0``, up to ``1/alpha``.

        The step is the largest ``h <= ode_step`` that lands exactly on
        ``1/alpha``; with ``||A*A|| <= 1/2`` the scheme is stable.
        """
        horizon = 1.0 / self._check_alpha(alpha)
        n = max(1, math.ceil(horizon / self.ode_step - 1e-12))
        h = horizon / n
        rhs = lambda w: op.rmatvec(b - op.matvec(w))
        w = np.zeros(op.dim_in)
        for _ in range(n):
            k1 = rhs(w)
            k2 = rhs(w + 0.5 * h * k1)
            k3 = rhs(w + 0.5 * h * k2)
            k4 = rhs(w + h * k3)
            w = w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return w


def eval_g(family: FilterFamily, alpha: float, lam):
    """``g_alpha(lam)`` for scalar or array ``lam`` in ``[0, 1/2]``."""
    return family.g(alpha, lam)


def eval_r(family: FilterFamily, alpha: float, lam):
    """Residual function ``r_alpha(lam) = 1 - lam g_alpha(lam)`` in closed form."""
    return family.r(alpha, lam)


def family_constants(family: FilterFamily) -> FilterConstants:
    return family.constants()


def qualification_bound(family: FilterFamily, nu: float) -> float:
    """Constant ``d_nu`` with ``r_alpha(lam) lam^nu <= d_nu alpha^nu``."""
    nu = float(nu)
    if nu < 0:
        raise QualificationError(f"nu must be nonnegative, got {nu}")
    qual = family.constants().qualification
    if nu > qual:
        raise QualificationError(
            f"nu={nu} exceeds the qualification {qual} of {family.name}")
    return float(family.d_nu(nu))


def beta0(family: FilterFamily, alpha0: float) -> float:
    return float(family.beta0(alpha0))


def _check_scaling(op: LinearOperator, slack: float = 1.05) -> None:
    nrm = operator_norm(op, iters=50)
    if nrm > NORM_BOUND * slack:
        raise ScalingError(
            f"operator norm {nrm:.6g} exceeds 1/sqrt(2) (with {slack - 1:.0%} slack)")


def apply_filter(family: FilterFamily, alpha: float, op: LinearOperator, b: Vector,
                 check_scaling: bool = True) -> Vector:
    """Regularized solution ``g_alpha(A*A) A* b`` via the family's iteration.

    Raises
    ------
    ScalingError
        If ``||A|| > 1/sqrt(2)`` beyond a 5% slack.
    UnsupportedOperatorError
        If the family needs a dense solve and ``op`` is matrix-free.
    """
    if len(b) != op.dim_out:
        raise DimensionError(f"right-hand side has length {len(b)}, expected {op.dim_out}")
    alpha = family._check_alpha(alpha)
    if check_scaling:
        _check_scaling(op)
    h = family._apply(alpha, op, np.asarray(b.entries))
    return Vector._wrap(np.asarray(h, dtype=float), op.weights_in)


def apply_residual(family: FilterFamily, alpha: float, op: LinearOperator, x: Vector,
                   check_scaling: bool = True) -> Vector:
    """``r_alpha(A*A) x = x - g_alpha(A*A) A*A x``."""
    if len(x) != op.dim_in:
        raise DimensionError(f"vector has length {len(x)}, expected {op.dim_in}")
    return x - apply_filter(family, alpha, op, op.apply(x), check_scaling)


def filter_via_svd(family: FilterFamily, alpha: float, svd: SvdFactors,
                   b: np.ndarray) -> np.ndarray:
    """Spectral oracle: ``sum_j g(s_j^2) s_j <b, u_j> v_j``."""
    return svd.range_function(lambda lam: family.g(alpha, lam), b)


def residual_via_svd(family: FilterFamily, alpha: float, svd: SvdFactors,
                     x: np.ndarray) -> np.ndarray:
    """Spectral oracle: ``r_alpha(A*A) x`` with kernel components kept."""
    return svd.gram_function(lambda lam: family.r(alpha, lam), x)
