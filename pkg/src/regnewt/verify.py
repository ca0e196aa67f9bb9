"""Executable checks of the structural inequalities behind the convergence theory.

Every check returns :class:`CheckReport` objects. A report compares a
measured supremum (over a finite grid or random sample, hence a lower bound
of the true supremum) with a known constant when one exists. Estimates of
nonlinearity constants are sampled and carry the note ``HEURISTIC``.

Operator-valued spectral functions are evaluated on the whitened matrix
``W_out^{1/2} M W_in^{-1/2}``, so weighted operator norms become Euclidean
2-norms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from .core import Vector
from .exceptions import InsufficientDataError
from .filters import (NORM_BOUND, FilterFamily, default_alpha_grid, default_lambda_grid,
                      qualification_bound)
from .solver import AlphaSchedule, c5_bound, validate_schedule

__all__ = [
    "CheckReport",
    "NonlinearityEstimate",
    "check_filter_bounds",
    "check_derived_bounds",
    "check_ratio_bound",
    "check_qualification",
    "check_log_qualification",
    "check_interpolation_lemma",
    "check_commutators",
    "check_strengthened_commutators",
    "estimate_nonlinearity",
    "estimate_constants",
    "sample_ball",
    "commutator_alpha_grid",
]

RTOL = 1e-9
HEURISTIC = "HEURISTIC"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one inequality check.

    ``passed`` is ``measured <= bound (1 + 1e-9)`` when a bound is given,
    otherwise it records that the measured constant is finite.
    """

    name: str
    measured: float
    bound: Optional[float]
    passed: bool
    worst_case: str = ""
    note: str = ""
    extra: Dict[str, object] = field(default_factory=dict, compare=False)

    @classmethod
    def make(cls, name, measured, bound=None, worst_case="", note="", extra=None):
        measured = float(measured) + 0.0  # normalizes -0.0
        if bound is None:
            passed = math.isfinite(measured)
        else:
            passed = bool(measured <= float(bound) * (1 + RTOL))
        return cls(name, measured, None if bound is None else float(bound), passed,
                   worst_case, note, dict(extra or {}))

    def row(self) -> str:
        bound = "-" if self.bound is None else f"{self.bound:.6g}"
        flag = "PASS" if self.passed else "FAIL"
        tail = f"  [{self.note}]" if self.note else ""
        return f"{flag}  {self.name:<40s} measured={self.measured:.6g}  bound={bound}{tail}"


def _grids(lambda_grid, alpha_grid):
    lam = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, float)
    alpha = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, float)
    return np.atleast_1d(lam), np.sort(np.atleast_1d(alpha))


def _table(family, alphas, lam, which):
    fn = family.r if which == "r" else family.g
    return np.array([fn(a, lam) for a in alphas]).reshape(len(alphas), lam.size)


def _argmax(values):
    flat = np.nan_to_num(values, nan=-np.inf)
    idx = np.unravel_index(int(np.argmax(flat)), flat.shape)
    return float(flat[idx]), idx


def check_filter_bounds(family: FilterFamily, lambda_grid=None,
                         alpha_grid=None) -> List[CheckReport]:
    """Grid checks of the bounds on ``r_alpha`` and ``g_alpha``.

    Part (a) is split into one report per inequality (``r >= 0``,
    ``r <= 1``, ``r lam <= c0 alpha``, ``g >= 0``, ``g <= c1/alpha``) so that
    a failure names the violated inequality. Part (b) measures
    ``sup r_alpha / r_beta`` for ``alpha <= beta`` (bound 1). Part (c)
    measures ``sup (r_beta - r_alpha) / (sqrt(lam/alpha) r_beta)`` (bound ``c2``).
    """
    lam, alphas = _grids(lambda_grid, alpha_grid)
    const = family.constants()
    r = _table(family, alphas, lam, "r")
    g = _table(family, alphas, lam, "g")

    def where(idx):
        return f"alpha={alphas[idx[0]]:.6g}, lambda={lam[idx[1]]:.6g}"

    reports = []
    for name, values, bound in (
        ("residual positivity: max(-r)", -r, 0.0),
        ("residual at most one: max r", r, 1.0),
        ("r*lam/alpha <= c0", r * lam[None, :] / alphas[:, None], const.c0),
        ("filter nonnegativity: max(-g)", -g, 0.0),
        ("g*alpha <= c1", g * alphas[:, None], const.c1),
    ):
        measured, idx = _argmax(values)
        reports.append(CheckReport.make(name, measured, bound, where(idx)))

    # pairs alpha_i <= beta_j, i <= j
    i, j = np.triu_indices(alphas.size)
    ra, rb = r[i], r[j]
    pos = rb > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        mono = np.where(pos, ra / np.where(pos, rb, 1.0), np.where(ra > 0, np.inf, 0.0))
        scale = np.sqrt(lam[None, :] / alphas[i][:, None])
        ok = pos & (lam[None, :] > 0)
        lip = np.where(ok, (rb - ra) / np.where(ok, scale * rb, 1.0), -np.inf)

    def where_pair(idx):
        p, q = idx
        return (f"alpha={alphas[i[p]]:.6g}, beta={alphas[j[p]]:.6g}, "
                f"lambda={lam[q]:.6g}")

    measured, idx = _argmax(mono)
    reports.append(CheckReport.make("monotone in alpha: r_alpha/r_beta", measured, 1.0,
                                    where_pair(idx)))
    measured, idx = _argmax(lip)
    measured = max(measured, 0.0)
    reports.append(CheckReport.make("difference ratio <= c2", measured, const.c2,
                                    where_pair(idx)))
    return reports


def check_derived_bounds(family: FilterFamily, lambda_grid=None, alpha_grid=None,
                         c3: Optional[float] = None,
                         c4: Optional[float] = None) -> List[CheckReport]:
    """``r lam^{1/2} <= c3 alpha^{1/2}`` and ``g lam^{1/2} <= c4 alpha^{-1/2}``.

    ``c3, c4`` default to the family constants; passing ``sqrt(c0)`` and
    ``sqrt(c1)`` checks the bounds implied by part (a).
    """
    lam, alphas = _grids(lambda_grid, alpha_grid)
    const = family.constants()
    c3 = const.c3 if c3 is None else c3
    c4 = const.c4 if c4 is None else c4
    sl = np.sqrt(lam)[None, :]
    sa = np.sqrt(alphas)[:, None]
    out = []
    for name, values, bound in (
        ("r*sqrt(lam/alpha) <= c3", _table(family, alphas, lam, "r") * sl / sa, c3),
        ("g*sqrt(lam*alpha) <= c4", _table(family, alphas, lam, "g") * sl * sa, c4),
    ):
        measured, idx = _argmax(values)
        out.append(CheckReport.make(name, measured, bound,
                                    f"alpha={alphas[idx[0]]:.6g}, lambda={lam[idx[1]]:.6g}"))
    return out


def check_ratio_bound(family: FilterFamily, schedule: AlphaSchedule, kmax: int = 50,
                         lambda_grid=None) -> CheckReport:
    """Sup of ``r_{alpha_k} / r_{alpha_{k+1}}`` against the analytic ratio bound."""
    bound = c5_bound(family, schedule)
    measured = validate_schedule(schedule, family, kmax, lambda_grid)
    return CheckReport.make(f"consecutive ratio <= c5 ({type(schedule).__name__})", measured,
                            bound, f"k < {kmax}")


def check_qualification(family: FilterFamily, nus: Sequence[float], lambda_grid=None,
                        alpha_grid=None) -> List[CheckReport]:
    """``sup r_alpha(lam) lam^nu / alpha^nu`` against ``d_nu`` for each ``nu``."""
    lam, alphas = _grids(lambda_grid, alpha_grid)
    r = _table(family, alphas, lam, "r")
    out = []
    for nu in nus:
        bound = qualification_bound(family, nu)
        values = r * lam[None, :] ** nu / alphas[:, None] ** nu
        measured, idx = _argmax(values)
        out.append(CheckReport.make(f"qualification nu={nu:g}", measured, bound,
                                    f"alpha={alphas[idx[0]]:.6g}, lambda={lam[idx[1]]:.6g}"))
    return out


def check_log_qualification(family: FilterFamily, mus: Sequence[float], alpha_grid=None,
                            alpha0: float = 1.0, lambda_grid=None) -> List[CheckReport]:
    """Measured ``b_mu = sup r_alpha(lam) (-ln lam)^-mu / (-ln(alpha/(2 alpha0)))^-mu``.

    No reference value exists; a report passes when the supremum is finite.
    ``lam = 0`` is skipped (the weight tends to 0 there).
    """
    lam, alphas = _grids(lambda_grid, alpha_grid)
    alphas = alphas[alphas <= alpha0 * (1 + 1e-12)]
    lam = lam[lam > 0]
    if alphas.size == 0 or lam.size == 0:
        raise InsufficientDataError("empty grid after restricting to alpha <= alpha0, lam > 0")
    r = _table(family, alphas, lam, "r")
    out = []
    for mu in mus:
        num = r * (-np.log(lam))[None, :] ** (-mu)
        den = (-np.log(alphas / (2.0 * alpha0)))[:, None] ** (-mu)
        measured, idx = _argmax(num / den)
        out.append(CheckReport.make(f"log qualification mu={mu:g}", measured, None,
                                    f"alpha={alphas[idx[0]]:.6g}, lambda={lam[idx[1]]:.6g}"))
    return out


# -- operator-level helpers -------------------------------------------------

def _spectral(family: FilterFamily, alpha: float, m: np.ndarray, which: str) -> np.ndarray:
    """``r_alpha(M^T M)`` or ``g_alpha(M^T M)`` for a Euclidean matrix ``M``.

    A full SVD gives the kernel of ``M`` the exact eigenvalue 0.
    """
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    lam = np.zeros(m.shape[1])
    lam[:s.size] = np.clip(s ** 2, 0.0, 0.5)
    vals = family.r(alpha, lam) if which == "r" else family.g(alpha, lam)
    return (vt.T * vals[None, :]) @ vt


def _random_operator(rng, rows, cols, norm_max=NORM_BOUND):
    m = rng.standard_normal((rows, cols))
    return m * (rng.uniform(0.05, 1.0) * norm_max / np.linalg.norm(m, 2))


def check_interpolation_lemma(family: FilterFamily, trials: int = 1000,
                              seed: int = 0) -> CheckReport:
    """Random trials of
    ``||(r_beta - r_alpha)(A*A) x|| <= ||xbar - r_beta(A*A) x|| + c2 alpha^{-1/2} ||A xbar||``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    c2 = family.constants().c2
    worst, where = 0.0, "no trial with positive left-hand side"
    for t in range(trials):
        rows, cols = rng.integers(1, 13, size=2)
        a = _random_operator(rng, rows, cols)
        alpha, beta = np.sort(10.0 ** rng.uniform(-4, 0, size=2))
        x = rng.standard_normal(cols)
        rb_x = _spectral(family, beta, a, "r") @ x
        ra_x = _spectral(family, alpha, a, "r") @ x
        mode = t % 3
        if mode == 0:
            xbar = rng.standard_normal(cols)
        elif mode == 1:
            xbar = rb_x.copy()
        else:
            xbar = rb_x + 10.0 ** rng.uniform(-6, 0) * rng.standard_normal(cols)
        lhs = np.linalg.norm(rb_x - ra_x)
        rhs = np.linalg.norm(xbar - rb_x) + c2 / math.sqrt(alpha) * np.linalg.norm(a @ xbar)
        if lhs == 0.0:
            continue
        ratio = math.inf if rhs == 0.0 else lhs / rhs
        if ratio > worst:
            worst = ratio
            where = (f"trial={t}, shape={rows}x{cols}, alpha={alpha:.6g}, beta={beta:.6g}, "
                     f"mode={mode}")
    return CheckReport.make("interpolation inequality", worst, 1.0, where)


def commutator_alpha_grid(size: int = 7) -> np.ndarray:
    return np.geomspace(1e-3, 1.0, size)


_COMMUTATOR_NAMES = ("|r_A - r_B| sqrt(alpha)",
                     "|(r_A - r_B) B*|",
                     "|A (r_A - r_B) B*| / sqrt(alpha)",
                     "|(g_A - g_B) B*| alpha")


def _commutator_ratios(family, alpha, a, b):
    diff = np.linalg.norm(a - b, 2)
    if diff == 0.0:
        return None
    ra, rb = _spectral(family, alpha, a, "r"), _spectral(family, alpha, b, "r")
    ga, gb = _spectral(family, alpha, a, "g"), _spectral(family, alpha, b, "g")
    dr = ra - rb
    return np.array([
        np.linalg.norm(dr, 2) * math.sqrt(alpha) / diff,
        np.linalg.norm(dr @ b.T, 2) / diff,
        np.linalg.norm(a @ dr @ b.T, 2) / (math.sqrt(alpha) * diff),
        np.linalg.norm((ga - gb) @ b.T, 2) * alpha / diff,
    ])


def _commutator_pair(rng, t, dim, alphas):
    """Rotate through three kinds of operator pairs.

    * Gaussian ``A`` with an independent ``B`` or a small perturbation.
    * Singular values log-uniform over the range of ``sqrt(alpha)``, so
      every tested alpha meets a nearby mode.
    * Singular values uniform up to the norm bound, which probes the
      largest alphas.

    Perturbations are small because worst cases sit at small ``||A - B||``.
    """
    kind = t % 3
    if kind == 0:
        a = _random_operator(rng, dim, dim)
        if t % 2 == 0:
            b = _random_operator(rng, dim, dim)
            return a, b
        e = rng.standard_normal((dim, dim))
        b = a + 10.0 ** rng.uniform(-6, -1) * e / np.linalg.norm(e, 2)
    else:
        u, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        v, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        if kind == 1:
            lo = 0.5 * math.log10(alphas.min()) - 0.5
            s = 10.0 ** rng.uniform(lo, math.log10(NORM_BOUND), dim)
        else:
            s = rng.uniform(0.0, NORM_BOUND, dim)
            s[0] = NORM_BOUND
        a = (u * s) @ v.T
        e = rng.standard_normal((dim, dim))
        b = a + 10.0 ** rng.uniform(-6, -2) * e / np.linalg.norm(e, 2)
    for m in (a, b):
        nrm = np.linalg.norm(m, 2)
        if nrm > NORM_BOUND:
            m *= NORM_BOUND / nrm
    return a, b


def check_commutators(family: FilterFamily, trials: int = 200, alpha_grid=None,
                      seed: int = 0, dim: int = 8,
                      factor: float = 4.0) -> List[CheckReport]:
    """Sampled constants for the four commutator inequalities.

    For each inequality two reports are produced: the candidate constant
    (sup over trials and alphas; passes when finite) and its spread
    ``max_alpha / min_alpha`` of the per-alpha suprema (bound ``factor``),
    which is what boundedness in alpha amounts to on a finite sample.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alphas = commutator_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, float)
    rng = np.random.default_rng(seed)
    per_alpha = np.zeros((alphas.size, 4))
    for t in range(trials):
        a, b = _commutator_pair(rng, t, dim, alphas)
        for i, alpha in enumerate(alphas):
            ratios = _commutator_ratios(family, alpha, a, b)
            if ratios is not None:
                per_alpha[i] = np.maximum(per_alpha[i], ratios)
    out = []
    for k, name in enumerate(_COMMUTATOR_NAMES):
        col = per_alpha[:, k]
        c6 = float(col.max())
        spread = float(col.max() / col.min()) if col.min() > 0 else math.inf
        extra = {"per_alpha": dict(zip(map(float, alphas), map(float, col)))}
        out.append(CheckReport.make(f"{name} c6", c6, None,
                                    f"alpha={alphas[int(col.argmax())]:.6g}", extra=extra))
        out.append(CheckReport.make(f"{name} spread", spread, factor,
                                    f"min at alpha={alphas[int(col.argmin())]:.6g}",
                                    extra=extra))
    return out


def scalar_commutator_ratios(family: FilterFamily, alpha: float, a: float,
                             b: float) -> np.ndarray:
    """The four commutator ratios for ``1 x 1`` operators, in closed form."""
    if a == b:
        raise ValueError("a and b must differ")
    la, lb = a * a, b * b
    dr = family.r(alpha, la) - family.r(alpha, lb)
    dg = family.g(alpha, la) - family.g(alpha, lb)
    d = abs(a - b)
    return np.array([abs(dr) * math.sqrt(alpha) / d, abs(dr * b) / d,
                     abs(a * dr * b) / (math.sqrt(alpha) * d), abs(dg * b) * alpha / d])


# -- nonlinear problems ----------------------------------------------------

@dataclass(frozen=True)
class NonlinearityEstimate:
    """Sampled constants; all are lower bounds or heuristic fits."""

    L: float
    K0: float
    K1: float
    K2: float
    pairs: int
    rank_residual: float


def sample_ball(problem, count: int, radius: float, seed: int = 0) -> List[Vector]:
    """``count`` points ``x_true + t d`` with unit ``d`` and ``t`` uniform in ``[0, radius]``."""
    if problem.x_true is None:
        raise InsufficientDataError("sampling around x_true needs x_true")
    rng = np.random.default_rng(seed)
    w = problem.weights_x
    out = []
    for _ in range(count):
        d = rng.standard_normal(problem.dim_x)
        d /= math.sqrt(np.dot(w * d, d))
        out.append(Vector._wrap(problem.x_true.entries + rng.uniform(0, radius) * d, w))
    return out


class _Whitened:
    """Cached whitened derivatives at sample points."""

    def __init__(self, problem):
        self.problem = problem
        self.sx = np.sqrt(problem.weights_x)
        self._cache = {}

    def __call__(self, x: Vector) -> np.ndarray:
        key = id(x)
        if key not in self._cache:
            self._cache[key] = (x, self.problem.derivative(x).whitened())
        return self._cache[key][1]

    def vec(self, x: Vector) -> np.ndarray:
        return self.sx * x.entries


def _pairs(samples):
    pairs = [(x, z) for x, z in itertools.combinations(samples, 2)
             if (x - z).norm() > 0]
    if not pairs:
        raise InsufficientDataError("no pair of distinct sample points")
    return pairs


def estimate_constants(problem, samples: Sequence[Vector], seed: int = 0,
                       directions: int = 4) -> NonlinearityEstimate:
    """Sampled ``L``, ``K0``, ``K1``, ``K2``.

    * ``L = max ||F'(x) - F'(z)|| / ||x - z||``.
    * ``K0 = max ||R - I|| / ||x - z||`` with ``R = I + F'(z)^+ (F'(x) - F'(z))``,
      the pseudo-inverse restricted to singular values above
      ``1e-10 * sigma_max``; ``rank_residual`` is the largest relative
      defect ``||F'(z) R - F'(x)|| / ||F'(x)||`` (nonzero when the
      factorization does not exist).
    * ``(K1, K2) >= 0`` minimizes ``K1 + K2`` subject to
      ``||(F'(x) - F'(z)) w|| <= K1 ||x - z|| ||F'(z) w|| + K2 ||F'(z)(x - z)|| ||w||``
      over sampled triples, with ``w`` random plus the extreme right
      singular vectors of ``F'(z)``.
    """
    if len(samples) < 2:
        raise InsufficientDataError("need at least two samples")
    wh = _Whitened(problem)
    rng = np.random.default_rng(seed)
    pinv = {}
    lmax = k0 = resid = 0.0
    rows, rhs = [], []
    pairs = _pairs(samples)
    for x, z in pairs:
        a, b = wh(x), wh(z)
        dx = wh.vec(x) - wh.vec(z)
        dist = np.linalg.norm(dx)
        diff = a - b
        lmax = max(lmax, np.linalg.norm(diff, 2) / dist)
        if id(z) not in pinv:
            u, s, vt = np.linalg.svd(b)
            keep = s > 1e-10 * s[0] if s[0] > 0 else np.zeros_like(s, bool)
            pinv[id(z)] = ((vt[keep].T / s[keep]) @ u[:, keep].T, vt)
        bp, vt = pinv[id(z)]
        corr = bp @ diff
        k0 = max(k0, np.linalg.norm(corr, 2) / dist)
        na = np.linalg.norm(a, 2)
        if na > 0:
            resid = max(resid, np.linalg.norm(b @ corr - diff, 2) / na)
        bdx = np.linalg.norm(b @ dx)
        ws = [rng.standard_normal(b.shape[1]) for _ in range(directions)] + [vt[0], vt[-1]]
        for w in ws:
            lhs = np.linalg.norm(diff @ w)
            if lhs == 0.0:
                continue
            rows.append([dist * np.linalg.norm(b @ w), bdx * np.linalg.norm(w)])
            rhs.append(lhs)
    k1 = k2 = 0.0
    if rows:
        res = scipy.optimize.linprog(c=[1.0, 1.0], A_ub=-np.asarray(rows), b_ub=-np.asarray(rhs),
                                     bounds=[(0, None), (0, None)], method="highs")
        if res.status == 0:
            k1, k2 = map(float, res.x)
        else:
            k1 = k2 = math.inf
    return NonlinearityEstimate(float(lmax), float(k0), k1, k2, len(pairs), float(resid))


def estimate_nonlinearity(problem, samples: Sequence[Vector], seed: int = 0) -> List[CheckReport]:
    """Reports for the sampled constants ``L``, ``K0``, ``K1``, ``K2``."""
    est = estimate_constants(problem, samples, seed)
    info = f"{est.pairs} pairs"
    return [
        CheckReport.make("Lipschitz constant L", est.L, None, info, HEURISTIC),
        CheckReport.make("factorization constant K0", est.K0, None,
                         f"{info}, factorization residual {est.rank_residual:.3g}", HEURISTIC),
        CheckReport.make("range constant K1", est.K1, None, info, HEURISTIC),
        CheckReport.make("range constant K2", est.K2, None, info, HEURISTIC),
    ]


def check_strengthened_commutators(problem, family: FilterFamily,
                                   sample_pairs: Sequence[Tuple[Vector, Vector]],
                                   alpha_grid=None,
                                   estimate: Optional[NonlinearityEstimate] = None,
                                   seed: int = 0) -> List[CheckReport]:
    """Candidate constants for the commutator bounds that use ``K0, K1, K2``.

    ``c7 = sup ||r_alpha(A*A) - r_alpha(B*B)|| / (K0 ||x - z||)`` and
    ``c8 = sup ||A (r_alpha(A*A) - r_alpha(B*B))|| /
    ((K0 + K1) sqrt(alpha) ||x - z|| + K2 (||A(x - z)|| + ||B(x - z)||))``
    with ``A = F'(x)``, ``B = F'(z)``. The constants are estimated from the
    points of ``sample_pairs`` unless ``estimate`` is given. A vanishing
    left-hand side counts as ratio 0.
    """
    pairs = [(x, z) for x, z in sample_pairs if (x - z).norm() > 0]
    if not pairs:
        raise InsufficientDataError("no pair of distinct points")
    if estimate is None:
        pts = list({id(p): p for pair in pairs for p in pair}.values())
        estimate = estimate_constants(problem, pts, seed)
    alphas = commutator_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, float)
    wh = _Whitened(problem)
    c7 = c8 = 0.0
    w7 = w8 = ""
    tiny = 1e-14
    for x, z in pairs:
        a, b = wh(x), wh(z)
        dx = wh.vec(x) - wh.vec(z)
        dist = np.linalg.norm(dx)
        for alpha in alphas:
            dr = _spectral(family, alpha, a, "r") - _spectral(family, alpha, b, "r")
            lhs7 = np.linalg.norm(dr, 2)
            lhs8 = np.linalg.norm(a @ dr, 2)
            rhs7 = estimate.K0 * dist
            rhs8 = ((estimate.K0 + estimate.K1) * math.sqrt(alpha) * dist
                    + estimate.K2 * (np.linalg.norm(a @ dx) + np.linalg.norm(b @ dx)))
            r7 = 0.0 if lhs7 <= tiny else (lhs7 / rhs7 if rhs7 > 0 else math.inf)
            r8 = 0.0 if lhs8 <= tiny else (lhs8 / rhs8 if rhs8 > 0 else math.inf)
            if r7 > c7:
                c7, w7 = r7, f"alpha={alpha:.6g}, |x-z|={dist:.3g}"
            if r8 > c8:
                c8, w8 = r8, f"alpha={alpha:.6g}, |x-z|={dist:.3g}"
    extra = {"K0": estimate.K0, "K1": estimate.K1, "K2": estimate.K2}
    return [
        CheckReport.make("strengthened commutator c7", c7, None, w7, HEURISTIC, extra),
        CheckReport.make("strengthened commutator c8", c8, None, w8, HEURISTIC, extra),
    ]

