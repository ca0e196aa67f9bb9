"""Finite-dimensional Hilbert-space primitives.

Vectors carry the quadrature weights of their discrete inner product, so
``inner(u, v) = sum(w * u * v)``.  Linear operators are matrix-free maps
with an explicit adjoint taken with respect to those weighted products; a
dense matrix may be attached, in which case :func:`svd_dense` can serve as
the spectral oracle for functions of ``A*A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DimensionError, UnsupportedOperatorError

__all__ = [
    "Vector",
    "LinearOperator",
    "SvdFactors",
    "inner",
    "norm",
    "op_norm_estimate",
    "operator_norm",
    "svd_dense",
    "adjoint_mismatch",
    "MAX_DENSE_DIM",
]

MAX_DENSE_DIM = 2048


class Vector:
    """Element of R^n equipped with the inner product ``sum(w_i u_i v_i)``.

    Parameters
    ----------
    entries : array_like
        Coordinates, length >= 1.
    weights : array_like, optional
        Strictly positive quadrature weights of the same length. Defaults
        to ones.

    Instances are immutable: both arrays are flagged read-only. Arithmetic
    between vectors requires identical weights.
    """

    __slots__ = ("entries", "weights")

    def __init__(self, entries, weights=None):
        entries = np.array(entries, dtype=float).reshape(-1)
        if entries.size == 0:
            raise DimensionError("a vector needs at least one entry")
        if weights is None:
            weights = np.ones(entries.size)
        elif not (isinstance(weights, np.ndarray) and not weights.flags.writeable
                  and weights.dtype == float and weights.ndim == 1):
            # read-only float arrays are shared so the fast identity check applies
            weights = np.array(weights, dtype=float).reshape(-1)
        if weights.size != entries.size:
            raise DimensionError(
                f"entries have length {entries.size}, weights {weights.size}")
        if not np.all(weights > 0):
            raise DimensionError("weights must be strictly positive")
        weights.setflags(write=False)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def _wrap(cls, entries: np.ndarray, weights: np.ndarray) -> "Vector":
        # trusted fast path: ``entries`` is a fresh array, ``weights`` validated
        out = object.__new__(cls)
        entries.setflags(write=False)
        object.__setattr__(out, "entries", entries)
        object.__setattr__(out, "weights", weights)
        return out

    @classmethod
    def zeros(cls, weights) -> "Vector":
        w = weights if isinstance(weights, np.ndarray) else np.asarray(weights, float)
        return cls(np.zeros(w.size), w)

    def like(self, entries) -> "Vector":
        """New vector in the same space as ``self``."""
        entries = np.array(entries, dtype=float).reshape(-1)
        if entries.size != self.weights.size:
            raise DimensionError(
                f"expected length {self.weights.size}, got {entries.size}")
        return Vector._wrap(entries, self.weights)

    def __setattr__(self, name, value):
        raise AttributeError("Vector is immutable")

    def __len__(self) -> int:
        return self.entries.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"Vector({np.array2string(self.entries, threshold=8)})"

    def _check(self, other: "Vector") -> None:
        if other.weights is self.weights:
            return
        if other.weights.size != self.weights.size:
            raise DimensionError(
                f"length mismatch: {self.weights.size} vs {other.weights.size}")
        if not np.array_equal(other.weights, self.weights):
            raise DimensionError("vectors live in spaces with different weights")

    def __add__(self, other: "Vector") -> "Vector":
        self._check(other)
        return Vector._wrap(self.entries + other.entries, self.weights)

    def __sub__(self, other: "Vector") -> "Vector":
        self._check(other)
        return Vector._wrap(self.entries - other.entries, self.weights)

    def __neg__(self) -> "Vector":
        return Vector._wrap(-self.entries, self.weights)

    def __mul__(self, scalar) -> "Vector":
        return Vector._wrap(self.entries * float(scalar), self.weights)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Vector":
        return Vector._wrap(self.entries / float(scalar), self.weights)

    def inner(self, other: "Vector") -> float:
        self._check(other)
        return float(np.dot(self.weights * self.entries, other.entries))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights * self.entries, self.entries)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.entries)))


def inner(u: Vector, v: Vector) -> float:
    """Weighted inner product ``sum(w * u * v)``.

    Raises :class:`DimensionError` on a length or weight mismatch.
    """
    return u.inner(v)


def norm(u: Vector) -> float:
    return u.norm()


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free linear map between weighted coordinate spaces.

    ``matvec`` and ``rmatvec`` act on raw coordinate arrays; ``rmatvec`` is
    the adjoint in the weighted inner products, i.e.
    ``inner(A u, v) == inner(u, A* v)``. ``dense`` optionally holds the
    ``dim_out x dim_in`` coordinate matrix of ``matvec``.
    """

    dim_in: int
    dim_out: int
    matvec: Callable[[np.ndarray], np.ndarray]
    rmatvec: Callable[[np.ndarray], np.ndarray]
    weights_in: np.ndarray
    weights_out: np.ndarray
    dense: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise DimensionError("operator dimensions must be positive")
        for name, dim in (("weights_in", self.dim_in), ("weights_out", self.dim_out)):
            w = np.array(getattr(self, name), dtype=float).reshape(-1)
            if w.size != dim:
                raise DimensionError(f"{name} has length {w.size}, expected {dim}")
            if not np.all(w > 0):
                raise DimensionError(f"{name} must be strictly positive")
            w.setflags(write=False)
            object.__setattr__(self, name, w)
        if self.dense is not None:
            d = np.array(self.dense, dtype=float)
            if d.shape != (self.dim_out, self.dim_in):
                raise DimensionError(
                    f"dense shape {d.shape} != ({self.dim_out}, {self.dim_in})")
            d.setflags(write=False)
            object.__setattr__(self, "dense", d)

    @classmethod
    def from_matrix(cls, matrix, weights_in=None, weights_out=None) -> "LinearOperator":
        m = np.array(matrix, dtype=float)
        if m.ndim != 2:
            raise DimensionError("expected a 2-D matrix")
        n_out, n_in = m.shape
        w_in = np.ones(n_in) if weights_in is None else np.asarray(weights_in, float)
        w_out = np.ones(n_out) if weights_out is None else np.asarray(weights_out, float)
        # weighted adjoint: W_in^{-1} M^T W_out
        adj = (m * w_out[:, None]).T / w_in[:, None]
        m.setflags(write=False)
        return cls(n_in, n_out, m.dot, adj.dot, w_in, w_out, dense=m)

    @classmethod
    def diagonal(cls, diag, weights=None) -> "LinearOperator":
        d = np.array(diag, dtype=float).reshape(-1)
        w = np.ones(d.size) if weights is None else np.asarray(weights, float)
        return cls(d.size, d.size, lambda x: d * x, lambda y: d * y, w, w,
                   dense=np.diag(d))

    @property
    def has_dense(self) -> bool:
        return self.dense is not None

    def apply(self, u: Vector) -> Vector:
        if len(u) != self.dim_in:
            raise DimensionError(f"operator expects length {self.dim_in}, got {len(u)}")
        return Vector._wrap(np.asarray(self.matvec(u.entries), dtype=float),
                            self.weights_out)

    def apply_adjoint(self, v: Vector) -> Vector:
        if len(v) != self.dim_out:
            raise DimensionError(
                f"adjoint expects length {self.dim_out}, got {len(v)}")
        return Vector._wrap(np.asarray(self.rmatvec(v.entries), dtype=float),
                            self.weights_in)

    def scaled(self, factor: float) -> "LinearOperator":
        f = float(factor)
        mv, rmv = self.matvec, self.rmatvec
        dense = None if self.dense is None else f * self.dense
        return LinearOperator(self.dim_in, self.dim_out,
                              lambda x: f * mv(x), lambda y: f * rmv(y),
                              self.weights_in, self.weights_out, dense)

    def whitened(self) -> np.ndarray:
        """Dense matrix ``W_out^{1/2} M W_in^{-1/2}``.

        Unitarily equivalent to the operator, so norms and spectral
        functions can be computed with standard Euclidean linear algebra.
        """
        m = self.require_dense()
        return np.sqrt(self.weights_out)[:, None] * m / np.sqrt(self.weights_in)[None, :]

    def require_dense(self) -> np.ndarray:
        if self.dense is None:
            raise UnsupportedOperatorError("operator has no dense materialization")
        return self.dense


@dataclass(frozen=True)
class SvdFactors:
    """Singular system of an operator in its weighted inner products.

    Columns of ``left_vectors`` are orthonormal in the output weights and
    columns of ``right_vectors`` in the input weights, so the operator is
    ``M = U diag(s) V^T W_in``.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    weights_in: np.ndarray
    weights_out: np.ndarray

    @property
    def rank_cap(self) -> int:
        return self.singular_values.size

    def reconstruct(self) -> np.ndarray:
        u, s, v = self.left_vectors, self.singular_values, self.right_vectors
        return (u * s) @ (v.T * self.weights_in[None, :])

    def right_coefficients(self, x: np.ndarray) -> np.ndarray:
        return self.right_vectors.T @ (self.weights_in * x)

    def left_coefficients(self, y: np.ndarray) -> np.ndarray:
        return self.left_vectors.T @ (self.weights_out * y)

    def gram_function(self, f: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
        """``f(A*A) x``, with the kernel of ``A`` mapped by ``f(0)``."""
        x = np.asarray(x, dtype=float)
        c = self.right_coefficients(x)
        lam = self.singular_values ** 2
        proj = self.right_vectors @ c
        f0 = float(np.asarray(f(np.zeros(1)))[0])
        return self.right_vectors @ (np.asarray(f(lam)) * c) + f0 * (x - proj)

    def range_function(self, f: Callable[[np.ndarray], np.ndarray], b: np.ndarray) -> np.ndarray:
        """``f(A*A) A* b`` evaluated mode by mode."""
        s = self.singular_values
        c = self.left_coefficients(np.asarray(b, dtype=float))
        return self.right_vectors @ (np.asarray(f(s ** 2)) * s * c)


def svd_dense(op: LinearOperator) -> SvdFactors:
    """Singular value decomposition of ``op`` in its weighted products.

    The weights are absorbed symmetrically: the Euclidean SVD of
    ``W_out^{1/2} M W_in^{-1/2}`` is mapped back so that the returned
    families are orthonormal in the weighted inner products.
    """
    m = op.require_dense()
    if max(m.shape) > MAX_DENSE_DIM:
        raise UnsupportedOperatorError(
            f"dense SVD is capped at {MAX_DENSE_DIM} per dimension, got {m.shape}")
    sw_in = np.sqrt(op.weights_in)
    sw_out = np.sqrt(op.weights_out)
    u, s, vt = np.linalg.svd(sw_out[:, None] * m / sw_in[None, :], full_matrices=False)
    return SvdFactors(
        singular_values=s,
        left_vectors=u / sw_out[:, None],
        right_vectors=vt.T / sw_in[:, None],
        weights_in=op.weights_in,
        weights_out=op.weights_out,
    )


def op_norm_estimate(op: LinearOperator, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the largest singular value.

    Iterates ``x <- A*A x`` in the weighted norm and returns ``||A x||`` for
    the final unit vector, which never exceeds the true norm.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    w = op.weights_in
    x = rng.standard_normal(op.dim_in)
    x /= np.sqrt(np.dot(w * x, x))
    estimate = 0.0
    for _ in range(iters):
        y = op.matvec(x)
        estimate = float(np.sqrt(np.dot(op.weights_out * y, y)))
        z = op.rmatvec(y)
        nz = float(np.sqrt(np.dot(w * z, z)))
        if nz == 0.0:
            return 0.0
        x = z / nz
    y = op.matvec(x)
    return max(estimate, float(np.sqrt(np.dot(op.weights_out * y, y))))


def operator_norm(op: LinearOperator, iters: int = 200, seed: int = 0) -> float:
    """Exact weighted 2-norm when a dense form exists, else power iteration."""
    if op.dense is not None and max(op.dense.shape) <= MAX_DENSE_DIM:
        return float(np.linalg.norm(op.whitened(), 2))
    return op_norm_estimate(op, iters, seed)


def adjoint_mismatch(op: LinearOperator, trials: int = 100, seed: int = 0) -> float:
    """Largest relative defect ``|<Au,v> - <u,A*v>| / (|u| |v| |A|)``.

    ``|A|`` is a power-iteration estimate; a zero operator is measured
    against scale 1.
    """
    rng = np.random.default_rng(seed)
    scale = op_norm_estimate(op, 50, seed) or 1.0
    worst = 0.0
    for _ in range(trials):
        u = Vector._wrap(rng.standard_normal(op.dim_in), op.weights_in)
        v = Vector._wrap(rng.standard_normal(op.dim_out), op.weights_out)
        lhs = op.apply(u).inner(v)
        rhs = u.inner(op.apply_adjoint(v))
        worst = max(worst, abs(lhs - rhs) / (u.norm() * v.norm() * scale))
    return worst
