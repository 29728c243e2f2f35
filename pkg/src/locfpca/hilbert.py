"""Finite truncation of a separable Hilbert space.

An element is stored through its first ``d`` coordinates in a fixed
orthonormal basis. Operators are dense symmetric ``d x d`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricOperatorError, DimensionMismatchError

SYMMETRY_RTOL = 1e-12


def _frozen_array(values, ndim):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BasisCoeffs:
    """Coordinates of an element of the truncated space."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen_array(self.coeffs, 1))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def squared_norm(self) -> float:
        return float(self.coeffs @ self.coeffs)

    def norm(self) -> float:
        return float(np.sqrt(self.squared_norm()))

    def __eq__(self, other):
        if not isinstance(other, BasisCoeffs):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


def check_symmetric(matrix: np.ndarray, rtol: float = SYMMETRY_RTOL) -> None:
    """Raise unless ``|m_ij - m_ji| <= rtol * max(1, |m_ij|)`` everywhere."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"operator must be square, got shape {m.shape}")
    gap = np.abs(m - m.T)
    allowed = rtol * np.maximum(1.0, np.abs(m))
    if np.any(gap > allowed):
        worst = float(np.max(gap - allowed))
        raise AsymmetricOperatorError(f"matrix is not symmetric (excess asymmetry {worst:.3e})")


@dataclass(frozen=True, eq=False)
class SymOperator:
    """Dense symmetric matrix acting on the truncated space.

    Asymmetric input is rejected, never silently symmetrized.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.entries, 2)
        check_symmetric(arr)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SymOperator":
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, values) -> "SymOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, dim: int) -> "SymOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def from_symmetrized(cls, matrix) -> "SymOperator":
        """Build from a matrix that is symmetric up to rounding of our own assembly."""
        m = np.asarray(matrix, dtype=float)
        return cls(0.5 * (m + m.T))

    def apply(self, t: BasisCoeffs) -> BasisCoeffs:
        _same_dim(self.dim, t.dim)
        return BasisCoeffs(self.entries @ t.coeffs)

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def __add__(self, other):
        if not isinstance(other, SymOperator):
            return NotImplemented
        _same_dim(self.dim, other.dim)
        return SymOperator(self.entries + other.entries)

    def __sub__(self, other):
        if not isinstance(other, SymOperator):
            return NotImplemented
        _same_dim(self.dim, other.dim)
        return SymOperator(self.entries - other.entries)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SymOperator(self.entries * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class OperatorNorms:
    sup_norm: float
    hs_norm: float
    trace_norm: float


def _same_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"dimension mismatch: {a} vs {b}")


def as_sym(T) -> SymOperator:
    return T if isinstance(T, SymOperator) else SymOperator(T)


def inner(u: BasisCoeffs, v: BasisCoeffs) -> float:
    _same_dim(u.dim, v.dim)
    return float(u.coeffs @ v.coeffs)


def tensor_product(u: BasisCoeffs, v: BasisCoeffs) -> np.ndarray:
    """Matrix of ``t -> <u, t> v``; entry ``(j, i)`` equals ``u_i v_j``.

    The result is a plain array since it is symmetric only when ``u`` and
    ``v`` are parallel. Wrap it in :class:`SymOperator` when ``u == v``.
    """
    _same_dim(u.dim, v.dim)
    return np.outer(v.coeffs, u.coeffs)


def rank_one(u: BasisCoeffs) -> SymOperator:
    """Symmetric operator ``u (x) u``."""
    return SymOperator.from_symmetrized(np.outer(u.coeffs, u.coeffs))


def operator_norms(T) -> OperatorNorms:
    """Spectral, Hilbert-Schmidt and trace norms of a symmetric operator."""
    from .spectral import symmetric_eigenvalues

    op = as_sym(T)
    eig = symmetric_eigenvalues(op.entries)
    absval = np.abs(eig)
    return OperatorNorms(
        sup_norm=float(absval.max()),
        hs_norm=float(np.sqrt(np.sum(op.entries**2))),
        trace_norm=float(absval.sum()),
    )
