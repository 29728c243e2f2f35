"""Symmetric eigendecomposition by cyclic Jacobi rotations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateEigenvalueError, DimensionMismatchError
from .hilbert import BasisCoeffs, SymOperator, as_sym, check_symmetric, operator_norms

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
GAP_RTOL = 1e-9


def jacobi(matrix, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi sweeps on a symmetric matrix.

    Pivots are visited row by row in the upper triangle, so the output is a
    deterministic function of the input. Convergence is declared when the
    Frobenius norm of the off-diagonal part drops below ``tol`` times the
    Frobenius norm of the whole matrix.

    Returns
    -------
    values : ndarray
        Eigenvalues in the order they sit on the final diagonal.
    vectors : ndarray
        Orthogonal matrix whose columns are the matching eigenvectors.
    sweeps : int
        Number of completed sweeps.
    """
    a = np.array(matrix, dtype=float)
    check_symmetric(a)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), v, 0
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    # below rounding of both diagonal entries
                    a[p, q] = a[q, p] = 0.0
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) + g == abs(diff):
                    # small-angle limit; the exact formula would overflow theta
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise ConvergenceError(
        f"Jacobi did not converge in {max_sweeps} sweeps", residual=float(off / scale)
    )


def _order(values: np.ndarray) -> np.ndarray:
    # descending magnitude, ties resolved by position for reproducibility
    idx = np.arange(values.size)
    return np.lexsort((idx, -np.abs(values)))


def symmetric_eigenvalues(matrix) -> np.ndarray:
    values, _, _ = jacobi(matrix)
    return values[_order(values)]


@dataclass(frozen=True, eq=False)
class EigDecomp:
    """Eigenpairs sorted by decreasing absolute eigenvalue."""

    eigenvalues: np.ndarray
    eigenvectors: tuple
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def matrix(self) -> np.ndarray:
        """Eigenvectors stacked as columns."""
        return np.column_stack([e.coeffs for e in self.eigenvectors])

    def reconstruct(self) -> np.ndarray:
        m = self.matrix
        return (m * self.eigenvalues) @ m.T

    def trace_norm(self) -> float:
        return float(np.abs(self.eigenvalues).sum())

    def gap(self, p: int) -> float:
        """Distance from eigenvalue ``p`` to the nearest other eigenvalue."""
        others = np.delete(self.eigenvalues, p)
        if others.size == 0:
            return np.inf
        return float(np.min(np.abs(others - self.eigenvalues[p])))


def eig_sym(T) -> EigDecomp:
    op = as_sym(T)
    values, vectors, sweeps = jacobi(op.entries)
    order = _order(values)
    values = values[order]
    vectors = vectors[:, order]
    # fix signs so the largest-magnitude component of each vector is positive
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    values.setflags(write=False)
    return EigDecomp(
        eigenvalues=values,
        eigenvectors=tuple(BasisCoeffs(vectors[:, k]) for k in range(vectors.shape[1])),
        sweeps=sweeps,
    )


def eigenprojector(E: EigDecomp, p: int, gap_rtol: float = GAP_RTOL) -> SymOperator:
    """Rank-one projector on the ``p``-th eigenvector.

    Raises
    ------
    DegenerateEigenvalueError
        If eigenvalue ``p`` is closer than ``gap_rtol * trace_norm`` to
        another one, in which case a single eigenvector is not well defined.
    """
    if not 0 <= p < E.dim:
        raise IndexError(f"eigen index {p} out of range for dimension {E.dim}")
    tol = gap_rtol * E.trace_norm()
    if E.gap(p) <= tol:
        raise DegenerateEigenvalueError(
            f"eigenvalue {p} has gap {E.gap(p):.3e} below tolerance {tol:.3e}"
        )
    u = E.eigenvectors[p].coeffs
    return SymOperator.from_symmetrized(np.outer(u, u))


def char_number_distance(T, U) -> float:
    """Largest gap between matched characteristic numbers of ``T`` and ``U``."""
    t, u = as_sym(T), as_sym(U)
    if t.dim != u.dim:
        raise DimensionMismatchError(f"dimension mismatch: {t.dim} vs {u.dim}")
    st = np.abs(symmetric_eigenvalues(t.entries))
    su = np.abs(symmetric_eigenvalues(u.entries))
    return float(np.max(np.abs(st - su)))


__all__ = [
    "EigDecomp",
    "char_number_distance",
    "eig_sym",
    "eigenprojector",
    "jacobi",
    "operator_norms",
    "symmetric_eigenvalues",
]
