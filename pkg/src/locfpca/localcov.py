"""Local covariance operators: estimators, quadrature values and asymptotic checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .errors import DomainError
from .gamma_class import AuxiliaryFunction
from .hilbert import SymOperator, as_sym, operator_norms
from .kernels import Kernel
from .model import ProcessModel, RField, sample_kl
from .oracles import (
    MAX_POLAR_DIM,
    MC,
    QUADRATURE,
    DEFAULT_ANGULAR,
    polar_cell_moments,
    radial_expectations,
    vw_integrals,
)
from .spectral import GAP_RTOL, eig_sym, symmetric_eigenvalues

MIN_MC_BUDGET = 100_000


class EmptyLocalSampleWarning(UserWarning):
    """No draw fell inside the kernel support."""


@dataclass(frozen=True, eq=False)
class BandwidthGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("bandwidth grid must be a nonempty 1-D sequence")
        if np.any(v <= 0):
            raise ValueError("bandwidths must be positive")
        if np.any(np.diff(v) >= 0):
            raise ValueError("bandwidths must be strictly decreasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return self.values.size


def _as_rows(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("sample must be a 2-D array of draws by coordinates")
    return x


def _center(x0, d: int) -> np.ndarray:
    c = np.asarray(getattr(x0, "values", x0), dtype=float)
    if c.shape != (d,):
        raise ValueError(f"shift point has shape {c.shape}, sample has {d} coordinates")
    return c


def empirical_cov(sample) -> SymOperator:
    x = _as_rows(sample)
    n = x.shape[0]
    if n < 2:
        raise ValueError("empirical covariance needs at least two draws")
    xc = x - x.mean(axis=0)
    return SymOperator.from_symmetrized(xc.T @ xc / n)


def local_weights(sample, x0, kernel: Kernel, h: float):
    """Centred draws ``Y = X - x0`` and their kernel weights ``K(||Y|| / h)``."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    x = _as_rows(sample)
    y = x - _center(x0, x.shape[1])
    dist = np.sqrt(np.einsum("ij,ij->i", y, y))
    return y, np.asarray(kernel(dist / h), dtype=float)


def empirical_local_cov(sample, x0, kernel: Kernel, h: float) -> SymOperator:
    """``(1/n) sum K(||X_k - x0|| / h) (X_k - x0) (x) (X_k - x0)``."""
    y, w = local_weights(sample, x0, kernel, h)
    if not np.any(w > 0):
        warnings.warn("no draw inside the kernel support; returning the zero operator",
                      EmptyLocalSampleWarning, stacklevel=2)
    return SymOperator.from_symmetrized((y * w[:, None]).T @ y / y.shape[0])


@dataclass(frozen=True, eq=False)
class TheoreticalLocalCov:
    operator: SymOperator
    method: str
    stderr: np.ndarray | None = None
    residual: float = 0.0


def theoretical_local_cov(model: ProcessModel, kernel: Kernel, h: float,
                          method: str = QUADRATURE, budget: int = 400_000, seed: int = 0,
                          n_r: int = 48, n_ang: int | None = None) -> TheoreticalLocalCov:
    """``E[K(||X - x0|| / h) (X - x0) (x) (X - x0)]`` at the model's shift point.

    The quadrature path integrates radially with Gauss-Legendre and over
    directions with a sphere rule; ``residual`` is the largest entry change
    against a rule with two thirds of the nodes. The Monte Carlo path reports
    per-entry standard errors.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if method == QUADRATURE:
        if model.dim > MAX_POLAR_DIM:
            raise ValueError(f"quadrature path needs dimension <= {MAX_POLAR_DIM}, got {model.dim}")
        n_ang = n_ang or DEFAULT_ANGULAR[model.dim]

        def weight(r):
            return kernel(r / h)

        fine = polar_cell_moments(model, h, weight, n_r, n_ang)
        coarse = polar_cell_moments(model, h, weight, max(8, 2 * n_r // 3), max(8, 2 * n_ang // 3))
        return TheoreticalLocalCov(SymOperator.from_symmetrized(fine), QUADRATURE, None,
                                   float(np.max(np.abs(fine - coarse))))
    if method != MC:
        raise ValueError(f"unknown method {method!r}")
    if budget < MIN_MC_BUDGET:
        raise ValueError(f"Monte Carlo budget must be at least {MIN_MC_BUDGET}")
    x = sample_kl(model, budget, seed)
    y, w = local_weights(x, model.shift, kernel, h)
    terms = (w[:, None, None] * y[:, :, None] * y[:, None, :])
    mean = terms.mean(axis=0)
    se = terms.std(axis=0, ddof=1) / math.sqrt(budget)
    return TheoreticalLocalCov(SymOperator.from_symmetrized(mean), MC, se)


@dataclass(frozen=True)
class VW:
    v: float
    w: float
    v_stderr: float
    w_stderr: float
    method: str


def v_w_sequences(model: ProcessModel, kernel: Kernel, h: float, rho: AuxiliaryFunction,
                  method: str = "auto", n: int = 200_000, seed: int = 0) -> VW:
    est = vw_integrals(model, kernel, h, rho, method=method, n=n, seed=seed)
    return VW(float(est.values[0]), float(est.values[1]),
              float(est.stderr[0]), float(est.stderr[1]), est.method)


def lco_cell_prediction(v: float, w: float, field: RField, i: int, j: int) -> float:
    if not (0 <= i < field.dim and 0 <= j < field.dim):
        raise IndexError("cell index out of range")
    return (v if i == j else 0.0) + w * field.entry(i, j)


def kt_ratio(gamma_k, v: float) -> float:
    """``||Gamma_K - v I||_sup / v``."""
    if not v > 0:
        raise DomainError("v must be positive")
    g = as_sym(gamma_k)
    return operator_norms(g - SymOperator.identity(g.dim) * v).sup_norm / v


@dataclass(frozen=True)
class NaiveBound:
    lhs: float
    rhs: float
    holds: bool
    method: str


def naive_bound_check(gamma_k, model: ProcessModel, kernel: Kernel, h: float,
                      method: str = "auto", n: int = 200_000, seed: int = 0) -> NaiveBound:
    """``||Gamma_K||_sup`` against ``E[K(||Y||/h) ||Y||^2]``."""
    lhs = operator_norms(gamma_k).sup_norm
    est = radial_expectations(model, h, [lambda r: kernel(r / h) * r * r],
                              method=method, n=n, seed=seed)
    rhs = float(est.values[0])
    return NaiveBound(lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-6)), est.method)


@dataclass(frozen=True, eq=False)
class CompayReport:
    h: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    envelope: np.ndarray
    F: np.ndarray
    skipped: np.ndarray
    method: str

    @property
    def envelope_holds(self) -> bool:
        ok = ~self.skipped
        return bool(np.all(self.r1[ok] <= self.envelope[ok] * (1.0 + 1e-10)))


def compay_check(model: ProcessModel, kernel: Kernel, rho: AuxiliaryFunction, h_grid,
                 method: str = "auto", n: int = 200_000, seed: int = 0) -> CompayReport:
    """``v / E[K R^2]`` (tends to 0) and ``v / (K(1) h rho(h) F(h))`` (tends to 1)."""
    h = np.asarray(h_grid, dtype=float)
    r1, r2, env, F = (np.full(h.size, np.nan) for _ in range(4))
    skipped = np.zeros(h.size, dtype=bool)
    used = QUADRATURE
    for k, hk in enumerate(h):
        funcs = [
            lambda r, hk=hk: kernel(r / hk) * r * np.asarray(rho(np.maximum(r, 1e-300))),
            lambda r, hk=hk: kernel(r / hk) * r * r,
            lambda r, hk=hk: kernel(r / hk) * r,
        ]
        est = radial_expectations(model, hk, funcs, method=method, n=n, seed=seed, replicate=k)
        used = est.method
        F[k] = est.F
        if est.F < 1e-12:
            skipped[k] = True
            continue
        v, m2, m1 = est.values
        r1[k] = v / m2
        r2[k] = v / (kernel.at_one * hk * rho(hk) * est.F)
        env[k] = rho(hk) / hk * (m1 * hk / m2)
    return CompayReport(h, r1, r2, env, F, skipped, used)


@dataclass(frozen=True)
class CovopReport:
    n: int
    reps: int
    h: float
    mse_hs: float
    mse_hs_stderr: float
    identity: float
    asymptote: float
    mse_sup: float
    mse_sup_stderr: float
    F: float

    @property
    def agrees(self) -> bool:
        return abs(self.mse_hs - self.identity) <= 4.0 * self.mse_hs_stderr

    @property
    def ratio_to_asymptote(self) -> float:
        return self.mse_hs / self.asymptote


def _reference(model, kernel, h, gamma_k):
    if gamma_k is None:
        gamma_k = theoretical_local_cov(model, kernel, h).operator
    return as_sym(gamma_k)


def covop_mse(model: ProcessModel, kernel: Kernel, h: float, n: int, reps: int, seed: int,
              gamma_k=None, threads: int | None = None) -> CovopReport:
    """Monte Carlo mean squared error of the local covariance estimator.

    ``identity`` is the exact value ``(E[K^2 R^4] - ||Gamma_K||_HS^2) / n``
    and ``asymptote`` is ``K(1)^2 h^4 F(h) / n``.
    """
    if reps < 100:
        raise ValueError("need at least 100 replicates")
    ref = _reference(model, kernel, h, gamma_k)
    est = radial_expectations(model, h, [lambda r: kernel(r / h) ** 2 * r**4])
    identity = (float(est.values[0]) - float(np.sum(ref.entries**2))) / n
    asymptote = kernel.at_one**2 * h**4 * est.F / n

    def one(r):
        x = sample_kl(model, n, seed, replicate=r)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyLocalSampleWarning)
            diff = empirical_local_cov(x, model.shift, kernel, h).entries - ref.entries
        sup = float(np.max(np.abs(symmetric_eigenvalues(0.5 * (diff + diff.T)))))
        return float(np.sum(diff * diff)), sup * sup

    out = np.array(ordered_map(one, range(reps), threads))
    hs, sup = out[:, 0], out[:, 1]
    root = math.sqrt(reps)
    return CovopReport(int(n), int(reps), float(h), float(hs.mean()), float(hs.std(ddof=1) / root),
                       identity, asymptote, float(sup.mean()), float(sup.std(ddof=1) / root),
                       est.F)


@dataclass(frozen=True, eq=False)
class EigenRatesReport:
    h: float
    n: int
    reps: int
    indices: tuple
    skipped: tuple
    eig_mse: np.ndarray
    eig_mse_stderr: np.ndarray
    proj_mse: np.ndarray
    proj_mse_stderr: np.ndarray
    sup_mse: float
    sup_mse_stderr: float
    weyl_violations: int
    scale: float

    @property
    def eig_ratio(self) -> np.ndarray:
        return self.eig_mse / self.scale

    @property
    def proj_ratio(self) -> np.ndarray:
        return self.proj_mse / self.scale

    @property
    def eig_bound_holds(self) -> bool:
        return bool(np.all(self.eig_mse <= self.sup_mse + 4.0 * self.sup_mse_stderr))


def eigen_rates(model: ProcessModel, kernel: Kernel, h: float, n: int, reps: int, seed: int,
                p_max: int, gamma_k=None, threads: int | None = None) -> EigenRatesReport:
    """Eigenvalue and eigenprojector errors of the local covariance estimator.

    Indices whose reference eigenvalue gap is below ``1e-9 * trace`` are
    skipped and listed in ``skipped``. ``scale`` is ``h^4 F(h) / n``.
    """
    ref = _reference(model, kernel, h, gamma_k)
    E = eig_sym(ref)
    p_max = min(int(p_max), E.dim)
    tol = GAP_RTOL * E.trace_norm()
    keep = tuple(p for p in range(p_max) if E.gap(p) > tol)
    skipped = tuple(p for p in range(p_max) if p not in keep)
    ref_vec = E.matrix
    F = radial_expectations(model, h, []).F
    scale = h**4 * F / n

    def one(r):
        x = sample_kl(model, n, seed, replicate=r)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyLocalSampleWarning)
            G = empirical_local_cov(x, model.shift, kernel, h)
        En = eig_sym(G)
        diff = G.entries - ref.entries
        sup = float(np.max(np.abs(symmetric_eigenvalues(0.5 * (diff + diff.T)))))
        de = np.array([En.eigenvalues[p] - E.eigenvalues[p] for p in keep])
        # two unit vectors at angle t give projectors at sup distance sin t
        cosines = np.array([En.eigenvectors[p].coeffs @ ref_vec[:, p] for p in keep])
        dp = np.clip(1.0 - cosines**2, 0.0, None)
        viol = int(np.sum(np.abs(de) > sup + 1e-10))
        return de**2, dp, sup * sup, viol

    results = ordered_map(one, range(reps), threads)
    de2 = np.array([r[0] for r in results]).reshape(reps, len(keep))
    dp2 = np.array([r[1] for r in results]).reshape(reps, len(keep))
    sup2 = np.array([r[2] for r in results])
    viol = int(sum(r[3] for r in results))
    root = math.sqrt(reps)
    return EigenRatesReport(
        float(h), int(n), int(reps), keep, skipped,
        de2.mean(axis=0), de2.std(axis=0, ddof=1) / root,
        dp2.mean(axis=0), dp2.std(axis=0, ddof=1) / root,
        float(sup2.mean()), float(sup2.std(ddof=1) / root), viol, float(scale),
    )


@dataclass(frozen=True, eq=False)
class GorillazReport:
    h: np.ndarray
    deviation: np.ndarray
    deviation_bound: np.ndarray
    deviation_holds: np.ndarray
    scaled_sup: np.ndarray
    printed_constant: np.ndarray
    second_sup: np.ndarray
    second_holds: np.ndarray


def gorillaz_fixture(lambdas, h_grid) -> GorillazReport:
    """Diagonal operators showing that closeness to ``hI`` need not hold at rate ``h``.

    First variant: ``T(h) = diag(h l / (l + h) + h^1.5 / (l + h))``.
    Second variant replaces ``h^1.5`` by ``h^2``.
    ``scaled_sup`` is ``||T(h) / h||_sup * sqrt(h)``; ``printed_constant`` is
    ``1 + h^-0.5`` times ``sqrt(h)``, kept for comparison.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or np.any(lam <= 0) or np.any(np.diff(lam) >= 0):
        raise ValueError("lambdas must be positive and strictly decreasing")
    h = np.asarray(h_grid, dtype=float)
    dev, bound, ok, scaled, printed, sup2, ok2 = (np.empty(h.size) for _ in range(7))
    for k, hk in enumerate(h):
        t1 = SymOperator.diagonal(hk * lam / (lam + hk) + hk**1.5 / (lam + hk))
        t2 = SymOperator.diagonal(hk * lam / (lam + hk) + hk**2 / (lam + hk))
        dev[k] = operator_norms(t1 - SymOperator.identity(lam.size) * hk).sup_norm
        bound[k] = math.sqrt(hk)
        ok[k] = dev[k] <= bound[k] * (1.0 + 1e-10)
        scaled[k] = operator_norms(t1 * (1.0 / hk)).sup_norm * math.sqrt(hk)
        printed[k] = (1.0 + hk**-0.5) * math.sqrt(hk)
        sup2[k] = operator_norms(t2 * (1.0 / hk)).sup_norm
        ok2[k] = sup2[k] <= 2.0
    return GorillazReport(h, dev, bound, ok.astype(bool), scaled, printed, sup2, ok2.astype(bool))
