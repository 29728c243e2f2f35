"""Small-ball probabilities: analytic forms, Monte Carlo estimates, series ingredients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gamma_class import AuxiliaryFunction, GammaVaryingFn
from .model import CoordinateFamily, EigenProfile, ProcessModel, sample_sq_distances

CONVENTIONS = ("norm", "squared-norm")


@dataclass(frozen=True)
class SmallBallForm:
    """Closed-form small-ball probability.

    ``arithmetic(alpha, C)``: ``exp(-C eps^(-1/alpha))``.
    ``exponential(alpha)``: ``sqrt(alpha / (-pi ln eps)) exp(-(ln eps)^2 / (4 alpha))``,
    defined for ``eps < 1``.
    """

    kind: str
    alpha: float
    C: float = 1.0

    def __post_init__(self):
        if self.kind not in ("arithmetic", "exponential"):
            raise ValueError(f"unknown small-ball form {self.kind!r}")
        if not (self.alpha > 0 and self.C > 0):
            raise ValueError("alpha and C must be positive")

    @classmethod
    def arithmetic(cls, alpha: float, C: float = 1.0) -> "SmallBallForm":
        return cls("arithmetic", float(alpha), float(C))

    @classmethod
    def exponential(cls, alpha: float) -> "SmallBallForm":
        return cls("exponential", float(alpha))

    @property
    def eps_max(self) -> float:
        return 1.0 if self.kind == "exponential" else math.inf

    def log_F(self, eps: float) -> float:
        if not 0.0 < eps < self.eps_max:
            raise DomainError(f"eps={eps} outside (0, {self.eps_max})")
        if self.kind == "arithmetic":
            return -self.C * eps ** (-1.0 / self.alpha)
        L = math.log(eps)
        return 0.5 * math.log(self.alpha / (-math.pi * L)) - L * L / (4.0 * self.alpha)

    def auxiliary(self) -> AuxiliaryFunction:
        """Auxiliary function under which this form is Gamma-varying at 0."""
        if self.kind == "arithmetic":
            return AuxiliaryFunction.power(self.alpha, self.C)
        return AuxiliaryFunction.loglinear(self.alpha)

    def as_gamma_varying(self, rho: AuxiliaryFunction | None = None) -> GammaVaryingFn:
        return GammaVaryingFn(self.log_F, rho or self.auxiliary(), self.eps_max)


def analytic_F(form: SmallBallForm, eps: float) -> float:
    return math.exp(form.log_F(eps))


def distances(sample, x0) -> np.ndarray:
    """Euclidean distances of the rows of ``sample`` to ``x0``."""
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    c = np.asarray(getattr(x0, "values", x0), dtype=float)
    diff = x - c
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def empirical_F(sample, x0, eps: float):
    """Fraction of draws strictly inside the ``eps``-ball and its binomial standard error."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    dist = distances(sample, x0)
    n = dist.size
    if n == 0:
        raise ValueError("empty sample")
    p = np.count_nonzero(dist < eps) / n
    return p, math.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True, eq=False)
class ShiftedRatioReport:
    eps: np.ndarray
    ratio: np.ndarray
    stderr: np.ndarray
    hits_shifted: np.ndarray
    hits_centered: np.ndarray
    reliable: np.ndarray

    def relative_spread(self) -> float:
        r = self.ratio[self.reliable]
        if r.size == 0:
            return math.nan
        return float((r.max() - r.min()) / r.mean())


def shifted_ratio(sample, x0, eps_grid, min_hits: int = 50) -> ShiftedRatioReport:
    """``F_x0(eps) / F_0(eps)`` from one centred sample, with delta-method errors."""
    eps = np.asarray(eps_grid, dtype=float)
    d_shift = distances(sample, x0)
    d_zero = distances(sample, np.zeros(np.atleast_2d(sample).shape[1]))
    n = d_shift.size
    ratio, se, hs, hz, ok = (np.empty(eps.size) for _ in range(5))
    for k, e in enumerate(eps):
        a = np.count_nonzero(d_shift < e)
        b = np.count_nonzero(d_zero < e)
        hs[k], hz[k] = a, b
        ok[k] = a >= min_hits and b >= min_hits
        if b == 0:
            ratio[k] = se[k] = math.nan
            continue
        pa, pb = a / n, b / n
        ratio[k] = pa / pb
        rel = 0.0
        if a > 0:
            rel += (1.0 - pa) / (n * pa)
        rel += (1.0 - pb) / (n * pb)
        se[k] = ratio[k] * math.sqrt(rel)
    return ShiftedRatioReport(eps, ratio, se, hs.astype(int), hz.astype(int), ok.astype(bool))


@dataclass(frozen=True)
class JulietReport:
    alpha: float
    theta: float
    k_max: int
    mu: float
    psi: float
    I: float
    mu_closed: float
    psi_closed: float
    I_closed: float


JULIET_TAIL = 1e-15


def juliet_required_kmax(alpha: float, theta: float) -> int:
    """Smallest ``K`` whose neglected tail is below ``JULIET_TAIL`` for all three sums.

    Each omitted term is at most ``max(theta, 1) e^(-alpha i)``, so the tail
    beyond ``K`` is bounded by ``max(theta, 1) e^(-alpha (K+1)) / (1 - e^(-alpha))``.
    """
    c = max(theta, 1.0) / (-math.expm1(-alpha))
    return max(1, math.ceil(math.log(c / JULIET_TAIL) / alpha))


def juliet_ingredients(alpha: float, theta: float, k_max: int | None = None) -> JulietReport:
    """Truncated series ``mu``, ``psi``, ``I`` and their large-``theta`` equivalents."""
    if not (alpha > 0 and theta > 0):
        raise ValueError("alpha and theta must be positive")
    need = juliet_required_kmax(alpha, theta)
    if k_max is None:
        k_max = need
    if k_max < need:
        raise ValueError(f"k_max={k_max} too small; the tail bound needs k_max >= {need}")
    i = np.arange(1, k_max + 1, dtype=float)
    e = np.exp(alpha * i)
    # summed from the smallest terms upward
    mu = float(np.sum((1.0 / (e + 2.0 * theta))[::-1]))
    psi = math.sqrt(2.0 * float(np.sum(((theta / (e + 2.0 * theta)) ** 2)[::-1])))
    # I = 1/2 sum ln(1+u_i) - theta mu, regrouped into nonnegative terms
    u_i = 2.0 * theta * np.exp(-alpha * i)
    I = 0.5 * float(np.sum((np.log1p(u_i) - u_i / (1.0 + u_i))[::-1]))
    u = 2.0 * theta * math.exp(-alpha)
    mu_c = math.log1p(u) / (2.0 * alpha * theta)
    psi_c = math.sqrt((math.log1p(u) - u / (1.0 + u)) / (2.0 * alpha))
    I_c = math.log(theta) ** 2 / (4.0 * alpha)
    return JulietReport(alpha, theta, int(k_max), mu, psi, I, mu_c, psi_c, I_c)


@dataclass(frozen=True, eq=False)
class SmallBallMCReport:
    convention: str
    eps: np.ndarray
    hits: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    log_F: np.ndarray
    ratio: np.ndarray
    log_ratio: np.ndarray
    n: int
    d: int
    seed: int

    def smallest_reliable(self, min_hits: int = 100):
        """Index of the smallest ``eps`` with at least ``min_hits`` hits, or ``None``."""
        good = np.flatnonzero(self.hits >= min_hits)
        if good.size == 0:
            return None
        return int(good[np.argmin(self.eps[good])])


def _threshold(eps: float, convention: str) -> float:
    """Bound on ``||X||^2`` that defines the small ball under ``convention``."""
    if convention == "norm":
        return eps * eps
    if convention == "squared-norm":
        return eps
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def _mc_report(model, form, eps_grid, n, seed, convention) -> SmallBallMCReport:
    eps = np.asarray(eps_grid, dtype=float)
    sq = sample_sq_distances(model, n, seed, center=np.zeros(model.dim))
    hits = np.array([np.count_nonzero(sq < _threshold(e, convention)) for e in eps])
    p = hits / n
    se = np.sqrt(p * (1.0 - p) / n)
    logF = np.array([form.log_F(e) for e in eps])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = p / np.exp(logF)
        log_ratio = np.where(hits > 0, np.log(p) / logF, np.nan)
    return SmallBallMCReport(convention, eps, hits, p, se, logF, ratio, log_ratio,
                             int(n), model.dim, int(seed))


def pb2_desk_check(alpha: float, eps_grid, n: int, seed: int, d: int = 40,
                   convention: str = "norm") -> SmallBallMCReport:
    """Gaussian process with ``lambda_k = exp(-alpha k)`` against the log-quadratic form.

    ``convention`` selects whether ``eps`` bounds the norm (``"norm"``) or the
    squared norm (``"squared-norm"``) of the draw.
    """
    eps = np.asarray(eps_grid, dtype=float)
    tail = math.exp(-alpha * (d + 1)) / (-math.expm1(-alpha))
    if tail >= 1e-4 * float(eps.min()) ** 2:
        raise ValueError(f"d={d} leaves eigenvalue tail mass {tail:.2e}; increase d")
    model = ProcessModel(d, EigenProfile("exponential", alpha), CoordinateFamily("gaussian"))
    return _mc_report(model, SmallBallForm.exponential(alpha), eps, n, seed, convention)


@dataclass(frozen=True, eq=False)
class ShapeReport:
    base: SmallBallMCReport
    slope: float
    target: float
    intercept: float


def pb1_shape_check(alpha: float, eps_grid, n: int, seed: int, d: int = 60, C: float = 1.0,
                    convention: str = "norm") -> ShapeReport:
    """Slope of ``ln(-ln F_hat)`` on ``ln eps`` for ``lambda_k = k^-(1+alpha)``.

    The target slope is ``-1/alpha``; the constant ``C`` only moves the
    intercept.
    """
    model = ProcessModel(d, EigenProfile("arithmetic", alpha), CoordinateFamily("gaussian"))
    rep = _mc_report(model, SmallBallForm.arithmetic(alpha, C), eps_grid, n, seed, convention)
    if np.any(rep.hits == 0) or np.any(rep.hits == n):
        raise ValueError("every eps must have a hit fraction strictly between 0 and 1")
    y = np.log(-np.log(rep.estimate))
    slope, intercept = np.polyfit(np.log(rep.eps), y, 1)
    return ShapeReport(rep, float(slope), -1.0 / alpha, float(intercept))
