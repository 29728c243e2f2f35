"""Gamma-varying functions at 0 and their auxiliary functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_simpson

AUX_S_MAX = 0.5


@dataclass(frozen=True, eq=False)
class AuxiliaryFunction:
    """Normalizing function ``rho`` of a Gamma-varying function.

    Kinds
    -----
    power(alpha, C)
        ``(alpha / C) s^(1 + 1/alpha)``, paired with ``exp(-C s^(-1/alpha))``.
    loglinear(alpha, coef)
        ``-coef * s / ln s``. With the default ``coef = 2 alpha`` this is the
        leading-order ``F / F'`` of the log-quadratic small-ball form.
    truncation(d)
        ``s / d``, the exact ratio ``F / F'`` of ``r^d`` near 0, suited to
        norms of ``d`` coordinates with a density positive at the centre.
    tabulated
        Linear interpolation of given values on a grid.
    """

    kind: str
    params: tuple
    s_max: float = AUX_S_MAX
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    @classmethod
    def power(cls, alpha: float, C: float = 1.0) -> "AuxiliaryFunction":
        if not (alpha > 0 and C > 0):
            raise ValueError("alpha and C must be positive")
        return cls("power", (float(alpha), float(C)))

    @classmethod
    def loglinear(cls, alpha: float, coef: float | None = None) -> "AuxiliaryFunction":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        coef = 2.0 * alpha if coef is None else float(coef)
        if not coef > 0:
            raise ValueError("coefficient must be positive")
        return cls("loglinear", (float(alpha), coef))

    @classmethod
    def truncation(cls, d: int) -> "AuxiliaryFunction":
        if d < 1:
            raise ValueError("dimension must be at least 1")
        return cls("truncation", (int(d),), s_max=math.inf)

    @classmethod
    def tabulated(cls, grid, values) -> "AuxiliaryFunction":
        g = np.array(grid, dtype=float)
        v = np.array(values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("tabulated values must be nonnegative")
        g.setflags(write=False)
        v.setflags(write=False)
        return cls("tabulated", (), s_max=float(g[-1]), grid=g, values=v)

    @classmethod
    def from_function(cls, rho, grid) -> "AuxiliaryFunction":
        g = np.asarray(grid, dtype=float)
        return cls.tabulated(g, [rho(s) for s in g])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0) or np.any(s >= self.s_max) and self.kind != "tabulated":
            raise DomainError(f"auxiliary function evaluated outside (0, {self.s_max})")
        if self.kind == "power":
            alpha, C = self.params
            out = (alpha / C) * s ** (1.0 + 1.0 / alpha)
        elif self.kind == "loglinear":
            out = -self.params[1] * s / np.log(s)
        elif self.kind == "truncation":
            out = s / self.params[0]
        else:
            if np.any(s < self.grid[0]) or np.any(s > self.grid[-1]):
                raise DomainError("tabulated auxiliary function evaluated off its grid")
            out = np.interp(s, self.grid, self.values)
        return out if out.ndim else float(out)

    def quoted_index(self):
        """Regular-variation index quoted alongside this kind, if any."""
        if self.kind == "power":
            alpha = self.params[0]
            return (3.0 + 4.0 * alpha) / (1.0 + 2.0 * alpha)
        if self.kind in ("loglinear", "truncation"):
            return 1.0
        return None

    def closed_form_index(self):
        """Log-log slope of the closed form."""
        if self.kind == "power":
            return 1.0 + 1.0 / self.params[0]
        if self.kind in ("loglinear", "truncation"):
            return 1.0
        return None


@dataclass(frozen=True, eq=False)
class GammaVaryingFn:
    """Positive increasing function near 0 together with its auxiliary function.

    The function is stored through its logarithm so that ratios such as
    ``f(h + x rho(h)) / f(h)`` survive values far below the double range.
    """

    log_f: object
    rho: AuxiliaryFunction
    s_max: float = math.inf

    @classmethod
    def from_function(cls, f, rho: AuxiliaryFunction, s_max: float = math.inf) -> "GammaVaryingFn":
        return cls(lambda s: math.log(f(s)), rho, s_max)

    def f(self, s: float) -> float:
        return math.exp(self.log_f(s))

    def in_domain(self, s: float) -> bool:
        return 0.0 < s < self.s_max


@dataclass(frozen=True, eq=False)
class GammaLimitReport:
    x: float
    h: np.ndarray
    ratio: np.ndarray
    diagnostic: np.ndarray
    flags: tuple

    @property
    def decreasing(self) -> bool:
        d = self.diagnostic[np.isfinite(self.diagnostic)]
        return bool(np.all(np.diff(d) < 0))


def _check_grid(h_grid) -> np.ndarray:
    h = np.asarray(h_grid, dtype=float)
    if h.ndim != 1 or h.size == 0 or np.any(h <= 0):
        raise ValueError("grid must be a nonempty sequence of positive numbers")
    return h


def gamma_limit_check(g: GammaVaryingFn, x: float, h_grid) -> GammaLimitReport:
    """``f(h + rho(h) x) / f(h)`` along a grid, with distance to ``e^x``."""
    h = _check_grid(h_grid)
    ratio = np.full(h.size, np.nan)
    flags = []
    for k, hk in enumerate(h):
        s = hk + g.rho(hk) * x
        if not (g.in_domain(hk) and g.in_domain(s)):
            flags.append("domain")
            continue
        ratio[k] = math.exp(g.log_f(s) - g.log_f(hk))
        flags.append("")
    diag = np.abs(ratio / math.exp(x) - 1.0)
    return GammaLimitReport(float(x), h, ratio, diag, tuple(flags))


@dataclass(frozen=True, eq=False)
class FactReport:
    h: np.ndarray
    half_ratio: np.ndarray
    rho_shift_plus: np.ndarray
    rho_shift_minus: np.ndarray
    rho_over_s: np.ndarray
    integral_ratio: np.ndarray
    integral_error: np.ndarray
    underflow_bound: np.ndarray


UNDERFLOW_LOG = -700.0


def _underflow_floor(g: GammaVaryingFn, h: float, log_fh: float) -> float:
    """Largest ``s`` (up to bisection) with ``log f(s) - log f(h) <= UNDERFLOW_LOG``."""
    lo = 1e-300
    if g.log_f(lo) - log_fh > UNDERFLOW_LOG:
        return 0.0
    hi = h
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g.log_f(mid) - log_fh <= UNDERFLOW_LOG:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-12:
            break
    return lo


def integral_ratio(g: GammaVaryingFn, h: float, abs_tol: float = 1e-12):
    """``int_0^h f / (f(h) rho(h))`` with error estimate and neglected underflow bound."""
    log_fh = g.log_f(h)
    floor = _underflow_floor(g, h, log_fh)

    def integrand(s):
        return math.exp(g.log_f(s) - log_fh) if s > 0 else 0.0

    res = adaptive_simpson(integrand, floor, h, abs_tol=abs_tol, rel_tol=1e-10)
    rho_h = g.rho(h)
    # f is increasing, so the neglected piece is at most floor * f(floor) / f(h)
    neglected = floor * math.exp(UNDERFLOW_LOG)
    return res.value / rho_h, res.error / rho_h, neglected / rho_h


def fact_checks(g: GammaVaryingFn, h_grid) -> FactReport:
    h = _check_grid(h_grid)
    n = h.size
    half, plus, minus, ros, integ, ierr, ubound = (np.full(n, np.nan) for _ in range(7))
    for k, hk in enumerate(h):
        log_fh = g.log_f(hk)
        half[k] = math.exp(g.log_f(0.5 * hk) - log_fh)
        r = g.rho(hk)
        ros[k] = r / hk
        plus[k] = g.rho(hk + r) / r
        minus[k] = g.rho(hk - r) / r
        integ[k], ierr[k], ubound[k] = integral_ratio(g, hk)
    return FactReport(h, half, plus, minus, ros, integ, ierr, ubound)


@dataclass(frozen=True)
class RVIndexReport:
    slope: float
    quoted_index: float | None
    closed_form_index: float | None


def rv_index_estimate(rho: AuxiliaryFunction, h_grid) -> RVIndexReport:
    """Least-squares slope of ``ln rho`` against ``ln s`` over the grid."""
    s = _check_grid(h_grid)
    if s.size < 3 or math.log10(s.max() / s.min()) < 3.0 - 1e-9:
        raise ValueError("grid must hold at least 3 points spanning 3 decades")
    y = np.log(np.asarray(rho(s), dtype=float))
    if not np.all(np.isfinite(y)):
        raise DomainError("auxiliary function must be positive on the whole grid")
    slope = float(np.polyfit(np.log(s), y, 1)[0])
    return RVIndexReport(slope, rho.quoted_index(), rho.closed_form_index())


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(u: float) -> float:
    """Euler's Gamma function for ``u > 0`` (Lanczos, g = 7, nine terms)."""
    if not u > 0:
        raise DomainError(f"gamma_function requires u > 0, got {u}")
    if u < 0.5:
        # reflection keeps the series in its accurate range
        return math.pi / (math.sin(math.pi * u) * gamma_function(1.0 - u))
    z = u - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    # combined exponent keeps t^(z+1/2) from overflowing before e^-t cancels it
    return math.sqrt(2.0 * math.pi) * math.exp((z + 0.5) * math.log(t) - t) * acc
