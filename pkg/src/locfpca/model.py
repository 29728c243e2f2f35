"""Process models: eigenvalue decay, coordinate laws, sampling and the R field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import AssumptionViolation, DomainError, NonDifferentiablePointError
from .hilbert import BasisCoeffs

PROFILE_KINDS = ("arithmetic", "exponential")
FAMILY_KINDS = ("gaussian", "laplace", "cubic")


@dataclass(frozen=True)
class EigenProfile:
    """Eigenvalue decay ``scale * k^-(1+param)`` or ``scale * exp(-param * k)``."""

    kind: str
    param: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown eigen profile {self.kind!r}; expected one of {PROFILE_KINDS}")
        if not (self.param > 0 and math.isfinite(self.param)):
            raise ValueError(f"decay parameter must be positive, got {self.param}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive, got {self.scale}")


def eigenvalues(profile: EigenProfile, d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("truncation dimension must be at least 1")
    k = np.arange(1, d + 1, dtype=float)
    if profile.kind == "arithmetic":
        lam = profile.scale * k ** (-(1.0 + profile.param))
    else:
        lam = profile.scale * np.exp(-profile.param * k)
    if np.any(lam <= 0):
        raise ValueError("eigenvalues underflowed to zero; lower d or the decay parameter")
    return lam


@dataclass(frozen=True)
class CoordinateFamily:
    """Law of a single coordinate, parameterized by its eigenvalue ``lam``.

    * ``gaussian``: centered normal with variance ``lam``.
    * ``laplace``: density ``exp(-|x|/lam) / (2 lam)``; variance ``2 lam^2``.
    * ``cubic``: density ``(6/3^6) lam^-2 (27 lam^1.5 - |x|^3)`` on
      ``|x| <= 3 sqrt(lam)``; variance ``2 lam``.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown coordinate family {self.kind!r}; expected one of {FAMILY_KINDS}")

    def support_halfwidth(self, lam: float) -> float:
        return 3.0 * math.sqrt(lam) if self.kind == "cubic" else math.inf

    def variance(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "gaussian":
            return lam
        if self.kind == "laplace":
            return 2.0 * lam**2
        return 2.0 * lam

    def density(self, x, lam: float, order: int = 0):
        """Vectorized ``f``, ``f'`` or ``f''``; kinks get the symmetric formula value."""
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            f = np.exp(-0.5 * x * x / lam) / math.sqrt(2.0 * math.pi * lam)
            if order == 0:
                return f
            if order == 1:
                return -x / lam * f
            return (x * x / lam**2 - 1.0 / lam) * f
        if self.kind == "laplace":
            f = np.exp(-np.abs(x) / lam) / (2.0 * lam)
            if order == 0:
                return f
            if order == 1:
                return -np.sign(x) / lam * f
            return f / lam**2
        c = 3.0 * math.sqrt(lam)
        k = 6.0 / (729.0 * lam * lam)
        ax = np.abs(x)
        inside = ax <= c
        if order == 0:
            val = k * (c**3 - ax**3)
        elif order == 1:
            val = -3.0 * k * x * ax
        else:
            val = -6.0 * k * ax
        return np.where(inside, val, 0.0)

    def log_density(self, x, lam: float):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return -0.5 * x * x / lam - 0.5 * math.log(2.0 * math.pi * lam)
        if self.kind == "laplace":
            return -np.abs(x) / lam - math.log(2.0 * lam)
        with np.errstate(divide="ignore"):
            return np.log(self.density(x, lam))

    def cdf(self, x, lam: float):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return special.ndtr(x / math.sqrt(lam))
        if self.kind == "laplace":
            return np.where(x < 0, 0.5 * np.exp(x / lam), 1.0 - 0.5 * np.exp(-x / lam))
        c = 3.0 * math.sqrt(lam)
        k = 6.0 / (729.0 * lam * lam)
        ax = np.minimum(np.abs(x), c)
        half = k * (c**3 * ax - ax**4 / 4.0)
        return 0.5 + np.sign(x) * half

    def tail_quantile(self, lam: float, mass: float) -> float:
        """Smallest ``q`` with ``P(|X| > q) <= mass``."""
        if self.kind == "gaussian":
            return math.sqrt(lam) * float(-special.ndtri(0.5 * mass))
        if self.kind == "laplace":
            return lam * math.log(1.0 / mass)
        return 3.0 * math.sqrt(lam)

    def draw(self, rng: np.random.Generator, lam: float, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return math.sqrt(lam) * rng.standard_normal(n)
        if self.kind == "laplace":
            return rng.laplace(0.0, lam, n)
        # rejection from the uniform envelope of height f(0); acceptance 3/4
        c = 3.0 * math.sqrt(lam)
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = int((n - filled) / 0.75 * 1.1) + 64
            x = rng.uniform(-c, c, m)
            u = rng.uniform(0.0, 1.0, m)
            keep = x[u <= 1.0 - (np.abs(x) / c) ** 3]
            take = min(keep.size, n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out


def coordinate_density(family: CoordinateFamily, lam: float, x: float, order: int = 0) -> float:
    """Analytic ``f``, ``f'`` or ``f''`` at a single point, refusing kinks."""
    if not lam > 0:
        raise DomainError(f"eigenvalue must be positive, got {lam}")
    if order not in (0, 1, 2):
        raise DomainError(f"derivative order must be 0, 1 or 2, got {order}")
    if order > 0:
        if family.kind == "laplace" and x == 0.0:
            raise NonDifferentiablePointError("the Laplace density has a kink at 0")
        if family.kind == "cubic":
            c = 3.0 * math.sqrt(lam)
            if abs(x) == c:
                raise NonDifferentiablePointError("the cubic density has kinks at the support endpoints")
            if order == 2 and x == 0.0:
                raise NonDifferentiablePointError("second derivative of the cubic density is not taken at 0")
    return float(family.density(x, lam, order))


@dataclass(frozen=True)
class ShiftPoint:
    """The point ``x0`` around which local statistics are computed."""

    coeffs: BasisCoeffs
    profile: str = "explicit"
    params: tuple = ()

    @property
    def dim(self) -> int:
        return self.coeffs.dim

    @property
    def values(self) -> np.ndarray:
        return self.coeffs.coeffs

    @classmethod
    def zero(cls, d: int) -> "ShiftPoint":
        return cls(BasisCoeffs(np.zeros(d)), "zero", ())

    @classmethod
    def power(cls, lambdas, c: float, beta: float) -> "ShiftPoint":
        lam = np.asarray(lambdas, dtype=float)
        return cls(BasisCoeffs(c * lam**beta), "power", (float(c), float(beta)))

    @classmethod
    def explicit(cls, values) -> "ShiftPoint":
        return cls(BasisCoeffs(values), "explicit", tuple(float(v) for v in values))


@dataclass(frozen=True)
class ProcessModel:
    """Independent coordinates ``X_k`` with laws ``family(lambda_k)``."""

    dim: int
    profile: EigenProfile
    family: CoordinateFamily
    shift: ShiftPoint = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("truncation dimension must be at least 1")
        if self.shift is None:
            object.__setattr__(self, "shift", ShiftPoint.zero(self.dim))
        if self.shift.dim != self.dim:
            raise ValueError(f"shift has dimension {self.shift.dim}, model has {self.dim}")

    @property
    def lambdas(self) -> np.ndarray:
        return eigenvalues(self.profile, self.dim)

    @property
    def variances(self) -> np.ndarray:
        return np.asarray(self.family.variance(self.lambdas), dtype=float)

    @property
    def x0(self) -> np.ndarray:
        return self.shift.values

    def with_shift(self, shift: ShiftPoint) -> "ProcessModel":
        return ProcessModel(self.dim, self.profile, self.family, shift)

    def shifted_density(self, k: int, y, order: int = 0):
        """Density of ``X_k - x0_k`` (or its derivatives) at ``y``."""
        lam = self.lambdas[k]
        return self.family.density(np.asarray(y) + self.x0[k], lam, order)


def coordinate_stream(seed: int, replicate: int, coord: int) -> np.random.Generator:
    """Counter-based generator keyed on (seed, replicate, coordinate)."""
    if seed < 0 or replicate < 0 or coord < 0:
        raise ValueError("seed, replicate and coordinate indices must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(coord)))
    return np.random.Generator(np.random.Philox(ss))


def sample_kl(model: ProcessModel, n: int, seed: int, replicate: int = 0) -> np.ndarray:
    """Draw ``n`` independent copies of the truncated process.

    Returns an ``(n, d)`` array whose row ``i`` holds the coordinates of the
    ``i``-th draw. Each coordinate column comes from its own stream, so the
    output depends only on ``(seed, replicate)`` and the model.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    lam = model.lambdas
    out = np.empty((n, model.dim))
    for k in range(model.dim):
        out[:, k] = model.family.draw(coordinate_stream(seed, replicate, k), lam[k], n)
    return out


def sample_sq_distances(model: ProcessModel, n: int, seed: int, replicate: int = 0,
                        center=None) -> np.ndarray:
    """Squared distances ``||X_i - center||^2`` using the streams of :func:`sample_kl`.

    Memory stays at ``O(n)`` whatever the dimension. ``center`` defaults to
    the model's shift point.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    c = model.x0 if center is None else np.asarray(center, dtype=float)
    lam = model.lambdas
    acc = np.zeros(n)
    for k in range(model.dim):
        col = model.family.draw(coordinate_stream(seed, replicate, k), lam[k], n) - c[k]
        acc += col * col
    return acc


@dataclass(frozen=True, eq=False)
class RField:
    """Diagonal ``f''/f`` and score ``f'/f`` of each coordinate at the shift."""

    diag: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float)
        t = np.array(self.tau, dtype=float)
        if d.shape != t.shape or d.ndim != 1:
            raise ValueError("diag and tau must be 1-D arrays of equal length")
        d.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "tau", t)

    @property
    def dim(self) -> int:
        return self.diag.size

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diag[i])
        return float(self.tau[i] * self.tau[j])

    def matrix(self) -> np.ndarray:
        m = np.outer(self.tau, self.tau)
        np.fill_diagonal(m, self.diag)
        return m


def r_field(model: ProcessModel) -> RField:
    lam = model.lambdas
    x = model.x0
    if model.family.kind == "gaussian":
        return RField(diag=(x / lam) ** 2 - 1.0 / lam, tau=-x / lam)
    diag = np.empty(model.dim)
    tau = np.empty(model.dim)
    for i in range(model.dim):
        f0 = coordinate_density(model.family, lam[i], x[i], 0)
        if f0 <= 0.0:
            raise AssumptionViolation(f"coordinate {i} has zero density at the shift point")
        tau[i] = coordinate_density(model.family, lam[i], x[i], 1) / f0
        diag[i] = coordinate_density(model.family, lam[i], x[i], 2) / f0
    return RField(diag=diag, tau=tau)


@dataclass(frozen=True, eq=False)
class RClassification:
    """Truncation-level evidence on whether the R field defines a bounded operator.

    ``label`` is one of ``hilbert-schmidt-consistent``, ``bounded-consistent``
    or ``unbounded-trend``.
    """

    sum_diag_sq: np.ndarray
    sum_tau_sq: np.ndarray
    sup_diag: float
    diag_tail_growth: float
    tau_tail_growth: float
    sup_tail_growth: float
    label: str
    flags: tuple = field(default_factory=tuple)


TAIL_CONVERGENCE_RATIO = 0.1
SHORT_TRUNCATION = 8


def _tail_growth(increments: np.ndarray) -> float:
    q = max(1, increments.size // 4)
    first = float(np.sum(increments[:q]))
    last = float(np.sum(increments[-q:]))
    if first == 0.0:
        return 0.0 if last == 0.0 else math.inf
    return last / first


def classify_R(field_: RField) -> RClassification:
    """Label the R field from partial sums of ``R_ii^2`` and ``tau_i^2``.

    The tail-growth diagnostic divides the summed increments of the last
    quarter of indices by those of the first quarter. A series is called
    convergent when that ratio is below 0.1. The sup condition compares the
    largest ``|R_ii|`` of the last quarter to that of the first quarter.
    """
    if field_.dim < 2:
        raise ValueError("classification needs at least two coordinates")
    d2 = field_.diag**2
    t2 = field_.tau**2
    absd = np.abs(field_.diag)
    g_diag = _tail_growth(d2)
    g_tau = _tail_growth(t2)
    q = max(1, field_.dim // 4)
    head = float(absd[:q].max())
    tail = float(absd[-q:].max())
    g_sup = 0.0 if head == tail == 0.0 else (math.inf if head == 0.0 else tail / head)
    flags = []
    if field_.dim < SHORT_TRUNCATION:
        # every finite field is Hilbert-Schmidt; no trend can be read
        label = "hilbert-schmidt-consistent"
        flags.append("too-short-for-trend")
    elif g_diag < TAIL_CONVERGENCE_RATIO and g_tau < TAIL_CONVERGENCE_RATIO:
        label = "hilbert-schmidt-consistent"
    elif g_tau < TAIL_CONVERGENCE_RATIO and g_sup <= 1.0:
        label = "bounded-consistent"
    else:
        label = "unbounded-trend"
    return RClassification(
        sum_diag_sq=np.cumsum(d2),
        sum_tau_sq=np.cumsum(t2),
        sup_diag=float(absd.max()),
        diag_tail_growth=g_diag,
        tau_tail_growth=g_tau,
        sup_tail_growth=g_sup,
        label=label,
        flags=tuple(flags),
    )


@dataclass(frozen=True, eq=False)
class ACoefficients:
    grid_sup: np.ndarray
    closed_form: np.ndarray | None
    v0_radius: float
    grid_points: int


def a_coefficients(model: ProcessModel, v0_radius: float, grid_points: int = 2001) -> ACoefficients:
    """Relative oscillation of each coordinate density over a neighbourhood of the shift.

    ``a_i = max_t |f_i(x0_i + t) - f_i(x0_i)| / f_i(x0_i)`` with ``t`` on a
    uniform grid of ``[-v0_radius, v0_radius]``.
    """
    if not v0_radius > 0:
        raise ValueError("neighbourhood radius must be positive")
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    lam = model.lambdas
    x = model.x0
    t = np.linspace(-v0_radius, v0_radius, grid_points)
    out = np.empty(model.dim)
    for i in range(model.dim):
        f0 = float(model.family.density(x[i], lam[i]))
        if f0 <= 0.0:
            raise AssumptionViolation(f"coordinate {i} has zero density at the shift point")
        out[i] = np.max(np.abs(model.family.density(x[i] + t, lam[i]) - f0)) / f0
    closed = None
    if model.family.kind == "gaussian":
        closed = np.abs(np.expm1(x**2 / (2.0 * lam)))
    return ACoefficients(out, closed, float(v0_radius), int(grid_points))
