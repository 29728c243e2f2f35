"""Independent numerical oracles built on polar quadrature of product densities.

Every coordinate of ``Y = X - x0`` has density ``g_k(y) = f_k(y + x0_k)``.
The density of ``||Y||`` restricted to a set of at most four coordinates is
``r^(m-1)`` times the integral of the product density over the unit sphere,
which is computed with the rules of :mod:`locfpca.quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError
from .gamma_class import AuxiliaryFunction, GammaVaryingFn, gamma_function
from .kernels import Kernel
from .model import ProcessModel, coordinate_stream, r_field, sample_sq_distances
from .quadrature import adaptive_simpson, composite_gauss_legendre, gauss_legendre, sphere_rule

QUADRATURE = "quadrature"
MC = "mc"
CLOSED_FORM = "closed-form"

MAX_POLAR_DIM = 4
DEFAULT_ANGULAR = {1: 1, 2: 128, 3: 96, 4: 40}
TAIL_MASS = 1e-7
_CHUNK_ELEMENTS = 2_000_000


def _kept(model: ProcessModel, excluded) -> list:
    excluded = tuple(sorted(set(int(e) for e in excluded)))
    for e in excluded:
        if not 0 <= e < model.dim:
            raise IndexError(f"excluded index {e} out of range")
    kept = [k for k in range(model.dim) if k not in excluded]
    if not kept:
        raise ValueError("no coordinates left after exclusion")
    return kept


def _log_product(model: ProcessModel, idx, Y: np.ndarray) -> np.ndarray:
    lam, x0 = model.lambdas, model.x0
    out = np.zeros(Y.shape[:-1])
    with np.errstate(divide="ignore"):
        for a, k in enumerate(idx):
            out = out + model.family.log_density(Y[..., a] + x0[k], lam[k])
    return out


def radius_bound(model: ProcessModel, excluded=(), mass: float = TAIL_MASS) -> float:
    """Radius holding all but ``mass`` of the law of ``||Y||`` on the kept coordinates."""
    idx = _kept(model, excluded)
    lam, x0 = model.lambdas, model.x0
    q = np.array([model.family.tail_quantile(lam[k], mass / len(idx)) for k in idx])
    return float(np.sqrt(np.sum((np.abs(x0[idx]) + q) ** 2)))


def polar_density(model: ProcessModel, excluded, r, n_ang: int | None = None) -> np.ndarray:
    """Density of ``||Y||`` over the kept coordinates, by quadrature on spheres."""
    idx = _kept(model, excluded)
    m = len(idx)
    if m > MAX_POLAR_DIM:
        raise ValueError(f"polar quadrature handles up to {MAX_POLAR_DIM} coordinates, got {m}")
    dirs, w = sphere_rule(m, n_ang or DEFAULT_ANGULAR[m])
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(r.size)
    chunk = max(1, _CHUNK_ELEMENTS // (dirs.shape[0] * m))
    for s in range(0, r.size, chunk):
        rr = r[s:s + chunk]
        P = np.exp(_log_product(model, idx, rr[:, None, None] * dirs[None, :, :]))
        out[s:s + chunk] = rr ** (m - 1) * (P @ w)
    return out


def _kde(samples: np.ndarray, bandwidth: float, r: np.ndarray) -> np.ndarray:
    # gaussian kernel reflected at 0 so no mass leaks below the origin
    out = np.empty(r.size)
    c = 1.0 / (samples.size * bandwidth * math.sqrt(2.0 * math.pi))
    step = max(1, _CHUNK_ELEMENTS // samples.size)
    for s in range(0, r.size, step):
        rr = r[s:s + step, None]
        a = np.exp(-0.5 * ((rr - samples) / bandwidth) ** 2)
        b = np.exp(-0.5 * ((rr + samples) / bandwidth) ** 2)
        out[s:s + step] = c * np.sum(a + b, axis=1)
    return out


@dataclass(frozen=True, eq=False)
class NormDensity:
    """Density of ``||Y||`` on the coordinates not in ``excluded``.

    ``method`` is ``"quadrature"`` (exact polar quadrature, evaluable
    anywhere) or ``"mc"`` (reflected kernel density estimate with the
    reported ``bandwidth``).
    """

    model: ProcessModel
    excluded: tuple
    r: np.ndarray
    density: np.ndarray
    method: str
    r_max: float
    n_ang: int = 0
    bandwidth: float | None = None
    samples: np.ndarray | None = None

    def __call__(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.method == QUADRATURE:
            return polar_density(self.model, self.excluded, r, self.n_ang)
        return _kde(self.samples, self.bandwidth, r)

    def mass(self, panels: int = 32, order: int = 24) -> float:
        x, w = composite_gauss_legendre(np.linspace(0.0, self.r_max, panels + 1), order)
        return float(w @ self(x))


def norm_density(model: ProcessModel, excluded=(), r_grid=None, n_ang: int | None = None,
                 method: str = "auto", mc_n: int = 200_000, seed: int = 0) -> NormDensity:
    idx = _kept(model, excluded)
    excluded = tuple(k for k in range(model.dim) if k not in idx)
    m = len(idx)
    if method == "auto":
        method = QUADRATURE if m <= MAX_POLAR_DIM else MC
    r_max = radius_bound(model, excluded)
    r = np.linspace(0.0, r_max, 201) if r_grid is None else np.asarray(r_grid, dtype=float)
    if method == QUADRATURE:
        n_ang = n_ang or DEFAULT_ANGULAR[m]
        dens = polar_density(model, excluded, r, n_ang)
        return NormDensity(model, excluded, r, dens, QUADRATURE, r_max, n_ang)
    if method != MC:
        raise ValueError(f"unknown method {method!r}")
    lam, x0 = model.lambdas, model.x0
    acc = np.zeros(mc_n)
    for k in idx:
        col = model.family.draw(coordinate_stream(seed, 0, k), lam[k], mc_n) - x0[k]
        acc += col * col
    samples = np.sqrt(acc)
    bw = 1.06 * float(np.std(samples)) * mc_n ** (-0.2)
    dens = _kde(samples, bw, r)
    return NormDensity(model, excluded, r, dens, MC, r_max, 0, bw, samples)


@lru_cache(maxsize=64)
def _rest_interpolant(model: ProcessModel, excluded: tuple, r_top: float, n_ang: int, n: int = 4097):
    grid = np.linspace(0.0, r_top, n)
    vals = polar_density(model, excluded, grid, n_ang)
    spline = CubicSpline(grid, vals)

    def f(r):
        r = np.asarray(r, dtype=float)
        out = spline(np.clip(r, 0.0, r_top))
        return np.where((r >= 0.0) & (r <= r_top), np.maximum(out, 0.0), 0.0)

    return f


def rest_density(model: ProcessModel, excluded, n_ang: int | None = None):
    """Interpolated density of the norm over the coordinates outside ``excluded``.

    Tabulated on a fine grid up to the full-model radius bound, then splined.
    """
    idx = _kept(model, excluded)
    excluded = tuple(k for k in range(model.dim) if k not in idx)
    return _rest_interpolant(model, excluded, radius_bound(model),
                             n_ang or DEFAULT_ANGULAR[len(idx)])


def _g(model: ProcessModel, k: int, y):
    return model.shifted_density(k, y)


def dens_d1(model: ProcessModel, i: int, u, v, f_rest=None):
    """Joint density of ``(<Y, e_i>, ||Y||)`` at ``(u, v)``; zero unless ``v > |u|``."""
    f_rest = f_rest or rest_density(model, (i,))
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    inside = v > np.abs(u)
    a = np.sqrt(np.where(inside, v * v - u * u, 1.0))
    val = np.where(inside, v / a * _g(model, i, u) * f_rest(a), 0.0)
    return val if val.ndim else float(val)


def d1_marginal(model: ProcessModel, i: int, v, n_phi: int = 256, f_rest=None) -> np.ndarray:
    """Integral of :func:`dens_d1` over ``u``, with ``u = v sin(phi)``."""
    f_rest = f_rest or rest_density(model, (i,))
    phi, w = gauss_legendre(n_phi, -0.5 * math.pi, 0.5 * math.pi)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    vv = v[:, None]
    vals = vv * _g(model, i, vv * np.sin(phi)) * f_rest(vv * np.cos(phi))
    return vals @ w


def d1_conditional_second_moment(model: ProcessModel, i: int, v, n_phi: int = 256,
                                 f_rest=None) -> np.ndarray:
    """``E[<Y, e_i>^2 | ||Y|| = v]`` from a slice of :func:`dens_d1`."""
    f_rest = f_rest or rest_density(model, (i,))
    phi, w = gauss_legendre(n_phi, -0.5 * math.pi, 0.5 * math.pi)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    vv = v[:, None]
    base = vv * _g(model, i, vv * np.sin(phi)) * f_rest(vv * np.cos(phi))
    return ((base * (vv * np.sin(phi)) ** 2) @ w) / (base @ w)


def d1_total_mass(model: ProcessModel, i: int, panels: int = 48, order: int = 24,
                  n_phi: int = 192) -> float:
    f_rest = rest_density(model, (i,))
    v, wv = composite_gauss_legendre(np.linspace(0.0, radius_bound(model), panels + 1), order)
    return float(wv @ d1_marginal(model, i, v, n_phi, f_rest))


def dens_d3(model: ProcessModel, i: int, j: int, t, u, v, f_rest=None):
    """Joint density of ``(<Y, e_i>, <Y, e_j>, ||Y||)``; zero unless ``v^2 > t^2 + u^2``."""
    if i == j:
        raise ValueError("indices must differ")
    f_rest = f_rest or rest_density(model, (i, j))
    t, u, v = (np.asarray(a, dtype=float) for a in (t, u, v))
    q = v * v - t * t - u * u
    inside = q > 0
    a = np.sqrt(np.where(inside, q, 1.0))
    val = np.where(inside, v / a * _g(model, i, t) * _g(model, j, u) * f_rest(a), 0.0)
    return val if val.ndim else float(val)


def fourth_density(model: ProcessModel, i: int, j: int, v, n: int = 128) -> np.ndarray:
    """Norm density written with two coordinates in polar form.

    ``v^2 int_0^{2 pi} int_0^{pi/2} sin(psi) g_i(v sin psi cos th)
    g_j(v sin psi sin th) f_rest(v cos psi) dpsi dth``.
    """
    f_rest = rest_density(model, (i, j))
    psi, wp = gauss_legendre(n, 0.0, 0.5 * math.pi)
    th = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
    wt = math.pi / n
    P, T = np.meshgrid(psi, th, indexing="ij")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty(v.size)
    for k, vk in enumerate(v):
        vals = (np.sin(P) * _g(model, i, vk * np.sin(P) * np.cos(T))
                * _g(model, j, vk * np.sin(P) * np.sin(T)) * f_rest(vk * np.cos(P)))
        out[k] = vk * vk * wt * float(wp @ vals.sum(axis=1))
    return out


def d3_marginal(model: ProcessModel, i: int, j: int, v, n: int = 128) -> np.ndarray:
    """Integral of :func:`dens_d3` over ``(t, u)`` by nested sine substitutions.

    ``t = v sin(eta)`` and, for fixed ``t``, ``u = sqrt(v^2 - t^2) sin(phi)``.
    """
    f_rest = rest_density(model, (i, j))
    x, w = gauss_legendre(n, -0.5 * math.pi, 0.5 * math.pi)
    E, PH = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty(v.size)
    for k, vk in enumerate(v):
        t = vk * np.sin(E)
        a = vk * np.cos(E)
        vals = (vk * a * _g(model, i, t) * _g(model, j, a * np.sin(PH))
                * f_rest(a * np.cos(PH)))
        out[k] = float(np.sum(W * vals))
    return out


def d3_total_mass(model: ProcessModel, i: int, j: int, panels: int = 24, order: int = 16,
                  n: int = 64) -> float:
    v, wv = composite_gauss_legendre(np.linspace(0.0, radius_bound(model), panels + 1), order)
    return float(wv @ d3_marginal(model, i, j, v, n))


# ---------------------------------------------------------------------------
# radial expectations E[phi(||Y||) ; ||Y|| <= h]


@dataclass(frozen=True, eq=False)
class RadialEstimate:
    values: np.ndarray
    stderr: np.ndarray
    F: float
    F_stderr: float
    method: str
    detail: str = ""


def radial_rule(model: ProcessModel, h: float, panels: int = 8, order: int = 16,
                n_ang: int | None = None):
    """Nodes in ``[0, h]`` and weights already multiplied by the norm density."""
    r, w = composite_gauss_legendre(np.linspace(0.0, h, panels + 1), order)
    return r, w * polar_density(model, (), r, n_ang)


def _gaussian_tilt(model: ProcessModel, h: float) -> float:
    lam, x0 = model.lambdas, model.x0

    def mean_sq(theta):
        c = 1.0 + 2.0 * theta * lam
        return float(np.sum(lam / c + x0**2 / c**2))

    if mean_sq(0.0) <= h * h:
        return 0.0
    hi = 1.0
    while mean_sq(hi) > h * h:
        hi *= 4.0
    return brentq(lambda t: mean_sq(t) - h * h, 0.0, hi, xtol=1e-14, rtol=1e-14)


def tilted_sq_distances(model: ProcessModel, h: float, n: int, seed: int, replicate: int = 0):
    """Squared distances drawn under the exponential tilt ``exp(-theta ||Y||^2)``.

    Returns ``(sq, log_weight)`` where ``exp(log_weight)`` is the likelihood
    ratio of the original law to the tilted one. Gaussian models only.
    """
    if model.family.kind != "gaussian":
        raise ValueError("exponential tilting is implemented for gaussian coordinates only")
    lam, x0 = model.lambdas, model.x0
    theta = _gaussian_tilt(model, h)
    c = 1.0 + 2.0 * theta * lam
    mean = -x0 / c
    sd = np.sqrt(lam / c)
    sq = np.zeros(n)
    for k in range(model.dim):
        z = coordinate_stream(seed, replicate, k).standard_normal(n)
        y = mean[k] + sd[k] * z
        sq += y * y
    log_m = float(np.sum(-0.5 * np.log(c) - theta * x0**2 / c))
    return sq, log_m + theta * sq


def radial_expectations(model: ProcessModel, h: float, funcs, method: str = "auto",
                        n: int = 200_000, seed: int = 0, replicate: int = 0,
                        n_ang: int | None = None) -> RadialEstimate:
    """``E[phi(||Y||) 1{||Y|| <= h}]`` for each ``phi`` in ``funcs``, plus ``F(h)``.

    ``method`` is ``"quadrature"`` (model dimension at most 4), ``"tilted"``
    (importance sampling, gaussian models), ``"mc"`` or ``"auto"``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if method == "auto":
        if model.dim <= MAX_POLAR_DIM:
            method = QUADRATURE
        elif model.family.kind == "gaussian":
            method = "tilted"
        else:
            method = MC
    k = len(funcs)
    if method == QUADRATURE:
        if model.dim > MAX_POLAR_DIM:
            raise ValueError(f"quadrature needs dimension <= {MAX_POLAR_DIM}")
        r, wf = radial_rule(model, h, n_ang=n_ang)
        vals = np.array([float(wf @ np.asarray(fn(r), dtype=float)) for fn in funcs])
        return RadialEstimate(vals, np.zeros(k), float(wf.sum()), 0.0, QUADRATURE)
    if method == "tilted":
        sq, logw = tilted_sq_distances(model, h, n, seed, replicate)
        inside = sq <= h * h
        w = np.where(inside, np.exp(np.where(inside, logw, 0.0)), 0.0)
        detail = "tilted"
    elif method == MC:
        sq = sample_sq_distances(model, n, seed, replicate)
        inside = sq <= h * h
        w = inside.astype(float)
        detail = "plain"
    else:
        raise ValueError(f"unknown method {method!r}")
    r = np.sqrt(sq)
    vals, errs = np.empty(k), np.empty(k)
    for a, fn in enumerate(funcs):
        term = w * np.where(inside, np.asarray(fn(np.minimum(r, h)), dtype=float), 0.0)
        vals[a] = term.mean()
        errs[a] = term.std(ddof=1) / math.sqrt(n)
    return RadialEstimate(vals, errs, float(w.mean()), float(w.std(ddof=1) / math.sqrt(n)),
                          MC, detail)


def norm_cdf(model: ProcessModel, h: float, method: str = "auto", n: int = 200_000,
             seed: int = 0) -> RadialEstimate:
    return radial_expectations(model, h, [], method=method, n=n, seed=seed)


def polar_cell_moments(model: ProcessModel, h: float, weight, n_r: int = 48,
                       n_ang: int | None = None) -> np.ndarray:
    """``E[weight(||Y||) Y Y^T ; ||Y|| <= h]`` by radial Gauss-Legendre times a sphere rule."""
    d = model.dim
    if d > MAX_POLAR_DIM:
        raise ValueError(f"cell quadrature needs dimension <= {MAX_POLAR_DIM}")
    idx = list(range(d))
    dirs, w = sphere_rule(d, n_ang or DEFAULT_ANGULAR[d])
    panels = 4
    r, wr = composite_gauss_legendre(np.linspace(0.0, h, panels + 1), max(2, n_r // panels))
    coef = wr * np.asarray(weight(r), dtype=float) * r ** (d + 1)
    q = np.zeros(dirs.shape[0])
    chunk = max(1, _CHUNK_ELEMENTS // (dirs.shape[0] * d))
    for s in range(0, r.size, chunk):
        rr = r[s:s + chunk]
        P = np.exp(_log_product(model, idx, rr[:, None, None] * dirs[None, :, :]))
        q += coef[s:s + chunk] @ P
    q *= w
    return (dirs * q[:, None]).T @ dirs


# ---------------------------------------------------------------------------
# checks of limit identities


@dataclass(frozen=True, eq=False)
class PrelReport:
    p: int
    s: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    error: np.ndarray

    @property
    def monotone_toward_one(self) -> bool:
        dev = np.abs(self.ratio - 1.0)
        return bool(np.all(np.diff(dev) < 0))


def prel_prefactor(p: int) -> float:
    return 2.0 ** ((p - 1) / 2.0) * gamma_function((p + 1) / 2.0)


def prel_check(g: GammaVaryingFn, p: int, s_grid, abs_tol: float = 1e-14) -> PrelReport:
    """Compare ``int_0^1 t^p (1-t^2)^(-1/2) f(s sqrt(1-t^2)) dt`` with its Gamma-class equivalent.

    Both sides are divided by ``f(s)``. With ``t = sin(phi)`` the integral is
    ``int_0^{pi/2} sin(phi)^p f(s cos(phi)) dphi``, which has no endpoint
    singularity. The integrand is concentrated near ``phi = 0`` on a scale
    ``sqrt(2 rho(s) / s)``, so the interval is pre-split on that scale.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    s = np.asarray(s_grid, dtype=float)
    lhs, rhs, err = (np.empty(s.size) for _ in range(3))
    for k, sk in enumerate(s):
        log_fs = g.log_f(sk)
        rho = g.rho(sk)

        def integrand(phi, sk=sk, log_fs=log_fs):
            arg = sk * math.cos(phi)
            if arg <= 0.0:
                return 0.0
            return math.sin(phi) ** p * math.exp(g.log_f(arg) - log_fs)

        width = math.sqrt(2.0 * rho / sk)
        edges = [0.0] + [c * width for c in (0.25, 0.5, 1, 2, 4, 8, 16, 32) if c * width < 0.5 * math.pi]
        edges.append(0.5 * math.pi)
        total = e = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            res = adaptive_simpson(integrand, lo, hi, abs_tol=abs_tol, rel_tol=1e-10)
            total += res.value
            e += res.error
        lhs[k] = total
        err[k] = e
        rhs[k] = prel_prefactor(p) * (rho / sk) ** ((p + 1) / 2.0)
    return PrelReport(int(p), s, lhs, rhs, lhs / rhs, err)


@dataclass(frozen=True, eq=False)
class LoundgeReport:
    v: np.ndarray
    lhs: np.ndarray
    rhs_one: np.ndarray
    rhs_two: np.ndarray
    ratio_one: np.ndarray
    ratio_two: np.ndarray
    argument_convention: str = "coordinate densities of X - x0 evaluated at 0"


def loundge_check(model: ProcessModel, i: int, v_grid, rho: AuxiliaryFunction | None = None,
                  j: int | None = None) -> LoundgeReport:
    """Norm density against the one- and two-coordinate Gamma-class forms."""
    if model.dim > MAX_POLAR_DIM:
        raise ValueError(f"quadrature path needs dimension <= {MAX_POLAR_DIM}")
    rho = rho or AuxiliaryFunction.truncation(model.dim)
    v = np.asarray(v_grid, dtype=float)
    lhs = polar_density(model, (), v)
    gi0 = float(_g(model, i, 0.0))
    rv = np.asarray(rho(v), dtype=float)
    rhs1 = gamma_function(0.5) * np.sqrt(2.0 * v * rv) * gi0 * polar_density(model, (i,), v)
    if j is None:
        j = (i + 1) % model.dim
    if model.dim >= 3:
        gj0 = float(_g(model, j, 0.0))
        rhs2 = 2.0 * math.pi * gi0 * gj0 * v * rv * polar_density(model, (i, j), v)
    else:
        rhs2 = np.full(v.size, np.nan)
    return LoundgeReport(v, lhs, rhs1, rhs2, lhs / rhs1, lhs / rhs2)


@dataclass(frozen=True, eq=False)
class T1T2Report:
    h: np.ndarray
    lhs_ii: np.ndarray
    rhs_ii: np.ndarray
    lhs_ij: np.ndarray
    rhs_ij: np.ndarray
    v: np.ndarray
    conditional_ratio: np.ndarray

    @property
    def ratio_ii(self):
        return self.lhs_ii / self.rhs_ii

    @property
    def ratio_ij(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.lhs_ij / self.rhs_ij


def vw_integrals(model: ProcessModel, kernel: Kernel, h: float, rho: AuxiliaryFunction,
                 method: str = "auto", n: int = 200_000, seed: int = 0) -> RadialEstimate:
    """``v(h) = E[K t rho(t)]`` and ``w(h) = E[K t^2 rho(t)^2]`` with ``t = ||Y||``."""
    def v_fn(r):
        return kernel(r / h) * r * _safe_rho(rho, r)

    def w_fn(r):
        return kernel(r / h) * (r * _safe_rho(rho, r)) ** 2

    return radial_expectations(model, h, [v_fn, w_fn], method=method, n=n, seed=seed)


def _safe_rho(rho: AuxiliaryFunction, r):
    r = np.asarray(r, dtype=float)
    pos = r > 0
    out = np.zeros_like(r)
    if np.any(pos):
        out[pos] = rho(r[pos])
    return out


def t1_t2_check(model: ProcessModel, kernel: Kernel, h_grid, i: int, j: int,
                rho: AuxiliaryFunction | None = None, v_grid=(0.4, 0.2, 0.1)) -> T1T2Report:
    """Diagonal and off-diagonal cells of the local covariance against ``v`` and ``w``."""
    if model.dim > MAX_POLAR_DIM:
        raise ValueError(f"quadrature path needs dimension <= {MAX_POLAR_DIM}")
    rho = rho or AuxiliaryFunction.truncation(model.dim)
    field = r_field(model)
    h = np.asarray(h_grid, dtype=float)
    lii, rii, lij, rij = (np.empty(h.size) for _ in range(4))
    for k, hk in enumerate(h):
        cells = polar_cell_moments(model, hk, lambda r, hk=hk: kernel(r / hk))
        est = vw_integrals(model, kernel, hk, rho, method=QUADRATURE)
        v_h, w_h = est.values
        lii[k] = cells[i, i]
        rii[k] = v_h + field.entry(i, i) * w_h
        lij[k] = cells[i, j]
        rij[k] = field.entry(i, j) * w_h
    vg = np.asarray(v_grid, dtype=float)
    cond = d1_conditional_second_moment(model, i, vg) / (vg * np.asarray(rho(vg)))
    return T1T2Report(h, lii, rii, lij, rij, vg, cond)


@dataclass(frozen=True, eq=False)
class FreeReport:
    m: int
    p: int
    h: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    stderr: np.ndarray
    F: np.ndarray
    method: str
    detail: str = ""


def free_moment_check(model: ProcessModel, kernel: Kernel, m: int, p: int, h_grid,
                      method: str = "auto", n: int = 200_000, seed: int = 0) -> FreeReport:
    """``E[K^m(||Y||/h) ||Y||^p]`` against ``K(1)^m h^p F(h)``.

    Both sides come from the same quadrature nodes or the same weighted
    draws, so for the uniform kernel the ratio cannot exceed 1.
    """
    if m < 1 or p < 0:
        raise ValueError("need m >= 1 and p >= 0")
    h = np.asarray(h_grid, dtype=float)
    lhs, rhs, ratio, se, F = (np.empty(h.size) for _ in range(5))
    used, detail = QUADRATURE, ""
    for k, hk in enumerate(h):
        est = radial_expectations(
            model, hk, [lambda r, hk=hk: kernel(r / hk) ** m * r**p],
            method=method, n=n, seed=seed, replicate=k,
        )
        used, detail = est.method, est.detail
        F[k] = est.F
        lhs[k] = est.values[0]
        rhs[k] = kernel.at_one**m * hk**p * est.F
        if est.F <= 0.0:
            raise DomainError(f"F(h) underflowed at h={hk}")
        ratio[k] = lhs[k] / rhs[k]
        if est.method == MC:
            # ignores the positive correlation of the two means, so it is conservative
            se[k] = ratio[k] * math.hypot(est.stderr[0] / lhs[k], est.F_stderr / est.F)
        else:
            se[k] = 0.0
    return FreeReport(int(m), int(p), h, lhs, rhs, ratio, se, F, used, detail)
