"""Quadrature building blocks: adaptive Simpson, Gauss-Legendre, sphere rules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int


def adaptive_simpson(f, a: float, b: float, abs_tol: float = 1e-12, rel_tol: float = 0.0,
                     max_depth: int = 60, max_evaluations: int = 2_000_000,
                     strict: bool = True) -> QuadResult:
    """Integrate a scalar function on ``[a, b]`` by adaptive Simpson.

    The local acceptance test is the classical one, ``|S2 - S1| <= 15 tol``,
    with Richardson correction. ``tol`` is split in half at each bisection.
    ``rel_tol`` is applied against a first coarse estimate of the integral.

    When ``strict`` is true, running out of depth or evaluations raises
    :class:`QuadratureError`; otherwise the partial result is returned with
    its accumulated error estimate.
    """
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    def g(x):
        return float(f(x))

    fa, fm, fb = g(a), g(0.5 * (a + b)), g(b)
    nevals = 3
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    tol = max(abs_tol, rel_tol * abs(whole))
    total = 0.0
    err = 0.0
    failed = False
    # explicit stack: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, t, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = g(lm), g(rm)
        nevals += 2
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - s
        if abs(delta) <= 15.0 * t or depth >= max_depth or nevals >= max_evaluations:
            if abs(delta) > 15.0 * t:
                failed = True
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * t, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * t, depth + 1))
    if failed and strict:
        raise QuadratureError(
            f"adaptive Simpson did not reach tolerance on [{a}, {b}]", residual=err
        )
    return QuadResult(sign * total, err, nevals)


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_gauss_legendre(edges, n: int):
    """Gauss-Legendre rule of order ``n`` on each panel ``[edges[k], edges[k+1]]``."""
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(n, lo, hi)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere in ``R^m``."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


@lru_cache(maxsize=32)
def _sphere_rule(m: int, n: int):
    if m == 1:
        dirs = np.array([[1.0], [-1.0]])
        w = np.array([1.0, 1.0])
    elif m == 2:
        # trapezoid on a periodic integrand
        th = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        dirs = np.column_stack([np.cos(th), np.sin(th)])
        w = np.full(th.size, math.pi / n)
    elif m == 3:
        phi, wphi = gauss_legendre(n, 0.0, math.pi)
        th = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        P, T = np.meshgrid(phi, th, indexing="ij")
        dirs = np.column_stack([
            np.cos(P).ravel(),
            (np.sin(P) * np.cos(T)).ravel(),
            (np.sin(P) * np.sin(T)).ravel(),
        ])
        w = np.outer(wphi * np.sin(phi), np.full(th.size, math.pi / n)).ravel()
    elif m == 4:
        p1, w1 = gauss_legendre(n, 0.0, math.pi)
        p2, w2 = gauss_legendre(n, 0.0, math.pi)
        th = 2.0 * math.pi * (np.arange(2 * n) + 0.5) / (2 * n)
        A, B, T = np.meshgrid(p1, p2, th, indexing="ij")
        dirs = np.column_stack([
            np.cos(A).ravel(),
            (np.sin(A) * np.cos(B)).ravel(),
            (np.sin(A) * np.sin(B) * np.cos(T)).ravel(),
            (np.sin(A) * np.sin(B) * np.sin(T)).ravel(),
        ])
        w = (
            (w1 * np.sin(p1) ** 2)[:, None, None]
            * (w2 * np.sin(p2))[None, :, None]
            * np.full(th.size, math.pi / n)[None, None, :]
        ).ravel()
    else:
        raise ValueError(f"sphere rules are provided for dimensions 1 to 4, got {m}")
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def sphere_rule(m: int, n: int = 64):
    """Directions and weights integrating over the unit sphere of ``R^m``.

    Polar angles use ``n``-point Gauss-Legendre, the azimuth uses ``2n``
    equispaced points (exponentially accurate for periodic integrands).
    The weights sum to the surface measure of the sphere.
    """
    return _sphere_rule(int(m), int(n))
