"""Acceptance criteria with pinned tolerances.

Each test records one line ``PASS|FAIL  <id>  <summary>`` that is printed in
the terminal summary, then asserts. Companion lines (``10b``, ``11b``,
``16b``) and ``info`` lines carry alternative readings and context.
"""

import math
import time

import numpy as np
from scipy import stats

from conftest import ACCEPTANCE_LINES
from locfpca.gamma_class import AuxiliaryFunction, fact_checks, gamma_limit_check
from locfpca.hilbert import SymOperator, operator_norms
from locfpca.kernels import Kernel
from locfpca.localcov import (
    covop_mse,
    eigen_rates,
    gorillaz_fixture,
    kt_ratio,
    lco_cell_prediction,
    naive_bound_check,
    theoretical_local_cov,
    v_w_sequences,
)
from locfpca.model import (
    CoordinateFamily,
    EigenProfile,
    ProcessModel,
    ShiftPoint,
    coordinate_density,
    coordinate_stream,
    eigenvalues,
    r_field,
    sample_sq_distances,
)
from locfpca.oracles import (
    d1_marginal,
    d1_total_mass,
    free_moment_check,
    norm_density,
    prel_check,
    radius_bound,
)
from locfpca.quadrature import composite_gauss_legendre
from locfpca.smallball import (
    SmallBallForm,
    juliet_ingredients,
    pb1_shape_check,
    pb2_desk_check,
)
from locfpca.spectral import char_number_distance

ARITH1 = EigenProfile("arithmetic", 1.0)


def record(cid, passed, detail, runtime=None, limit=None):
    if runtime is None:
        tail = ""
    elif isinstance(limit, str):
        tail = f"  [{runtime:.2f}s / runtime {limit}]"
    else:
        tail = f"  [{runtime:.2f}s / limit {limit}s]"
    line = f"{'PASS' if passed else 'FAIL'}  {cid:<4} {detail}{tail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def info(cid, detail):
    line = f"info  {cid:<4} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def shifted_d3():
    lam = eigenvalues(ARITH1, 3)
    return ProcessModel(3, ARITH1, CoordinateFamily("gaussian"), ShiftPoint.power(lam, 0.5, 1.0))


def fmt(a):
    return "[" + ", ".join(f"{x:.4g}" for x in np.atleast_1d(a)) + "]"


# 1 -------------------------------------------------------------------------
def test_c01_norm_chain():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_chain = worst_hs = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 9))
        a = rng.standard_normal((d, d))
        m = (a + a.T) / 2
        n = operator_norms(SymOperator(m))
        worst_chain = max(worst_chain, n.sup_norm - n.hs_norm, n.hs_norm - n.trace_norm)
        entry_hs = math.sqrt(float(np.sum(m * m)))
        worst_hs = max(worst_hs, abs(n.hs_norm - entry_hs) / entry_hs)
    rt = time.perf_counter() - t0
    ok = worst_chain <= 1e-10 and worst_hs <= 1e-10 and rt < 5
    assert record("1", ok, f"norm chain: max violation {worst_chain:.2e} (<=1e-10), "
                  f"HS eigen/entry rel diff {worst_hs:.2e} (<=1e-10)", rt, 5)


# 2 -------------------------------------------------------------------------
def test_c02_weyl():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    violations, worst = 0, -math.inf
    for _ in range(500):
        d = int(rng.integers(1, 9))
        a, b = rng.standard_normal((2, d, d))
        T, U = SymOperator((a + a.T) / 2), SymOperator((b + b.T) / 2)
        gap = char_number_distance(T, U) - operator_norms(T - U).sup_norm
        worst = max(worst, gap)
        violations += gap > 1e-10
    rt = time.perf_counter() - t0
    ok = violations == 0 and rt < 10
    assert record("2", ok, f"Weyl: {violations} violations in 500 pairs, "
                  f"max(dist - ||T-U||) = {worst:.2e}", rt, 10)


# 3 -------------------------------------------------------------------------
def test_c03_gorillaz():
    t0 = time.perf_counter()
    h = [1e-2, 1e-3, 1e-4]
    rep = gorillaz_fixture(eigenvalues(EigenProfile("arithmetic", 3.0), 50), h)
    rt = time.perf_counter() - t0
    scaled_ok = bool(np.all((rep.scaled_sup >= 0.9) & (rep.scaled_sup <= 1.1)))
    ok = rep.deviation_holds.all() and scaled_ok and rep.second_holds.all() and rt < 1
    alt = gorillaz_fixture(eigenvalues(ARITH1, 50), h)
    info("3", f"with lambda_k = k^-2 (smallest 4e-4 > h) scaled sup = {fmt(alt.scaled_sup)}")
    assert record("3", ok, f"diagonal fixture (lambda_k = k^-4, d=50): ||T-hI|| <= sqrt(h) "
                  f"{bool(rep.deviation_holds.all())}; scaled sup {fmt(rep.scaled_sup)} in [0.9,1.1]; "
                  f"second ||T/h|| {fmt(rep.second_sup)} <= 2", rt, 1)


# 4 -------------------------------------------------------------------------
def test_c04_density_suite():
    t0 = time.perf_counter()
    from scipy import integrate

    worst_mass = worst_deriv = worst_ks = 0.0
    n = 200_000
    crit = stats.kstwo.ppf(0.99, n)
    for kind in ("gaussian", "laplace", "cubic"):
        fam = CoordinateFamily(kind)
        for lam in (0.1, 1.0, 10.0):
            f = lambda x: float(fam.density(x, lam))
            w = fam.support_halfwidth(lam)
            lim = w if math.isfinite(w) else np.inf
            mass = integrate.quad(f, -lim, 0)[0] + integrate.quad(f, 0, lim)[0]
            worst_mass = max(worst_mass, abs(mass - 1))
            s = math.sqrt(lam)
            step = 1e-5
            for xr in (-1.7, -0.4, 0.3, 1.1):
                x = xr * s
                g0 = lambda y: coordinate_density(fam, lam, y)
                g1 = lambda y: coordinate_density(fam, lam, y, 1)
                fd1 = (g0(x + step) - g0(x - step)) / (2 * step)
                fd2 = (g1(x + step) - g1(x - step)) / (2 * step)
                worst_deriv = max(worst_deriv, abs(g1(x) / fd1 - 1),
                                  abs(coordinate_density(fam, lam, x, 2) / fd2 - 1))
            draws = fam.draw(coordinate_stream(0, 0, 0), lam, n)
            ks = stats.kstest(draws, lambda t: fam.cdf(t, lam)).statistic
            worst_ks = max(worst_ks, ks / crit)
    rt = time.perf_counter() - t0
    ok = worst_mass <= 1e-8 and worst_deriv <= 1e-5 and worst_ks < 1 and rt < 60
    assert record("4", ok, f"densities: max |mass-1| {worst_mass:.1e} (<=1e-8), derivative rel err "
                  f"{worst_deriv:.1e} (<=1e-5), max KS/crit(1%) {worst_ks:.3f} (<1)", rt, 60)


# 5 -------------------------------------------------------------------------
def test_c05_gaussian_r_formulas():
    t0 = time.perf_counter()
    fam = CoordinateFamily("gaussian")
    worst = 0.0
    for lam in (0.05, 0.2, 1.0, 3.0, 10.0):
        for xr in (-1.5, 0.3, 0.8, 2.5):
            x0 = xr * math.sqrt(lam)
            prof = EigenProfile("exponential", 1.0, lam * math.e)
            R = r_field(ProcessModel(1, prof, fam, ShiftPoint.explicit([x0])))
            step = 1e-3 * math.sqrt(lam)
            lf = lambda y: float(fam.log_density(y, lam))
            score = (lf(x0 + step) - lf(x0 - step)) / (2 * step)
            curv = (lf(x0 + step) - 2 * lf(x0) + lf(x0 - step)) / step**2
            worst = max(worst, abs(R.tau[0] / score - 1), abs(R.diag[0] / (curv + score**2) - 1))
    rt = time.perf_counter() - t0
    ok = worst <= 1e-6 and rt < 1
    assert record("5", ok, f"gaussian tau, R_ii vs finite-difference log density on 20 pairs: "
                  f"max rel err {worst:.1e} (<=1e-6)", rt, 1)


# 6 -------------------------------------------------------------------------
def test_c06_dens_d1():
    t0 = time.perf_counter()
    m = shifted_d3()
    mass = d1_total_mass(m, 0)
    v = np.array([0.5, 1.0])
    marg = d1_marginal(m, 0, v)
    nd = norm_density(m)
    ref = nd(v)
    rel = np.abs(marg / ref - 1)
    n = 1_000_000
    r = np.sqrt(sample_sq_distances(m, n, seed=0))
    edges = np.linspace(0.0, radius_bound(m), 25)
    counts = np.histogram(r, edges)[0]
    probs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = composite_gauss_legendre([lo, hi], 24)
        probs.append(float(w @ nd(x)))
    probs = np.array(probs)
    se = np.sqrt(probs * (1 - probs) / n)
    use = probs > 1e-7
    z = np.abs(counts[use] / n - probs[use]) / se[use]
    rt = time.perf_counter() - t0
    ok = abs(mass - 1) <= 1e-3 and rel.max() <= 1e-3 and z.max() < 4 and rt < 180
    assert record("6", ok, f"coordinate/norm joint density (d=3): mass {mass:.10f}, marginal/norm density rel err "
                  f"{fmt(rel)} (<=1e-3), histogram max |z| {z.max():.2f} over {use.sum()} bins (<4)",
                  rt, 180)


# 7 -------------------------------------------------------------------------
def test_c07_prel():
    t0 = time.perf_counter()
    g = SmallBallForm.arithmetic(1.0).as_gamma_varying()
    s = [1e-1, 1e-2, 1e-3]
    reps = [prel_check(g, p, s) for p in range(4)]
    rt = time.perf_counter() - t0
    ok = all(r.monotone_toward_one and abs(r.ratio[-1] - 1) <= 0.1 for r in reps) and rt < 10
    detail = "; ".join(f"p={r.p} {fmt(r.ratio)}" for r in reps)
    assert record("7", ok, f"sine-integral ratios over s=1e-1..1e-3: {detail}", rt, 10)


# 8 -------------------------------------------------------------------------
H8 = [1e-1, 1e-2, 1e-3, 1e-4]


def _gamma_suite(form):
    g = form.as_gamma_varying()
    diags, mono = [], True
    for x in (-1.0, 1.0, 2.0):
        rep = gamma_limit_check(g, x, H8)
        mono &= rep.decreasing
        diags.append(rep.diagnostic[-1])
    fact3 = fact_checks(g, [1e-3]).integral_ratio[0]
    return np.array(diags), mono, fact3


def test_c08_gamma_suite_arithmetic_pair():
    t0 = time.perf_counter()
    d, mono, f3 = _gamma_suite(SmallBallForm.arithmetic(1.0))
    rt = time.perf_counter() - t0
    ok = mono and d.max() <= 0.03 and 0.9 <= f3 <= 1.1 and rt < 5
    assert record("8a", ok, f"class Gamma, arithmetic pair: |ratio/e^x-1| at h=1e-4 for x=-1,1,2 "
                  f"{fmt(d)} (<=0.03), monotone {mono}; integral ratio {f3:.4f} in [0.9,1.1]", rt, 5)


def test_c08_gamma_suite_exponential_pair():
    t0 = time.perf_counter()
    d, mono, f3 = _gamma_suite(SmallBallForm.exponential(1.0))
    rt = time.perf_counter() - t0
    printed = SmallBallForm.exponential(1.0).as_gamma_varying(AuxiliaryFunction.loglinear(1.0, 0.5))
    alt = gamma_limit_check(printed, 1.0, H8)
    info("8b", f"with rho = -s/(2 ln s) the x=1 ratio tends to e^(1/4): {fmt(alt.ratio)}")
    ok = mono and d.max() <= 0.03 and 0.9 <= f3 <= 1.1 and rt < 5
    assert record("8b", ok, f"class Gamma, log-quadratic pair: |ratio/e^x-1| at h=1e-4 for x=-1,1,2 "
                  f"{fmt(d)} (<=0.03), monotone {mono}; integral ratio {f3:.4f} in [0.9,1.1]", rt, 5)


# 9 -------------------------------------------------------------------------
def test_c09_juliet():
    t0 = time.perf_counter()
    thetas = [1e3, 1e4, 1e5, 1e6]
    reps = [juliet_ingredients(1.0, th) for th in thetas]
    mu_err = np.array([abs(r.mu / r.mu_closed - 1) for r in reps])
    i_err = np.array([abs(r.I / r.I_closed - 1) for r in reps])
    rt = time.perf_counter() - t0
    mono = bool(np.all(np.diff(mu_err) < 0) and np.all(np.diff(i_err) < 0))
    ok = mu_err[-1] <= 0.02 and i_err[-1] <= 0.1 and mono and rt < 1
    assert record("9", ok, f"series ingredients (alpha=1): |mu/mu_closed-1| {fmt(mu_err)} (terminal <=0.02), "
                  f"|I/((ln th)^2/4)-1| {fmt(i_err)} (terminal <=0.1), improving {mono}", rt, 1)


# 10 ------------------------------------------------------------------------
EPS10 = [0.3, 0.1, 0.05]


def _pb2_line(cid, convention):
    t0 = time.perf_counter()
    rep = pb2_desk_check(1.0, EPS10, n=1_000_000, seed=2, d=40, convention=convention)
    rt = time.perf_counter() - t0
    k = rep.smallest_reliable(100)
    dev = abs(rep.log_ratio[k] - 1) if k is not None else math.inf
    inc = bool(np.all(np.diff(rep.estimate[np.argsort(rep.eps)]) > 0))
    ok = dev <= 0.25 and inc and rt < 120
    eps_k = rep.eps[k] if k is not None else math.nan
    return record(cid, ok, f"log-quadratic small ball ({convention}): hits {rep.hits.tolist()}, at eps={eps_k:g} "
                  f"|ln P/ln F - 1| = {dev:.3f} (<=0.25), increasing {inc}", rt, 120)


def test_c10_pb2_norm_reading():
    assert _pb2_line("10", "norm")


def test_c10b_pb2_squared_norm_reading():
    assert _pb2_line("10b", "squared-norm")


# 11 ------------------------------------------------------------------------
EPS11 = [0.6, 0.5, 0.4, 0.3, 0.2]


def _pb1_line(cid, convention):
    t0 = time.perf_counter()
    try:
        rep = pb1_shape_check(1.0, EPS11, n=1_000_000, seed=3, d=60, convention=convention)
    except ValueError as exc:
        # some eps has no hits, so ln(-ln F_hat) is undefined there
        base = _pb1_slope_with_hits(convention)
        info(cid, f"slope over the eps points with hits: {base}")
        return record(cid, False, f"polynomial small-ball shape ({convention}): {exc}", time.perf_counter() - t0, 120)
    rt = time.perf_counter() - t0
    ok = abs(rep.slope - rep.target) <= 0.3 and rt < 120
    return record(cid, ok, f"polynomial small-ball shape ({convention}): slope {rep.slope:.3f} vs -1/alpha = "
                  f"{rep.target:g} (+-0.3), hits {rep.base.hits.tolist()}", rt, 120)


def _pb1_slope_with_hits(convention):
    m = ProcessModel(60, ARITH1, CoordinateFamily("gaussian"))
    sq = sample_sq_distances(m, 1_000_000, seed=3, center=np.zeros(60))
    eps = np.array(EPS11)
    thr = eps**2 if convention == "norm" else eps
    p = np.array([np.count_nonzero(sq < t) for t in thr]) / sq.size
    use = p > 0
    slope = np.polyfit(np.log(eps[use]), np.log(-np.log(p[use])), 1)[0]
    return f"{slope:.3f} on eps={eps[use].tolist()}"


def test_c11_pb1_norm_reading():
    assert _pb1_line("11", "norm")


def test_c11b_pb1_squared_norm_reading():
    assert _pb1_line("11b", "squared-norm")


# 12 ------------------------------------------------------------------------
def test_c12_covop_identity():
    t0 = time.perf_counter()
    m, k, h = shifted_d3(), Kernel.uniform(), 0.6
    G = theoretical_local_cov(m, k, h).operator
    a = covop_mse(m, k, h, 500, 400, seed=11, gamma_k=G)
    b = covop_mse(m, k, h, 1000, 400, seed=12, gamma_k=G)
    halving = abs(a.mse_hs - 2 * b.mse_hs) <= 4 * math.hypot(a.mse_hs_stderr, 2 * b.mse_hs_stderr)
    rt = time.perf_counter() - t0
    z = abs(a.mse_hs - a.identity) / a.mse_hs_stderr
    ok = a.agrees and halving and rt < 180
    info("12", f"MC/asymptote K(1)^2 h^4 F/n at n=500: {a.ratio_to_asymptote:.3f}; "
         f"sup-norm MSE {a.mse_sup:.4g}")
    assert record("12", ok, f"local covariance MSE: MC {a.mse_hs:.5g} +- {a.mse_hs_stderr:.2g} vs identity "
                  f"{a.identity:.5g} (|z|={z:.2f} <= 4); n=500 vs 2x(n=1000): {a.mse_hs:.4g} vs "
                  f"{2 * b.mse_hs:.4g} within pooled 4 se {halving}", rt, 180)


# 13 ------------------------------------------------------------------------
H13 = [0.6, 0.4, 0.25]


def test_c13_free_moments():
    t0 = time.perf_counter()
    m = ProcessModel(60, ARITH1, CoordinateFamily("gaussian"))
    k = Kernel.uniform()
    reps = [free_moment_check(m, k, mm, pp, H13, n=200_000, seed=1) for mm, pp in ((1, 2), (2, 4))]
    rt = time.perf_counter() - t0
    ok = rt < 30
    parts = []
    for r in reps:
        ok &= bool(np.all(r.ratio <= 1.0)) and bool(np.all(np.diff(r.ratio) > 0)) and r.ratio[-1] >= 0.6
        parts.append(f"m={r.m},p={r.p} {fmt(r.ratio)}")
    small = shifted_d3()
    for mm, pp in ((1, 2), (2, 4)):
        r3 = free_moment_check(small, k, mm, pp, H13)
        info("13", f"d=3 quadrature m={mm},p={pp}: {fmt(r3.ratio)} (finite-d limit d/(d+p) = "
             f"{3 / (3 + pp):.3f})")
    assert record("13", ok, f"free moments (gaussian, d=60, tilted MC, F(h)={fmt(reps[0].F)}): "
                  + "; ".join(parts) + " (<=1, increasing, terminal >=0.6)", rt, 30)


# 14 ------------------------------------------------------------------------
H14 = [0.6, 0.4, 0.3, 0.2]


def test_c14_lco_cells():
    t0 = time.perf_counter()
    m, k = shifted_d3(), Kernel.uniform()
    rho = AuxiliaryFunction.truncation(3)
    field = r_field(m)
    diag_err, off_last = [], None
    for h in H14:
        G = theoretical_local_cov(m, k, h).operator.entries
        vw = v_w_sequences(m, k, h, rho)
        diag_err.append([abs(G[i, i] / lco_cell_prediction(vw.v, vw.w, field, i, i) - 1)
                         for i in range(3)])
        off_last = [(G[i, j], vw.w * field.entry(i, j)) for i, j in ((0, 1), (0, 2), (1, 2))]
    diag_err = np.array(diag_err)
    rt = time.perf_counter() - t0
    dec = bool(np.all(np.diff(diag_err, axis=0) < 0))
    ratios = np.array([c / p for c, p in off_last])
    off_ok = bool(np.all(ratios > 0) and np.all((ratios >= 0.4) & (ratios <= 2.5)))
    ok = dec and diag_err[-1].max() <= 0.3 and off_ok and rt < 180
    assert record("14", ok, f"local covariance cells (d=3): diagonal rel err by h {fmt(diag_err.max(axis=1))} "
                  f"decreasing {dec}, terminal <=0.3; off-diagonal cell/(w R_ij) at h=0.2 "
                  f"{fmt(ratios)} in [0.4,2.5]", rt, 180)


# 15 ------------------------------------------------------------------------
KT_BOUND = 5.0


def test_c15_kt_boundedness():
    t0 = time.perf_counter()
    m, k = shifted_d3(), Kernel.uniform()
    rho = AuxiliaryFunction.truncation(3)
    ratios, naive = [], []
    for h in H14:
        G = theoretical_local_cov(m, k, h).operator
        ratios.append(kt_ratio(G, v_w_sequences(m, k, h, rho).v))
        naive.append(naive_bound_check(G, m, k, h).holds)
    ratios = np.array(ratios)
    rt = time.perf_counter() - t0
    blowup = bool(np.all(np.diff(ratios) > 0))
    ok = ratios.max() <= KT_BOUND and not blowup and all(naive) and rt < 120
    assert record("15", ok, f"||Gamma_K - vI||/v over h=0.6..0.2: {fmt(ratios)} (<= {KT_BOUND}, no monotone "
                  f"growth); naive bound holds at all h {all(naive)}", rt, 120)


# 16 ------------------------------------------------------------------------
H16 = [0.8, 0.6, 0.4]
RATIO_BOUND = 1.5
_EIGEN_CACHE = {}


def _eigen_reports():
    if not _EIGEN_CACHE:
        t0 = time.perf_counter()
        m, k = shifted_d3(), Kernel.uniform()
        _EIGEN_CACHE["reps"] = [eigen_rates(m, k, h, 1000, 400, seed=5, p_max=3) for h in H16]
        _EIGEN_CACHE["rt"] = time.perf_counter() - t0
    return _EIGEN_CACHE["reps"], _EIGEN_CACHE["rt"]


def test_c16_eigen_rates():
    reps, rt = _eigen_reports()
    viol = sum(r.weyl_violations for r in reps)
    eig = np.array([r.eig_ratio for r in reps])
    ok = viol == 0 and eig.max() <= RATIO_BOUND and rt < 180
    assert record("16", ok, f"eigen rates (d=3, n=1000, 400 reps): Weyl violations {viol}; "
                  f"eigenvalue MSE/(h^4 F/n) max by h {fmt(eig.max(axis=1))} (<= {RATIO_BOUND})",
                  rt, 180)


def test_c16b_eigenprojector_rates():
    reps, rt = _eigen_reports()
    proj = np.array([r.proj_ratio for r in reps])
    ok = proj.max() <= RATIO_BOUND
    assert record("16b", ok, f"eigenprojector MSE/(h^4 F/n) max by h {fmt(proj.max(axis=1))} "
                  f"(<= {RATIO_BOUND})")


# 17 ------------------------------------------------------------------------
CONFIGS = {
    "simulate": "kind = simulate\nseed = 3\nn = 200\n",
    "smallball": "kind = smallball\nseed = 3\nform = exponential\nalpha = 1\nn = 20000\n"
                 "eps_grid = 0.3, 0.1\ntheta_grid = 10, 1000\n",
    "gamma-checks": "kind = gamma-checks\nseed = 0\nform = arithmetic\nalpha = 1\nh_grid = 0.1, 0.01\n",
    "lco-cells": "kind = lco-cells\nseed = 0\nh_grid = 0.6, 0.4\n",
    "kt-ratio": "kind = kt-ratio\nseed = 0\nh_grid = 0.6, 0.4\n",
    "compay": "kind = compay\nseed = 0\nh_grid = 0.6, 0.4\n",
    "covop-mse": "kind = covop-mse\nseed = 4\nn = 300\nreps = 100\nh = 0.8\n",
    "eigen-rates": "kind = eigen-rates\nseed = 4\nn = 300\nreps = 100\nh = 0.8\n",
    "oracle-suite": "kind = oracle-suite\nseed = 0\nh_grid = 0.6, 0.4\n",
    "gorillaz": "kind = gorillaz\nseed = 0\nh_grid = 0.01, 0.001\n",
}
MODEL = "[model]\ndim = 3\nshift.profile = power\nshift.params = 0.5, 1\n"


def test_c17_determinism(tmp_path):
    from locfpca.cli import main

    t0 = time.perf_counter()
    same = {}
    for kind, body in CONFIGS.items():
        model = MODEL if kind != "gorillaz" else "[model]\ndim = 50\nprofile.param = 3\n"
        p = tmp_path / f"{kind}.ini"
        p.write_text("[experiment]\n" + body + model)
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / kind / rep
            assert main(["run", str(p), "--out", str(d)]) == 0
            outs.append((d / "report.csv").read_bytes())
        same[kind] = outs[0] == outs[1]
    rt = time.perf_counter() - t0
    bad = [k for k, v in same.items() if not v]
    assert record("17", not bad, f"determinism: {len(same) - len(bad)}/{len(same)} experiment kinds "
                  f"byte-identical on rerun {bad or ''}", rt, "free")
