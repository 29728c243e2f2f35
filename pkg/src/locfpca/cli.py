"""Command line entry point: ``locfpca run <config> [--out DIR]`` and ``locfpca validate <config>``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    build_auxiliary,
    build_kernel,
    build_model,
    h_values,
    validate,
)
from .errors import LocfpcaError
from .gamma_class import fact_checks, gamma_limit_check
from .kernels import Kernel
from .localcov import (
    compay_check,
    covop_mse,
    eigen_rates,
    gorillaz_fixture,
    kt_ratio,
    lco_cell_prediction,
    naive_bound_check,
    theoretical_local_cov,
    v_w_sequences,
)
from .model import r_field, sample_kl
from .oracles import (
    CLOSED_FORM,
    MC,
    QUADRATURE,
    d1_marginal,
    d1_total_mass,
    free_moment_check,
    norm_density,
    polar_density,
    prel_check,
)
from .smallball import SmallBallForm, juliet_ingredients, pb1_shape_check, pb2_desk_check

CSV_HEADER = ("point", "estimate", "stderr", "oracle", "ratio", "flag")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


@dataclass(frozen=True)
class Row:
    point: str
    estimate: float
    stderr: float = 0.0
    oracle: float = math.nan
    ratio: float = math.nan
    flag: str = QUADRATURE


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    summary: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = __version__
    extra_tables: dict = field(default_factory=dict)


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _ratio(a, b) -> float:
    a, b = float(a), float(b)
    if b == 0.0 or math.isnan(a) or math.isnan(b):
        return math.nan
    return a / b


def _g(x) -> str:
    return format(float(x), "g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.point, _num(r.estimate), _num(r.stderr), _num(r.oracle), _num(r.ratio), r.flag])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


# ---------------------------------------------------------------------------
# experiment runners; each returns (rows, summary, extra_tables)


def _simulate(cfg):
    model = build_model(cfg)
    n = cfg.get_int("experiment", "n")
    seed = cfg.get_int("experiment", "seed")
    x = sample_kl(model, n, seed)
    rows = []
    for k in range(model.dim):
        col = x[:, k]
        dev = (col - col.mean()) ** 2
        var = float(dev.mean())
        se = float(dev.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        oracle = float(model.variances[k])
        rows.append(Row(f"k={k + 1}|variance", var, se, oracle, _ratio(var, oracle), MC))
    header = [f"k{k + 1}" for k in range(model.dim)]
    table = [header] + [[_num(v) for v in row] for row in x]
    return rows, {"n": n, "dim": model.dim}, {"samples.csv": table}


def _smallball(cfg):
    form = cfg.get_str("experiment", "form", "exponential")
    alpha = cfg.get_float("experiment", "alpha", 1.0)
    C = cfg.get_float("experiment", "C", 1.0)
    n = cfg.get_int("experiment", "n")
    seed = cfg.get_int("experiment", "seed")
    eps = cfg.get_floats("experiment", "eps_grid")
    conv = cfg.get_str("experiment", "convention", "norm")
    rows, summary = [], {"convention": conv}
    if form == "exponential":
        d = cfg.get_int("experiment", "dim", 40)
        rep = pb2_desk_check(alpha, eps, n, seed, d, conv)
    else:
        d = cfg.get_int("experiment", "dim", 60)
        shape = pb1_shape_check(alpha, eps, n, seed, d, C, conv)
        rep = shape.base
        summary.update(slope=shape.slope, target_slope=shape.target)
    for k, e in enumerate(rep.eps):
        flag = MC if rep.hits[k] > 0 else MC + "|zero-hits"
        rows.append(Row(f"eps={_g(e)}", rep.estimate[k], rep.stderr[k], math.exp(rep.log_F[k]),
                        rep.log_ratio[k], flag))
    if form == "arithmetic":
        rows.append(Row("slope", summary["slope"], math.nan, summary["target_slope"],
                        _ratio(summary["slope"], summary["target_slope"]), MC))
    idx = rep.smallest_reliable(100)
    summary["increasing_in_eps"] = bool(np.all(np.diff(rep.estimate[np.argsort(rep.eps)]) > 0))
    if idx is not None:
        summary["smallest_reliable_eps"] = float(rep.eps[idx])
        summary["log_ratio_deviation"] = float(abs(rep.log_ratio[idx] - 1.0))
    summary["hits"] = rep.hits.tolist()
    if cfg.has("experiment", "theta_grid"):
        for th in cfg.get_floats("experiment", "theta_grid"):
            j = juliet_ingredients(alpha, th)
            for name, val, closed in (("mu", j.mu, j.mu_closed), ("psi", j.psi, j.psi_closed),
                                      ("I", j.I, j.I_closed)):
                rows.append(Row(f"theta={_g(th)}|{name}", val, 0.0, closed, _ratio(val, closed),
                                CLOSED_FORM))
    return rows, summary, {}


def _gamma_checks(cfg):
    form_kind = cfg.get_str("experiment", "form", "arithmetic")
    alpha = cfg.get_float("experiment", "alpha", 1.0)
    C = cfg.get_float("experiment", "C", 1.0)
    hs = cfg.get_floats("experiment", "h_grid")
    xs = cfg.get_floats("experiment", "x_grid", "-1, 0.5, 1, 2")
    form = SmallBallForm.arithmetic(alpha, C) if form_kind == "arithmetic" else SmallBallForm.exponential(alpha)
    g = form.as_gamma_varying()
    rows, summary = [], {"limit_decreasing": {}}
    for x in xs:
        rep = gamma_limit_check(g, x, hs)
        summary["limit_decreasing"][_g(x)] = rep.decreasing
        for h, r, fl in zip(rep.h, rep.ratio, rep.flags):
            rows.append(Row(f"x={_g(x)}|h={_g(h)}", r, 0.0, math.exp(x), _ratio(r, math.exp(x)),
                            CLOSED_FORM + ("|domain" if fl else "")))
    facts = fact_checks(g, hs)
    for k, h in enumerate(facts.h):
        rows.append(Row(f"half-ratio|h={_g(h)}", facts.half_ratio[k], 0.0, 0.0, math.nan, CLOSED_FORM))
        rows.append(Row(f"rho-shift-up|h={_g(h)}", facts.rho_shift_plus[k], 0.0, 1.0, facts.rho_shift_plus[k], CLOSED_FORM))
        rows.append(Row(f"rho-shift-down|h={_g(h)}", facts.rho_shift_minus[k], 0.0, 1.0, facts.rho_shift_minus[k], CLOSED_FORM))
        rows.append(Row(f"integral-ratio|h={_g(h)}", facts.integral_ratio[k], facts.integral_error[k], 1.0,
                        facts.integral_ratio[k], QUADRATURE))
    return rows, summary, {}


def _local_setup(cfg):
    model = build_model(cfg)
    kernel = build_kernel(cfg) or Kernel.uniform()
    return model, kernel, h_values(cfg)


def _gamma_k(model, kernel, h, cfg):
    if model.dim <= 4:
        return theoretical_local_cov(model, kernel, h)
    budget = cfg.get_int("experiment", "budget", 400_000, minimum=100_000)
    return theoretical_local_cov(model, kernel, h, method=MC, budget=budget,
                                 seed=cfg.get_int("experiment", "seed"))


def _lco_cells(cfg):
    model, kernel, hs = _local_setup(cfg)
    rho = build_auxiliary(cfg, model)
    field_ = r_field(model)
    rows = []
    for h in hs:
        G = theoretical_local_cov(model, kernel, h)
        vw = v_w_sequences(model, kernel, h, rho, method=QUADRATURE)
        E = G.operator.entries
        for i in range(model.dim):
            for j in range(i, model.dim):
                pred = lco_cell_prediction(vw.v, vw.w, field_, i, j)
                rows.append(Row(f"h={_g(h)}|i={i}|j={j}", E[i, j], G.residual, pred,
                                _ratio(E[i, j], pred), QUADRATURE))
    return rows, {}, {}


def _kt_ratio(cfg):
    model, kernel, hs = _local_setup(cfg)
    rho = build_auxiliary(cfg, model)
    rows, ratios, naive_ok = [], [], True
    for h in hs:
        G = _gamma_k(model, kernel, h, cfg)
        vw = v_w_sequences(model, kernel, h, rho)
        kt = kt_ratio(G.operator, vw.v)
        ratios.append(kt)
        nb = naive_bound_check(G.operator, model, kernel, h)
        naive_ok &= nb.holds
        rows.append(Row(f"h={_g(h)}|kt", kt, 0.0, math.nan, math.nan, G.method))
        rows.append(Row(f"h={_g(h)}|naive", nb.lhs, 0.0, nb.rhs, _ratio(nb.lhs, nb.rhs), nb.method))
    return rows, {"max_kt_ratio": max(ratios), "naive_bound_holds": naive_ok}, {}


def _compay(cfg):
    model, kernel, hs = _local_setup(cfg)
    rho = build_auxiliary(cfg, model)
    rep = compay_check(model, kernel, rho, hs)
    rows = []
    for k, h in enumerate(rep.h):
        flag = rep.method + ("|skipped" if rep.skipped[k] else "")
        rows.append(Row(f"h={_g(h)}|r1", rep.r1[k], 0.0, rep.envelope[k], _ratio(rep.r1[k], rep.envelope[k]), flag))
        rows.append(Row(f"h={_g(h)}|r2", rep.r2[k], 0.0, 1.0, rep.r2[k], flag))
    return rows, {"envelope_holds": rep.envelope_holds}, {}


def _covop(cfg):
    model, kernel, hs = _local_setup(cfg)
    n = cfg.get_int("experiment", "n")
    reps = cfg.get_int("experiment", "reps")
    seed = cfg.get_int("experiment", "seed")
    rows, agree = [], True
    for h in hs:
        G = _gamma_k(model, kernel, h, cfg)
        r = covop_mse(model, kernel, h, n, reps, seed, gamma_k=G.operator)
        agree &= r.agrees
        rows.append(Row(f"h={_g(h)}|mse-hs", r.mse_hs, r.mse_hs_stderr, r.identity,
                        _ratio(r.mse_hs, r.identity), MC))
        rows.append(Row(f"h={_g(h)}|identity", r.identity, 0.0, r.asymptote,
                        _ratio(r.identity, r.asymptote), G.method))
        rows.append(Row(f"h={_g(h)}|asymptote", r.asymptote, 0.0, math.nan, math.nan, G.method))
        rows.append(Row(f"h={_g(h)}|mse-sup", r.mse_sup, r.mse_sup_stderr, r.mse_hs,
                        _ratio(r.mse_sup, r.mse_hs), MC))
    return rows, {"identity_agrees": agree}, {}


def _eigen(cfg):
    model, kernel, hs = _local_setup(cfg)
    n = cfg.get_int("experiment", "n")
    reps = cfg.get_int("experiment", "reps")
    seed = cfg.get_int("experiment", "seed")
    p_max = cfg.get_int("experiment", "p_max", 2)
    rows, viol, bound = [], 0, True
    for h in hs:
        G = _gamma_k(model, kernel, h, cfg)
        r = eigen_rates(model, kernel, h, n, reps, seed, p_max, gamma_k=G.operator)
        viol += r.weyl_violations
        bound &= r.eig_bound_holds
        for a, p in enumerate(r.indices):
            rows.append(Row(f"h={_g(h)}|p={p}|eigenvalue", r.eig_mse[a], r.eig_mse_stderr[a],
                            r.scale, r.eig_ratio[a], MC))
            rows.append(Row(f"h={_g(h)}|p={p}|projector", r.proj_mse[a], r.proj_mse_stderr[a],
                            r.scale, r.proj_ratio[a], MC))
        for p in r.skipped:
            rows.append(Row(f"h={_g(h)}|p={p}|skipped", math.nan, math.nan, math.nan, math.nan,
                            MC + "|degenerate-gap"))
        rows.append(Row(f"h={_g(h)}|weyl-violations", r.weyl_violations, 0.0, 0.0, math.nan, MC))
    return rows, {"weyl_violations": viol, "eigen_bound_holds": bound}, {}


def _oracle_suite(cfg):
    model, kernel, hs = _local_setup(cfg)
    rows = []
    nd = norm_density(model)
    rows.append(Row("norm-density-mass", nd.mass(), 0.0, 1.0, nd.mass(), QUADRATURE))
    if model.dim >= 2:
        m = d1_total_mass(model, 0)
        rows.append(Row("d1-mass|i=0", m, 0.0, 1.0, m, QUADRATURE))
        for v in (0.5, 1.0):
            a = float(d1_marginal(model, 0, v)[0])
            b = float(polar_density(model, (), v)[0])
            rows.append(Row(f"d1-marginal|v={_g(v)}", a, 0.0, b, _ratio(a, b), QUADRATURE))
    g = SmallBallForm.arithmetic(1.0).as_gamma_varying()
    for p in range(4):
        rep = prel_check(g, p, [1e-1, 1e-2, 1e-3])
        for s, r, e in zip(rep.s, rep.ratio, rep.error):
            rows.append(Row(f"prel|p={p}|s={_g(s)}", r, e, 1.0, r, QUADRATURE))
    for m_, p_ in ((1, 2), (2, 4)):
        fr = free_moment_check(model, kernel, m_, p_, hs)
        for k, h in enumerate(fr.h):
            rows.append(Row(f"free|m={m_}|p={p_}|h={_g(h)}", fr.lhs[k], fr.stderr[k], fr.rhs[k],
                            fr.ratio[k], fr.method))
    return rows, {}, {}


def _gorillaz(cfg):
    model = build_model(cfg)
    hs = cfg.get_floats("experiment", "h_grid")
    rep = gorillaz_fixture(model.lambdas, hs)
    rows = []
    for k, h in enumerate(rep.h):
        rows.append(Row(f"h={_g(h)}|deviation", rep.deviation[k], 0.0, rep.deviation_bound[k],
                        _ratio(rep.deviation[k], rep.deviation_bound[k]), CLOSED_FORM))
        rows.append(Row(f"h={_g(h)}|scaled-sup", rep.scaled_sup[k], 0.0, 1.0, rep.scaled_sup[k],
                        CLOSED_FORM))
        rows.append(Row(f"h={_g(h)}|second-variant", rep.second_sup[k], 0.0, 2.0,
                        _ratio(rep.second_sup[k], 2.0), CLOSED_FORM))
    summary = {
        "deviation_bound_holds": bool(rep.deviation_holds.all()),
        "second_variant_holds": bool(rep.second_holds.all()),
        "printed_constant_times_sqrt_h": rep.printed_constant.tolist(),
    }
    return rows, summary, {}


RUNNERS = {
    "simulate": _simulate,
    "smallball": _smallball,
    "gamma-checks": _gamma_checks,
    "lco-cells": _lco_cells,
    "kt-ratio": _kt_ratio,
    "compay": _compay,
    "covop-mse": _covop,
    "eigen-rates": _eigen,
    "oracle-suite": _oracle_suite,
    "gorillaz": _gorillaz,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    kind = cfg.get_str("experiment", "kind")
    start = time.perf_counter()
    rows, summary, extra = RUNNERS[kind](cfg)
    if cfg.violations:
        raise ConfigError(cfg.violations)
    return ExperimentReport(cfg.echo(), rows, summary, time.perf_counter() - start,
                            extra_tables=extra)


def write_report(report: ExperimentReport, out_dir, fmt: str = "csv+json") -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in fmt:
        p = out / "report.csv"
        p.write_text(rows_to_csv(report.rows))
        written.append(p)
        for name, table in report.extra_tables.items():
            q = out / name
            buf = io.StringIO()
            csv.writer(buf, lineterminator="\n").writerows(table)
            q.write_text(buf.getvalue())
            written.append(q)
    if "json" in fmt:
        p = out / "report.json"
        doc = {
            "library_version": report.version,
            "config": report.config,
            "summary": report.summary,
            "wall_clock_seconds": report.wall_clock,
            "rows": [r.__dict__ for r in report.rows],
        }
        p.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written


def _load(path):
    try:
        return ExperimentConfig.from_file(path), None
    except (OSError, ValueError) as exc:
        return None, str(exc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="locfpca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides [output] path)")
    p_val = sub.add_parser("validate", help="check a config file without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    cfg, err = _load(args.config)
    if cfg is None:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_INVALID
    try:
        problems = validate(cfg)
    except LocfpcaError as exc:
        print(f"numerical failure during validation: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "validate":
        print("ok")
        return EXIT_OK
    try:
        report = run(cfg)
    except ConfigError as exc:
        for p in exc.violations:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    except (LocfpcaError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    kind = cfg.get_str("experiment", "kind")
    out_dir = args.out or cfg.raw("output", "path") or f"locfpca-out/{kind}"
    for p in write_report(report, out_dir, cfg.raw("output", "format", "csv+json")):
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
