"""Experiment configuration files: parsing and validation.

A configuration is an INI-style file with ``key = value`` lines grouped in
sections ``[experiment]``, ``[model]``, ``[kernel]``, ``[auxiliary]`` and
``[output]``. Lists are comma separated.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gamma_class import AuxiliaryFunction
from .kernels import Kernel
from .model import (
    FAMILY_KINDS,
    PROFILE_KINDS,
    CoordinateFamily,
    EigenProfile,
    ProcessModel,
    ShiftPoint,
    eigenvalues,
)

EXPERIMENT_KINDS = (
    "simulate", "smallball", "gamma-checks", "lco-cells", "kt-ratio", "compay",
    "covop-mse", "eigen-rates", "oracle-suite", "gorillaz",
)
LOCAL_SAMPLING_KINDS = ("covop-mse", "eigen-rates")
MIN_LOCAL_SAMPLES = 20


class ConfigError(ValueError):
    """Configuration is invalid; ``violations`` lists every problem found."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass
class ExperimentConfig:
    sections: dict
    source: str = "<memory>"
    violations: list = field(default_factory=list)

    @classmethod
    def from_text(cls, text: str, source: str = "<memory>") -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        cp.optionxform = str
        cp.read_string(text, source=source)
        return cls({s: dict(cp[s]) for s in cp.sections()}, source)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        return cls.from_text(p.read_text(), str(p))

    def echo(self) -> dict:
        return {s: dict(v) for s, v in self.sections.items()}

    # typed accessors; each records a violation instead of raising

    def raw(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def has(self, section, key) -> bool:
        return key in self.sections.get(section, {})

    def _bad(self, msg):
        self.violations.append(msg)
        return None

    def get_str(self, section, key, default=None, choices=None):
        val = self.raw(section, key, default)
        if val is None:
            return self._bad(f"[{section}] {key}: required")
        val = str(val).strip()
        if choices is not None and val not in choices:
            return self._bad(f"[{section}] {key}: {val!r} not one of {', '.join(choices)}")
        return val

    def get_int(self, section, key, default=None, minimum=None):
        val = self.raw(section, key, default)
        if val is None:
            return self._bad(f"[{section}] {key}: required")
        try:
            out = int(str(val).strip())
        except ValueError:
            return self._bad(f"[{section}] {key}: expected an integer, got {val!r}")
        if minimum is not None and out < minimum:
            return self._bad(f"[{section}] {key}: must be >= {minimum}, got {out}")
        return out

    def get_float(self, section, key, default=None, positive=False):
        val = self.raw(section, key, default)
        if val is None:
            return self._bad(f"[{section}] {key}: required")
        try:
            out = float(str(val).strip())
        except ValueError:
            return self._bad(f"[{section}] {key}: expected a number, got {val!r}")
        if not math.isfinite(out) or (positive and out <= 0):
            return self._bad(f"[{section}] {key}: must be a finite{' positive' if positive else ''} number")
        return out

    def get_floats(self, section, key, default=None, monotone=None, positive=False):
        val = self.raw(section, key, default)
        if val is None:
            return self._bad(f"[{section}] {key}: required")
        try:
            out = [float(t) for t in str(val).replace(";", ",").split(",") if t.strip()]
        except ValueError:
            return self._bad(f"[{section}] {key}: expected a comma-separated list of numbers")
        if not out:
            return self._bad(f"[{section}] {key}: empty list")
        if positive and any(v <= 0 for v in out):
            return self._bad(f"[{section}] {key}: entries must be positive")
        d = np.diff(out)
        if monotone == "decreasing" and np.any(d >= 0):
            return self._bad(f"[{section}] {key}: must be strictly decreasing")
        if monotone == "increasing" and np.any(d <= 0):
            return self._bad(f"[{section}] {key}: must be strictly increasing")
        return out


def build_model(cfg: ExperimentConfig):
    d = cfg.get_int("model", "dim", minimum=1)
    kind = cfg.get_str("model", "profile.kind", "arithmetic", PROFILE_KINDS)
    param = cfg.get_float("model", "profile.param", 1.0, positive=True)
    scale = cfg.get_float("model", "profile.scale", 1.0, positive=True)
    fam = cfg.get_str("model", "family", "gaussian", FAMILY_KINDS)
    shift_kind = cfg.get_str("model", "shift.profile", "zero", ("zero", "power", "explicit"))
    if None in (d, kind, param, scale, fam, shift_kind):
        return None
    try:
        profile = EigenProfile(kind, param, scale)
        lam = eigenvalues(profile, d)
    except ValueError as exc:
        return cfg._bad(f"[model] {exc}")
    if shift_kind == "zero":
        shift = ShiftPoint.zero(d)
    else:
        params = cfg.get_floats("model", "shift.params")
        if params is None:
            return None
        if shift_kind == "power":
            if len(params) != 2:
                return cfg._bad("[model] shift.params: power shift needs 'c, beta'")
            shift = ShiftPoint.power(lam, params[0], params[1])
        else:
            if len(params) != d:
                return cfg._bad(f"[model] shift.params: need {d} values, got {len(params)}")
            shift = ShiftPoint.explicit(params)
    return ProcessModel(d, profile, CoordinateFamily(fam), shift)


def build_kernel(cfg: ExperimentConfig):
    kind = cfg.get_str("kernel", "kind", "uniform", ("uniform", "rising", "table"))
    if kind is None:
        return None
    try:
        if kind == "uniform":
            return Kernel.uniform()
        if kind == "rising":
            beta = cfg.get_float("kernel", "beta", positive=True)
            return None if beta is None else Kernel.rising(beta)
        grid = cfg.get_floats("kernel", "grid", monotone="increasing")
        values = cfg.get_floats("kernel", "values")
        if grid is None or values is None:
            return None
        return Kernel.table(grid, values)
    except ValueError as exc:
        return cfg._bad(f"[kernel] {exc}")


def build_auxiliary(cfg: ExperimentConfig, model=None):
    kind = cfg.get_str("auxiliary", "kind", "truncation", ("truncation", "power", "loglinear"))
    if kind is None:
        return None
    if kind == "truncation":
        d = cfg.get_int("auxiliary", "d", model.dim if model is not None else None, minimum=1)
        return None if d is None else AuxiliaryFunction.truncation(d)
    alpha = cfg.get_float("auxiliary", "alpha", 1.0, positive=True)
    if alpha is None:
        return None
    if kind == "power":
        C = cfg.get_float("auxiliary", "C", 1.0, positive=True)
        return None if C is None else AuxiliaryFunction.power(alpha, C)
    coef = cfg.get_float("auxiliary", "coef", 2.0 * alpha, positive=True)
    return None if coef is None else AuxiliaryFunction.loglinear(alpha, coef)


def h_values(cfg: ExperimentConfig):
    """Bandwidths from ``h_grid`` (strictly decreasing) or a single ``h``."""
    if cfg.has("experiment", "h_grid"):
        return cfg.get_floats("experiment", "h_grid", monotone="decreasing", positive=True)
    h = cfg.get_float("experiment", "h", positive=True)
    return None if h is None else [h]


def predicted_local_count(model, h: float, n: int) -> float:
    from .oracles import radial_expectations

    est = radial_expectations(model, h, [], method="auto", n=100_000, seed=0)
    return n * est.F


def validate(cfg: ExperimentConfig) -> list:
    """Every violated field; an empty list means :func:`run` would start."""
    cfg.violations = []
    kind = cfg.get_str("experiment", "kind", choices=EXPERIMENT_KINDS)
    cfg.get_int("experiment", "seed", minimum=0)
    if kind is None:
        return cfg.violations
    cfg.get_str("output", "format", "csv+json", ("csv", "json", "csv+json"))
    needs_model = kind not in ("gamma-checks", "smallball")
    model = build_model(cfg) if needs_model else None
    if kind in ("lco-cells", "kt-ratio", "compay", "covop-mse", "eigen-rates", "oracle-suite"):
        build_kernel(cfg)
        hs = h_values(cfg)
        if kind in ("lco-cells", "kt-ratio", "compay", "oracle-suite"):
            build_auxiliary(cfg, model)
        if model is not None and kind in ("lco-cells", "oracle-suite") and model.dim > 4:
            cfg._bad(f"[model] dim: {kind} uses quadrature and needs dim <= 4")
        if kind in LOCAL_SAMPLING_KINDS:
            n = cfg.get_int("experiment", "n", minimum=2)
            cfg.get_int("experiment", "reps", minimum=100)
            if kind == "eigen-rates":
                cfg.get_int("experiment", "p_max", 2, minimum=1)
            if model is not None and hs and n:
                count = predicted_local_count(model, min(hs), n)
                if count < MIN_LOCAL_SAMPLES:
                    cfg._bad(
                        f"[experiment] infeasible: predicted n*F(h_min) = {count:.3g} local "
                        f"samples at h = {min(hs)}, need at least {MIN_LOCAL_SAMPLES}"
                    )
    elif kind == "simulate":
        cfg.get_int("experiment", "n", minimum=1)
    elif kind == "smallball":
        form = cfg.get_str("experiment", "form", "exponential", ("exponential", "arithmetic"))
        cfg.get_float("experiment", "alpha", 1.0, positive=True)
        cfg.get_float("experiment", "C", 1.0, positive=True)
        cfg.get_int("experiment", "dim", 40 if form == "exponential" else 60, minimum=1)
        cfg.get_int("experiment", "n", minimum=1)
        cfg.get_floats("experiment", "eps_grid", monotone="decreasing", positive=True)
        cfg.get_str("experiment", "convention", "norm", ("norm", "squared-norm"))
        if cfg.has("experiment", "theta_grid"):
            cfg.get_floats("experiment", "theta_grid", monotone="increasing", positive=True)
    elif kind == "gamma-checks":
        cfg.get_str("experiment", "form", "arithmetic", ("exponential", "arithmetic"))
        cfg.get_float("experiment", "alpha", 1.0, positive=True)
        cfg.get_float("experiment", "C", 1.0, positive=True)
        cfg.get_floats("experiment", "h_grid", monotone="decreasing", positive=True)
        cfg.get_floats("experiment", "x_grid", "-1, 0.5, 1, 2")
    elif kind == "gorillaz":
        cfg.get_floats("experiment", "h_grid", monotone="decreasing", positive=True)
    return list(cfg.violations)
