"""Localization kernels supported on [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNEL_KINDS = ("uniform", "rising", "table")


@dataclass(frozen=True, eq=False)
class Kernel:
    """Nonnegative kernel on ``[0, 1]`` with unit mass and ``K(1) > 0``.

    ``uniform``: ``K = 1``. ``rising``: ``K(s) = (beta + 1) s^beta`` with
    ``beta >= 1``. ``table``: piecewise-linear interpolation of ``values``
    on ``grid``, where the grid runs from 0 to 1.
    """

    kind: str = "uniform"
    beta: float = 0.0
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "rising" and not self.beta >= 1:
            raise ValueError("rising kernel needs beta >= 1 for a bounded derivative")
        if self.kind == "table":
            g = np.array(self.grid, dtype=float)
            v = np.array(self.values, dtype=float)
            if g.ndim != 1 or g.shape != v.shape or g.size < 2:
                raise ValueError("table kernel needs equal-length 1-D grid and values")
            if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
                raise ValueError("table kernel grid must increase strictly from 0 to 1")
            if np.any(v < 0):
                raise ValueError("kernel values must be nonnegative")
            g.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "values", v)
        problems = self.assumption_violations()
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def uniform(cls) -> "Kernel":
        return cls("uniform")

    @classmethod
    def rising(cls, beta: float) -> "Kernel":
        return cls("rising", float(beta))

    @classmethod
    def table(cls, grid, values) -> "Kernel":
        return cls("table", 0.0, grid, values)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 0.0) & (s <= 1.0)
        if self.kind == "uniform":
            val = np.ones_like(s)
        elif self.kind == "rising":
            val = (self.beta + 1.0) * np.clip(s, 0.0, 1.0) ** self.beta
        else:
            val = np.interp(s, self.grid, self.values)
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 0.0) & (s <= 1.0)
        if self.kind == "uniform":
            val = np.zeros_like(s)
        elif self.kind == "rising":
            val = self.beta * (self.beta + 1.0) * np.clip(s, 0.0, 1.0) ** (self.beta - 1.0)
        else:
            slopes = np.diff(self.values) / np.diff(self.grid)
            k = np.clip(np.searchsorted(self.grid, s, side="right") - 1, 0, slopes.size - 1)
            val = slopes[k]
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    @property
    def at_one(self) -> float:
        return float(self(1.0))

    def integral(self) -> float:
        if self.kind in ("uniform", "rising"):
            return 1.0
        return float(np.trapezoid(self.values, self.grid))

    def sup_derivative(self) -> float:
        if self.kind == "uniform":
            return 0.0
        if self.kind == "rising":
            return self.beta * (self.beta + 1.0)
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.grid))))

    def assumption_violations(self) -> list:
        out = []
        if abs(self.integral() - 1.0) > 1e-10:
            out.append(f"kernel integrates to {self.integral():.12g}, not 1")
        if not self.at_one > 0:
            out.append("kernel must be positive at 1")
        if not np.isfinite(self.sup_derivative()):
            out.append("kernel derivative is unbounded")
        return out
