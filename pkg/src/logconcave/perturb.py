"""Perturbation functions Delta used in directional derivatives of the likelihood."""

from __future__ import annotations

import numpy as np

from .density import PiecewiseLogLinear, slope_tolerance
from .kernels import segment_moments


class PiecewiseLinear:
    """Continuous piecewise-linear function, extended linearly beyond its knots."""

    def __init__(self, knots, values):
        self.knots = np.array(knots, dtype=float)
        self.values = np.array(values, dtype=float)
        if self.knots.ndim != 1 or self.knots.shape != self.values.shape or self.knots.size < 2:
            raise ValueError("need matching 1-d knots and values with at least two entries")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")

    @classmethod
    def linear(cls, intercept: float, slope: float, lo: float = 0.0, hi: float = 1.0):
        return cls([lo, hi], [intercept + slope * lo, intercept + slope * hi])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.slopes
        out = np.interp(x, self.knots, self.values)
        out = np.where(x < self.knots[0], self.values[0] + s[0] * (x - self.knots[0]), out)
        out = np.where(x > self.knots[-1], self.values[-1] + s[-1] * (x - self.knots[-1]), out)
        return float(out) if out.ndim == 0 else out

    def convex_kinks(self) -> np.ndarray:
        """Interior knots where the slope increases."""
        s = self.slopes
        up = np.diff(s) > slope_tolerance(s)
        return self.knots[1:-1][up]

    def integrate(self, d: PiecewiseLogLinear) -> float:
        """Exact int Delta(x) exp(phi(x)) dx over the support of d."""
        inner = self.knots[(self.knots > d.lo) & (self.knots < d.hi)]
        x = np.union1d(d.knots, inner)
        a, b = x[:-1], x[1:]
        w = b - a
        e0, e1, _ = segment_moments(d.eval_log(a), d.eval_log(b))
        da, db = self(a), self(b)
        return float(np.sum(w * (da * e0 + (db - da) * e1)))


class Quadratic:
    """Delta(x) = c0 + c1 x + c2 x^2."""

    def __init__(self, c0: float = 0.0, c1: float = 0.0, c2: float = 0.0):
        self.c0, self.c1, self.c2 = float(c0), float(c1), float(c2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c0 + x * (self.c1 + self.c2 * x)
        return float(out) if out.ndim == 0 else out

    def convex_kinks(self) -> np.ndarray:
        return np.empty(0)

    @property
    def concave(self) -> bool:
        return self.c2 <= 0.0

    def integrate(self, d: PiecewiseLogLinear) -> float:
        a, b = d.knots[:-1], d.knots[1:]
        w = b - a
        e0, e1, e2 = segment_moments(d.log_values[:-1], d.log_values[1:])
        value = self(a)
        deriv = self.c1 + 2.0 * self.c2 * a
        return float(np.sum(w * (value * e0 + deriv * w * e1 + self.c2 * w * w * e2)))


def empirical_integral(delta, sample) -> float:
    """int Delta dF_n."""
    return float(np.sum(sample.weights * delta(sample.distinct)))


def is_admissible(delta, d: PiecewiseLogLinear) -> bool:
    """Whether d.log_values + lambda * Delta stays concave for some lambda > 0.

    Convex kinks of Delta are allowed only at knots of d, and a quadratic
    part must be concave.
    """
    if isinstance(delta, Quadratic) and not delta.concave:
        return False
    kinks = delta.convex_kinks()
    if kinks.size == 0:
        return True
    knots = d.knot_set()
    scale = d.hi - d.lo
    near = np.min(np.abs(kinks[:, None] - knots[None, :]), axis=1) <= 1e-9 * scale
    return bool(np.all(near))
