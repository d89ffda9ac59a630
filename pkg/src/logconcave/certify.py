"""Finite verifiers for the optimality conditions of the log-concave MLE.

The primary certificate is the integrated-CDF process

    D(t) = int_{X_1}^t (F_hat - F_n)(r) dr,

which is nonpositive on [X_1, X_n] and vanishes at every knot of the fitted
log-density exactly when the fit is the MLE. Between consecutive data points
F_n is constant and F_hat increasing, so D is convex there and its maximum
over each data interval sits at an observation. Distances and moments are
reported after mapping [X_1, X_n] onto [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import PiecewiseLogLinear
from .perturb import PiecewiseLinear, Quadratic, empirical_integral, is_admissible
from .sample import Sample

__all__ = [
    "CertificateError",
    "CertificateReport",
    "PiecewiseLinear",
    "Quadratic",
    "check_integral_characterization",
    "check_perturbation",
    "check_knot_bracket",
    "check_lemma_a1",
    "check_lemma_a1_ratio",
    "check_monotone_ratios",
    "marshall_compare",
]

DEFAULT_GRID = 512


class CertificateError(ValueError):
    """Inputs for which a check is undefined (support mismatch, bad perturbation)."""


@dataclass(frozen=True)
class CertificateReport:
    max_inequality_violation: float
    max_knot_equality_gap: float
    mean_gap: float
    variance_slack: float
    knot_bracket_ok: bool
    knot_bracket_gap: float
    tolerance: float
    scale: float
    knots: np.ndarray = field(repr=False)
    d_t: np.ndarray = field(repr=False)
    d_values: np.ndarray = field(repr=False)

    def failed_checks(self) -> list[str]:
        tol = self.tolerance
        failed = []
        if not self.max_inequality_violation <= tol:
            failed.append("integral_inequality")
        if not self.max_knot_equality_gap <= tol:
            failed.append("knot_equality")
        if not self.mean_gap <= tol:
            failed.append("mean_equality")
        if not self.variance_slack >= -tol:
            failed.append("variance_inequality")
        if not self.knot_bracket_ok:
            failed.append("knot_bracket")
        return failed

    @property
    def passed(self) -> bool:
        return not self.failed_checks()

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failed_checks": self.failed_checks(),
            "tolerance": self.tolerance,
            "max_inequality_violation": self.max_inequality_violation,
            "max_knot_equality_gap": self.max_knot_equality_gap,
            "mean_gap": self.mean_gap,
            "variance_slack": self.variance_slack,
            "knot_bracket_ok": self.knot_bracket_ok,
            "knot_bracket_gap": self.knot_bracket_gap,
            "scale": self.scale,
            "knots": [float(v) for v in self.knots],
            "d_process": {
                "t": [float(v) for v in self.d_t],
                "D": [float(v) for v in self.d_values],
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def d_table_tsv(self) -> str:
        """Two-column (t, D(t)) table in the data's own units."""
        lines = ["t\tD"]
        lines += [f"{t!r}\t{v!r}" for t, v in zip(self.d_t.tolist(), self.d_values.tolist())]
        return "\n".join(lines) + "\n"


def _check_support(s: Sample, d: PiecewiseLogLinear):
    slack = 1e-12 * (s.hi - s.lo)
    if abs(d.lo - s.lo) > slack or abs(d.hi - s.hi) > slack:
        raise CertificateError(
            f"fit support [{d.lo!r}, {d.hi!r}] does not match data range [{s.lo!r}, {s.hi!r}]"
        )


def _stationary_points(s: Sample, d: PiecewiseLogLinear) -> np.ndarray:
    # D'(t) = F_hat(t) - F_n(x_j) on [x_j, x_{j+1}); its root is a local minimum
    x = s.distinct
    level = s.ecdf(x[:-1])
    fhat = d.cdf(x)
    inside = (fhat[:-1] < level) & (level < fhat[1:])
    t = d.ppf(level[inside])
    return np.clip(t, x[:-1][inside], x[1:][inside])


def d_process(s: Sample, d: PiecewiseLogLinear, t) -> np.ndarray:
    """D(t) in the data's own units."""
    t = np.clip(np.asarray(t, dtype=float), s.lo, s.hi)
    return d.integrated_cdf(np.clip(t, d.lo, d.hi)) - s.integrated_ecdf(t)


def check_knot_bracket(s: Sample, d: PiecewiseLogLinear, tol: float = 1e-8) -> tuple[bool, float]:
    """F_n(t-) <= F_hat(t) <= F_n(t) at each knot t; returns (ok, worst excess)."""
    knots = d.knot_set()
    fhat = d.cdf(knots)
    excess = np.maximum(fhat - s.ecdf(knots), s.ecdf_left(knots) - fhat)
    worst = float(np.max(excess))
    return worst <= tol, worst


def check_integral_characterization(
    s: Sample, d: PiecewiseLogLinear, grid_size: int = DEFAULT_GRID, tol: float = 1e-8
) -> CertificateReport:
    _check_support(s, d)
    if not d.normalized:
        raise CertificateError("certificate requires a normalized density")
    scale = s.hi - s.lo
    knots = d.knot_set()
    t = np.unique(
        np.concatenate(
            (s.distinct, d.knots, np.linspace(s.lo, s.hi, grid_size), _stationary_points(s, d))
        )
    )
    dv = d_process(s, d, t)
    at_knots = d_process(s, d, knots)
    mean_hat, var_hat = d.moments()
    ok, worst = check_knot_bracket(s, d, tol)
    return CertificateReport(
        max_inequality_violation=float(np.max(dv)) / scale,
        max_knot_equality_gap=float(np.max(np.abs(at_knots))) / scale,
        mean_gap=abs(mean_hat - s.mean()) / scale,
        variance_slack=(s.variance() - var_hat) / scale / scale,
        knot_bracket_ok=ok,
        knot_bracket_gap=worst,
        tolerance=tol,
        scale=scale,
        knots=knots,
        d_t=t,
        d_values=dv,
    )


def check_perturbation(s: Sample, d: PiecewiseLogLinear, delta) -> float:
    """Slack int Delta d(F_hat - F_n); nonnegative at the MLE for admissible Delta."""
    _check_support(s, d)
    if not is_admissible(delta, d):
        raise CertificateError("perturbation is not admissible: convex kink off the knot set")
    return delta.integrate(d) - empirical_integral(delta, s)


def _within(lhs, rhs, slack):
    return np.all(lhs <= rhs + slack * np.maximum(1.0, np.abs(rhs)))


def check_lemma_a1(d: PiecewiseLogLinear, x1, x2, slack: float = 1e-12) -> bool:
    """sqrt(f(x1) f(x2)) <= (F(x2) - F(x1)) / (x2 - x1) for x1 < x2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 >= x2):
        raise ValueError("need x1 < x2")
    lhs = np.exp(0.5 * (d.eval_log(x1) + d.eval_log(x2)))
    rhs = d.interval_mass(x1, x2) / (x2 - x1)
    return bool(_within(lhs, rhs, slack))


def check_lemma_a1_ratio(d: PiecewiseLogLinear, x_o, x, slack: float = 1e-12) -> bool:
    """Tail bounds on f(x) / f(x_o) in terms of h = |F(x) - F(x_o)|.

    The squared bound always applies; the exponential one only when
    f(x_o) |x - x_o| >= h.
    """
    x_o, x = np.broadcast_arrays(np.atleast_1d(np.asarray(x_o, dtype=float)), np.atleast_1d(np.asarray(x, dtype=float)))
    if np.any(x == x_o):
        raise ValueError("need x != x_o")
    f_o = d.pdf(x_o)
    ratio = d.pdf(x) / f_o
    h = d.interval_mass(np.minimum(x, x_o), np.maximum(x, x_o))
    r = f_o * np.abs(x - x_o)
    far = r >= h
    squared_ok = _within(ratio, (h / r) ** 2, slack)
    exp_ok = _within(ratio[far], np.exp(1.0 - r[far] / h[far]), slack)
    return bool(squared_ok and exp_ok)


def check_monotone_ratios(d: PiecewiseLogLinear, grid_size: int = 1000, slack: float = 1e-10) -> bool:
    """f/F nonincreasing and f/(1 - F) nondecreasing on a grid inside the support."""
    x = np.linspace(d.lo, d.hi, grid_size)
    f = d.pdf(x)
    reverse = f[1:] / d.cdf(x[1:])
    hazard = f[:-1] / d.sf(x[:-1])
    ok_reverse = _within(reverse[1:], reverse[:-1], slack)
    ok_hazard = _within(-hazard[1:], -hazard[:-1], slack)
    return bool(ok_reverse and ok_hazard)


def _ecdf_sup(s: Sample, true_cdf) -> float:
    f = true_cdf(s.distinct)
    return float(max(np.max(np.abs(s.ecdf(s.distinct) - f)), np.max(np.abs(s.ecdf_left(s.distinct) - f))))


def marshall_compare(
    s: Sample, fit, true_cdf: Callable, grid_size: int = 4000
) -> tuple[float, float]:
    """(sup|F_hat - F|, sup|F_n - F|) over the real line.

    ``fit`` is a density, or a Sample to compare an empirical CDF exactly.
    """
    sup_ecdf = _ecdf_sup(s, true_cdf)
    if isinstance(fit, Sample):
        return _ecdf_sup(fit, true_cdf), sup_ecdf
    x = np.unique(np.concatenate((s.distinct, fit.knots, np.linspace(fit.lo, fit.hi, grid_size))))
    sup_fit = float(np.max(np.abs(fit.cdf(x) - true_cdf(x))))
    return sup_fit, sup_ecdf
