"""Active-set Newton fitter for the log-concave NPMLE.

The log-density is parametrized by its values theta at a set of active
knots drawn from the distinct observations; between knots it is linear.
On a fixed knot set the criterion

    Psi(theta) = sum_i w_i phi(x_i) - int exp(phi)

is smooth and strictly concave with a tridiagonal Hessian, so it is solved by
damped Newton. A Newton solution with a convex kink is pulled back along the
segment from the previous feasible point to the first kink that flattens, and
that knot is dropped. A knot is added at the observation where D(t), the
directional derivative of Psi for a concave kink at t, is largest. The loop
stops when the external certificate passes.

Work is done after mapping [X_1, X_n] onto [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .certify import CertificateReport, check_integral_characterization, DEFAULT_GRID
from .density import PLConcaveLogDensity, PiecewiseLogLinear
from .kernels import segment_moments
from .perturb import empirical_integral
from .sample import Sample, SampleError

ARMIJO = 1e-4
# Newton decrement below which full steps are taken without line search
_QUADRATIC_REGION = 1e-10
_NEWTON_DONE = 1e-28
_MAX_NEWTON = 200
_INITIAL_KNOTS = 8
# D above this (rescaled units) is a real violation rather than rounding
_ADD_TOL = 1e-13
# data the rescaled problem can resolve: squared widths must stay normal floats,
# and distinct points must stay a few ulps apart on [0, 1]
_MIN_RANGE, _MAX_RANGE = 1e-100, 1e100
_MIN_GAP = 4.0 * np.finfo(float).eps


class FitError(RuntimeError):
    """The certificate could not be met; carries the last iterate for diagnosis."""

    def __init__(self, message, density=None, certificate=None, iterations=0):
        super().__init__(message)
        self.density = density
        self.certificate = certificate
        self.iterations = iterations


@dataclass(frozen=True)
class FitConfig:
    cert_tolerance: float = 1e-8
    max_iterations: int = 500
    line_search_shrink: float = 0.5
    init: str = "gaussian"
    grid_size: int = DEFAULT_GRID

    def __post_init__(self):
        if not self.cert_tolerance > 0:
            raise ValueError("cert_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if self.init not in ("gaussian", "flat"):
            raise ValueError("init must be 'gaussian' or 'flat'")


@dataclass(frozen=True)
class FitResult:
    density: PLConcaveLogDensity
    log_likelihood: float
    iterations: int
    certificate: CertificateReport
    history: tuple = field(default=(), repr=False)

    @property
    def knots(self) -> np.ndarray:
        return self.density.knot_set()


def objective(s: Sample, d: PiecewiseLogLinear) -> float:
    """Psi_n(phi) = int phi dF_n - int exp(phi); -inf unless phi is finite on [X_1, X_n]."""
    if d.lo > s.lo or d.hi < s.hi:
        return -math.inf
    return float(np.sum(s.weights * d.eval_log(s.distinct))) - d.total_mass()


def directional_derivative(s: Sample, d: PiecewiseLogLinear, delta) -> float:
    """lim_{t -> 0+} (Psi_n(phi + t Delta) - Psi_n(phi)) / t."""
    return empirical_integral(delta, s) - delta.integrate(d)


class _Problem:
    """Rescaled data and the pieces of Psi that depend on the knot set."""

    def __init__(self, s: Sample, shrink: float):
        scale = s.hi - s.lo
        if not _MIN_RANGE <= scale <= _MAX_RANGE:
            raise SampleError(f"data range {scale!r} is outside [{_MIN_RANGE:g}, {_MAX_RANGE:g}]; rescale the data")
        y = s.to_unit(s.distinct)
        y[0], y[-1] = 0.0, 1.0
        if np.min(np.diff(y)) < _MIN_GAP:
            raise SampleError(
                "observations closer than floating-point resolution relative to the data range"
            )
        self.y = y
        self.w = np.asarray(s.weights, dtype=float)
        self.shrink = shrink
        cdf = np.cumsum(self.w)
        self.cdf_n = cdf
        self.icdf_n = np.concatenate(([0.0], np.cumsum(cdf[:-1] * np.diff(y))))
        self.history = []

    def linear_term(self, active):
        t = self.y[active]
        k = np.clip(np.searchsorted(t, self.y, side="right") - 1, 0, t.size - 2)
        lam = (self.y - t[k]) / (t[k + 1] - t[k])
        c = np.bincount(k, self.w * (1.0 - lam), minlength=t.size)
        c += np.bincount(k + 1, self.w * lam, minlength=t.size)
        return c

    @staticmethod
    def value(theta, t, c):
        e0, _, _ = segment_moments(theta[:-1], theta[1:])
        return float(c @ theta - np.sum(np.diff(t) * e0))

    def newton(self, active, theta):
        t = self.y[active]
        c = self.linear_term(active)
        h = np.diff(t)
        current = self.value(theta, t, c)
        for _ in range(_MAX_NEWTON):
            p, q = theta[:-1], theta[1:]
            _, e1, e2 = segment_moments(p, q)
            _, l1, l2 = segment_moments(q, p)
            grad = c.copy()
            grad[:-1] -= h * l1
            grad[1:] -= h * e1
            band = np.zeros((2, theta.size))
            band[1, :-1] += h * l2
            band[1, 1:] += h * e2
            band[0, 1:] = h * (e1 - e2)
            try:
                step = solveh_banded(band, grad)
            except np.linalg.LinAlgError:
                break
            decrement = float(grad @ step)
            if not decrement > _NEWTON_DONE:
                break
            if decrement < _QUADRATIC_REGION:
                theta = theta + step
                current = self.value(theta, t, c)
                continue
            size = 1.0
            while True:
                trial = theta + size * step
                with np.errstate(over="ignore"):
                    value = self.value(trial, t, c)
                if value >= current + ARMIJO * size * decrement:
                    break
                size *= self.shrink
                if size < 1e-14:
                    return theta
            theta, current = trial, value
        return theta

    def _record(self, active, theta):
        # Psi at an accepted (concave) iterate
        t = self.y[active]
        self.history.append(self.value(theta, t, self.linear_term(active)))

    def kinks(self, active, theta):
        s = np.diff(theta) / np.diff(self.y[active])
        return np.diff(s)

    def solve(self, active, theta):
        """Maximize over the current knots, dropping knots that turn convex."""
        while True:
            candidate = self.newton(active, theta)
            new = self.kinks(active, candidate)
            if active.size <= 2 or np.all(new <= 0.0):
                self._record(active, candidate)
                return active, candidate
            old = np.minimum(self.kinks(active, theta), 0.0)
            bad = new > 0.0
            frac = np.ones_like(new)
            frac[bad] = old[bad] / (old[bad] - new[bad])
            t_star = float(np.min(frac))
            theta = theta + t_star * (candidate - theta)
            drop = np.flatnonzero(bad & (frac <= t_star)) + 1
            keep = np.ones(active.size, dtype=bool)
            keep[drop] = False
            active, theta = active[keep], theta[keep]
            self._record(active, theta)

    def d_at_data(self, active, theta):
        """D(y_j) at every distinct observation (rescaled units)."""
        t = self.y[active]
        h = np.diff(t)
        e0, _, _ = segment_moments(theta[:-1], theta[1:])
        _, l1, _ = segment_moments(theta[1:], theta[:-1])
        cdf_k = np.concatenate(([0.0], np.cumsum(h * e0)))
        icdf_k = np.concatenate(([0.0], np.cumsum(h * h * l1 + h * cdf_k[:-1])))
        k = np.clip(np.searchsorted(t, self.y, side="right") - 1, 0, t.size - 2)
        phi = np.interp(self.y, t, theta)
        dist = self.y - t[k]
        _, part, _ = segment_moments(phi, theta[k])
        icdf_hat = icdf_k[k] + dist * cdf_k[k] + dist * dist * part
        return icdf_hat - self.icdf_n, cdf_k

    def next_knot(self, active, theta, bracket_tol):
        """Observation to activate next, or None when no violation is visible."""
        d_vals, cdf_k = self.d_at_data(active, theta)
        d_vals[active] = -np.inf
        j = int(np.argmax(d_vals))
        if d_vals[j] > _ADD_TOL:
            return j
        # F_hat(t) > F_n(t) at a knot makes D rise just right of it, and
        # F_hat(t) < F_n(t-) just left of it; both can hide below _ADD_TOL
        upper = self.cdf_n[active]
        over = cdf_k - upper
        under = (upper - self.w[active]) - cdf_k
        for k in np.argsort(-np.maximum(over, under)):
            if max(over[k], under[k]) <= bracket_tol:
                break
            j = active[k] + (1 if over[k] > under[k] else -1)
            if 0 <= j < self.y.size and j not in active:
                return int(j)
        return None


def _initial(problem: _Problem, init: str):
    m = problem.y.size
    if init == "flat" or m == 2:
        return np.array([0, m - 1]), np.zeros(2)
    active = np.unique(np.round(np.linspace(0, m - 1, min(m, _INITIAL_KNOTS))).astype(int))
    mu = float(problem.w @ problem.y)
    var = float(problem.w @ (problem.y - mu) ** 2)
    y = problem.y[active]
    theta = -0.5 * (y - mu) ** 2 / var - 0.5 * math.log(2.0 * math.pi * var)
    return active, theta


def _to_density(s: Sample, active, theta) -> PLConcaveLogDensity:
    scale = s.hi - s.lo
    d = PLConcaveLogDensity(s.distinct[active], theta - math.log(scale))
    return d.normalize()


def fit(s: Sample, cfg: FitConfig | None = None) -> FitResult:
    """Compute the log-concave NPMLE of ``s`` and certify it."""
    cfg = cfg or FitConfig()
    problem = _Problem(s, cfg.line_search_shrink)
    active, theta = _initial(problem, cfg.init)
    bracket_tol = 0.1 * cfg.cert_tolerance
    density = None
    cert = None
    for iteration in range(1, cfg.max_iterations + 1):
        active, theta = problem.solve(active, theta)
        j = problem.next_knot(active, theta, bracket_tol)
        if j is not None:
            pos = int(np.searchsorted(active, j))
            value = np.interp(problem.y[j], problem.y[active], theta)
            active = np.insert(active, pos, j)
            theta = np.insert(theta, pos, value)
            continue
        density = _to_density(s, active, theta)
        cert = check_integral_characterization(s, density, cfg.grid_size, cfg.cert_tolerance)
        if cert.passed:
            return FitResult(
                density=density,
                log_likelihood=objective(s, density),
                iterations=iteration,
                certificate=cert,
                history=tuple(problem.history),
            )
        raise FitError(
            f"certificate failed ({', '.join(cert.failed_checks())}) with no knot left to add",
            density, cert, iteration,
        )
    density = _to_density(s, active, theta)
    cert = check_integral_characterization(s, density, cfg.grid_size, cfg.cert_tolerance)
    raise FitError(
        f"no certified fit within {cfg.max_iterations} iterations "
        f"(failing: {', '.join(cert.failed_checks()) or 'none'})",
        density, cert, cfg.max_iterations,
    )
