"""Independent reference computations used by the tests.

Nothing here calls the package's closed forms: integrals go through adaptive
quadrature (scipy or mpmath) and empirical quantities through brute-force sums.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy import integrate, stats

mp.mp.dps = 40


def J_mp(y: float, k: int = 0) -> float:
    """int_0^1 u^k e^{u y} du to 40 digits."""
    y = mp.mpf(y)
    return float(mp.quad(lambda u: u**k * mp.e ** (u * y), [0, 1]))


def loglinear_pdf(knots, values):
    knots = np.asarray(knots, float)
    values = np.asarray(values, float)

    def f(x):
        if x < knots[0] or x > knots[-1]:
            return 0.0
        return math.exp(np.interp(x, knots, values))

    return f


def quad_mass(knots, values, a, b) -> float:
    """int_a^b of the piecewise exp-linear density, splitting at knots."""
    if b <= a:
        return 0.0
    f = loglinear_pdf(knots, values)
    pts = [a] + [k for k in knots if a < k < b] + [b]
    return float(sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
                     for lo, hi in zip(pts[:-1], pts[1:])))


def quad_cdf(knots, values, x) -> float:
    return quad_mass(knots, values, knots[0], min(max(x, knots[0]), knots[-1]))


def quad_integrated_cdf(knots, values, t) -> float:
    """int_{x_0}^t F(r) dr = int_{x_0}^t (t - x) f(x) dx."""
    f = loglinear_pdf(knots, values)
    pts = [knots[0]] + [k for k in knots if knots[0] < k < t] + [t]
    return float(sum(integrate.quad(lambda x: (t - x) * f(x), lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
                     for lo, hi in zip(pts[:-1], pts[1:])))


def quad_moments(knots, values):
    f = loglinear_pdf(knots, values)
    pieces = list(zip(knots[:-1], knots[1:]))

    def q(g):
        return sum(integrate.quad(lambda x: g(x) * f(x), a, b, epsabs=0, epsrel=1e-13)[0] for a, b in pieces)

    mass = q(lambda x: 1.0)
    mean = q(lambda x: x) / mass
    var = q(lambda x: (x - mean) ** 2) / mass
    return mean, var


def brute_integrated_ecdf(values, t) -> float:
    """int_{X_1}^t F_n = (1/n) sum (t - X_i)_+."""
    values = np.asarray(values, float)
    return float(np.sum(np.maximum(t - values, 0.0)) / values.size)


def riemann_integrated_ecdf(values, t, points: int = 10_000) -> float:
    """Left Riemann sum of F_n on a uniform grid over [X_1, t]."""
    values = np.sort(np.asarray(values, float))
    grid = np.linspace(values[0], t, points + 1)[:-1]
    h = (t - values[0]) / points
    return float(np.sum(np.searchsorted(values, grid, side="right") / values.size) * h)


def convolution_density(knots, values, gamma, x) -> float:
    """int f(y) phi_gamma(x - y) dy by adaptive quadrature."""
    f = loglinear_pdf(knots, values)
    pts = list(zip(knots[:-1], knots[1:]))
    return float(sum(
        integrate.quad(lambda y: f(y) * stats.norm.pdf(x - y, scale=gamma), a, b,
                       epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        for a, b in pts
    ))


def uniform_D(t):
    """D(t) for the uniform fit of the sample {0, 1}."""
    t = np.asarray(t, float)
    return t * t / 2 - t / 2


def ks_distance(draws, cdf) -> float:
    x = np.sort(draws)
    n = x.size
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
