"""Exponential moment kernels for exp-linear pieces.

J_k(y) = int_0^1 u^k exp(u y) du, evaluated without cancellation near y = 0.
Every integral over a segment on which the log-density is linear reduces to
one of these.
"""

from __future__ import annotations

import math

import numpy as np

# J_0 switches to its Taylor polynomial below this |y|
J0_SERIES_CUTOFF = 1e-4
# J_1 and J_2 closed forms cancel badly for |y| < 1; the series is used there
JK_SERIES_CUTOFF = 1.0
_JK_TERMS = 24


def _j0_closed(y):
    return np.expm1(y) / y


def _j0_series(y):
    # 1 + y/2 + y^2/6 + ... + y^6/5040
    c = [1.0 / math.factorial(k + 1) for k in range(7)]
    out = np.full_like(y, c[-1])
    for ck in reversed(c[:-1]):
        out = out * y + ck
    return out


def _jk_series(y, k):
    # sum_i y^i / (i! (i + k + 1))
    out = np.full_like(y, 1.0 / (math.factorial(_JK_TERMS - 1) * (_JK_TERMS + k)))
    for i in range(_JK_TERMS - 2, -1, -1):
        out = out * y + 1.0 / (math.factorial(i) * (i + k + 1))
    return out


def _j1_closed(y):
    return (np.expm1(y) * (y - 1.0) + y) / (y * y)


def _j2_closed(y):
    return (np.exp(y) * (y * y - 2.0 * y + 2.0) - 2.0) / (y * y * y)


def exp_mean_kernel(y):
    """J(y) = (e^y - 1) / y with J(0) = 1."""
    y_arr = np.asarray(y, dtype=float)
    small = np.abs(y_arr) < J0_SERIES_CUTOFF
    safe = np.where(small, 1.0, y_arr)
    with np.errstate(over="ignore"):
        out = np.where(small, _j0_series(y_arr), _j0_closed(safe))
    return float(out) if out.ndim == 0 else out


def exp_moment_kernel(y, k: int):
    """J_k(y) = int_0^1 u^k e^{u y} du for k in {0, 1, 2}."""
    if k == 0:
        return exp_mean_kernel(y)
    if k not in (1, 2):
        raise ValueError("only k in {0, 1, 2} is supported")
    y_arr = np.asarray(y, dtype=float)
    small = np.abs(y_arr) < JK_SERIES_CUTOFF
    safe = np.where(small, 2.0, y_arr)
    closed = _j1_closed if k == 1 else _j2_closed
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(small, _jk_series(y_arr, k), closed(safe))
    return float(out) if out.ndim == 0 else out


def segment_moments(p, q):
    """E_k = int_0^1 u^k exp((1-u) p + u q) du for k = 0, 1, 2.

    The exponential factor is taken at the larger endpoint, so only kernels at
    nonpositive arguments are evaluated and nothing overflows unless the
    result itself does.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    y = q - p
    z = -np.abs(y)
    j0 = exp_mean_kernel(z)
    j1 = exp_moment_kernel(z, 1)
    j2 = exp_moment_kernel(z, 2)
    rising = y > 0
    # for rising segments substitute u -> 1 - u and expand (1 - r)^k
    e0 = j0
    e1 = np.where(rising, j0 - j1, j1)
    e2 = np.where(rising, j0 - 2.0 * j1 + j2, j2)
    with np.errstate(over="ignore"):
        scale = np.exp(np.maximum(p, q))
    return scale * e0, scale * e1, scale * e2


# below this |theta| the inverse uses its second-order expansion
INVERSE_SERIES_CUTOFF = 1e-6


def inverse_exp_segment(u, theta):
    """Solve (e^{theta r} - 1) / (e^theta - 1) = u for r in [0, 1].

    This is the inverse CDF of the density proportional to e^{theta r} on
    [0, 1]; theta = 0 gives r = u.
    """
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    tiny = np.abs(theta) < INVERSE_SERIES_CUTOFF
    safe = np.where(tiny, 1.0, theta)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        falling = np.log1p(np.expm1(np.minimum(safe, 0.0)) * u) / safe
        rising = 1.0 + np.log1p((1.0 - u) * np.expm1(-np.maximum(safe, 0.0))) / safe
    series = u + theta * u * (1.0 - u) / 2.0
    out = np.where(tiny, series, np.where(safe < 0, falling, rising))
    out = np.clip(out, 0.0, 1.0)
    # the endpoints map to the segment ends exactly, whatever the rounding above
    out = np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 1.0, out))
    return float(out) if out.ndim == 0 else out
