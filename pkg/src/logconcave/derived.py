"""Estimators built on a fitted log-density: sampler, smoothed density, hazard, quantiles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .density import PLConcaveLogDensity, PiecewiseLogLinear
from .kernels import inverse_exp_segment
from .sample import Sample


@dataclass(frozen=True)
class SmoothedDensity:
    """Gaussian convolution of a fitted density.

    ``gamma_sq`` is chosen so that the total variance equals ``sigma_hat_sq``,
    the unbiased sample variance n / (n - 1) Var(F_n).
    """

    base: PiecewiseLogLinear
    gamma_sq: float
    sigma_hat_sq: float

    def __post_init__(self):
        if not self.gamma_sq >= 0:
            raise ValueError("gamma_sq must be nonnegative")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.gamma_sq)

    def mean(self) -> float:
        return self.base.moments()[0]

    def variance(self) -> float:
        return self.base.moments()[1] + self.gamma_sq

    def to_dict(self) -> dict:
        out = self.base.to_dict()
        out["gamma_sq"] = self.gamma_sq
        out["sigma_hat_sq"] = self.sigma_hat_sq
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "SmoothedDensity":
        base = PLConcaveLogDensity.from_dict(data)
        return cls(base, float(data["gamma_sq"]), float(data["sigma_hat_sq"]))


def smooth(d: PiecewiseLogLinear, s: Sample) -> SmoothedDensity:
    n = s.n
    sigma_hat_sq = n / (n - 1) * s.variance()
    # nonnegative up to rounding since Var(F_hat) <= Var(F_n) at the MLE
    gamma_sq = max(0.0, sigma_hat_sq - d.moments()[1])
    return SmoothedDensity(d, gamma_sq, sigma_hat_sq)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _draw_base(d: PiecewiseLogLinear, rng: np.random.Generator, count: int) -> np.ndarray:
    # (a) segment index with probability equal to its mass, (b) inverse CDF within it
    cum = np.cumsum(d.segment_probabilities())
    j = np.minimum(np.searchsorted(cum, rng.random(count) * cum[-1], side="right"), cum.size - 1)
    u = rng.random(count)
    theta = d.log_values[j + 1] - d.log_values[j]
    width = d.knots[j + 1] - d.knots[j]
    return d.knots[j] + width * inverse_exp_segment(u, theta)


def sample_fit(d: PiecewiseLogLinear, seed, count: int) -> np.ndarray:
    """i.i.d. draws from exp(phi).

    The stream is numpy's PCG64 seeded through ``SeedSequence(seed)``: first
    ``count`` uniforms pick segments, the next ``count`` place points inside.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    return _draw_base(d, _rng(seed), count)


def sample_smoothed(sd: SmoothedDensity, seed, count: int) -> np.ndarray:
    """Draws X + gamma Z; the X part consumes the same stream as sample_fit."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = _rng(seed)
    x = _draw_base(sd.base, rng, count)
    if sd.gamma_sq == 0.0:
        return x
    return x + sd.gamma * rng.standard_normal(count)


def _log_normal_mass(lo, hi):
    """log(Phi(hi) - Phi(lo)) for lo < hi, using whichever tail is smaller."""
    upper = lo > 0
    a = np.where(upper, -hi, lo)
    b = np.where(upper, -lo, hi)
    la, lb = log_ndtr(a), log_ndtr(b)
    with np.errstate(divide="ignore"):
        return lb + np.log(-np.expm1(la - lb))


def smoothed_log_density(sd: SmoothedDensity, x):
    d = sd.base
    x_arr = np.asarray(x, dtype=float)
    if sd.gamma_sq == 0.0:
        return d.eval_log(x_arr)
    g = sd.gamma
    lo, hi = d.knots[:-1], d.knots[1:]
    slope = d.slopes
    xs = x_arr[..., None]
    shift = slope * g
    terms = (
        d.log_values[:-1]
        + slope * (xs - lo)
        + 0.5 * shift * shift
        + _log_normal_mass((lo - xs) / g - shift, (hi - xs) / g - shift)
    )
    out = logsumexp(terms, axis=-1)
    return float(out) if out.ndim == 0 else out


def smoothed_density_eval(sd: SmoothedDensity, x):
    """Density of the Gaussian-smoothed estimator, summed over exp-linear pieces in log space."""
    with np.errstate(under="ignore"):
        out = np.exp(smoothed_log_density(sd, x))
    return float(out) if np.ndim(out) == 0 else out


def hazard_eval(d: PiecewiseLogLinear, x):
    """f / (1 - F), with 1 - F accumulated from the right end of the support."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr >= d.hi):
        raise ValueError(f"hazard undefined at or beyond the upper support end {d.hi!r}")
    out = d.pdf(x_arr) / d.sf(x_arr)
    return float(out) if np.ndim(out) == 0 else out


def quantile(d: PiecewiseLogLinear, p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
        raise ValueError("probability must lie in [0, 1]")
    if not d.normalized:
        raise ValueError("quantile requires a normalized density")
    return d.ppf(p_arr)
