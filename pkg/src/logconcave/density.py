"""Piecewise-linear log-densities and their closed-form integrals."""

from __future__ import annotations

import json
import math

import numpy as np

from .kernels import inverse_exp_segment, segment_moments


class DensityError(ValueError):
    pass


def slope_tolerance(slopes) -> float:
    """Threshold below which a change of slope is treated as no kink."""
    slopes = np.asarray(slopes, dtype=float)
    biggest = float(np.max(np.abs(slopes))) if slopes.size else 0.0
    return 1e-9 * (biggest + 1.0)


class PiecewiseLogLinear:
    """exp(phi) with phi linear between knots and -inf outside [x_0, x_m].

    No shape restriction; :class:`PLConcaveLogDensity` adds concavity.
    All evaluation methods accept scalars or arrays.
    """

    def __init__(self, knots, log_values, normalized: bool = False):
        knots = np.array(knots, dtype=float)
        log_values = np.array(log_values, dtype=float)
        if knots.ndim != 1 or knots.shape != log_values.shape:
            raise DensityError("knots and log_values must be 1-d arrays of equal length")
        if knots.size < 2:
            raise DensityError("need at least two knots")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(log_values))):
            raise DensityError("knots and log_values must be finite")
        if np.any(np.diff(knots) <= 0):
            raise DensityError("knots must be strictly increasing")
        knots.flags.writeable = False
        log_values.flags.writeable = False
        self.knots = knots
        self.log_values = log_values

        widths = np.diff(knots)
        p, q = log_values[:-1], log_values[1:]
        e0, e1_left, _ = segment_moments(q, p)
        self._widths = widths
        self._seg_mass = widths * e0
        # int over the segment of (b - x) f(x) dx, i.e. the segment's share of int F
        self._seg_icdf = widths * widths * e1_left
        self._cdf_knots = np.concatenate(([0.0], np.cumsum(self._seg_mass)))
        self._sf_knots = np.concatenate((np.cumsum(self._seg_mass[::-1])[::-1], [0.0]))
        self._icdf_knots = np.concatenate(
            ([0.0], np.cumsum(self._seg_icdf + widths * self._cdf_knots[:-1]))
        )
        self.normalized = bool(normalized)
        if self.normalized and abs(self.total_mass() - 1.0) > 1e-12:
            raise DensityError(f"density flagged normalized but has mass {self.total_mass()!r}")

    def __repr__(self):
        return (
            f"{type(self).__name__}(m={self.knots.size - 1}, "
            f"support=[{self.lo:g}, {self.hi:g}], normalized={self.normalized})"
        )

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.log_values) / self._widths

    def left_slopes(self) -> np.ndarray:
        """phi'(x_j -) at each knot, nan at x_0."""
        return np.concatenate(([np.nan], self.slopes))

    def right_slopes(self) -> np.ndarray:
        return np.concatenate((self.slopes, [np.nan]))

    def knot_set(self) -> np.ndarray:
        """Endpoints plus interior knots where the slope actually changes."""
        s = self.slopes
        tol = slope_tolerance(s)
        kink = np.abs(np.diff(s)) > tol
        keep = np.concatenate(([True], kink, [True]))
        return self.knots[keep]

    # ----- pointwise evaluation -------------------------------------------------

    def _locate(self, x):
        k = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(k, 0, self.knots.size - 2)

    def eval_log(self, x):
        x_arr = np.asarray(x, dtype=float)
        inside = (x_arr >= self.lo) & (x_arr <= self.hi)
        phi = np.interp(x_arr, self.knots, self.log_values)
        out = np.where(inside, phi, -np.inf)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        with np.errstate(under="ignore"):
            out = np.exp(self.eval_log(x))
        return float(out) if np.ndim(out) == 0 else out

    def total_mass(self) -> float:
        return float(self._cdf_knots[-1])

    def _inside_pieces(self, x_arr):
        xc = np.clip(x_arr, self.lo, self.hi)
        k = self._locate(xc)
        a = self.knots[k]
        b = self.knots[k + 1]
        phi = np.interp(xc, self.knots, self.log_values)
        return xc, k, a, b, phi

    def cdf(self, x):
        """F(x) accumulated from the left end."""
        x_arr = np.asarray(x, dtype=float)
        xc, k, a, _, phi = self._inside_pieces(x_arr)
        e0, _, _ = segment_moments(self.log_values[k], phi)
        out = self._cdf_knots[k] + (xc - a) * e0
        out = np.where(x_arr >= self.hi, self.total_mass(), out)
        out = np.where(x_arr <= self.lo, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def sf(self, x):
        """Mass to the right of x, accumulated from the right end."""
        x_arr = np.asarray(x, dtype=float)
        xc, k, _, b, phi = self._inside_pieces(x_arr)
        e0, _, _ = segment_moments(phi, self.log_values[k + 1])
        out = self._sf_knots[k + 1] + (b - xc) * e0
        out = np.where(x_arr >= self.hi, 0.0, out)
        out = np.where(x_arr <= self.lo, self.total_mass(), out)
        return float(out) if out.ndim == 0 else out

    def interval_mass(self, a, b):
        """int_a^b exp(phi) for a <= b, summed piecewise without subtracting CDFs."""
        a_arr = np.clip(np.asarray(a, dtype=float), self.lo, self.hi)
        b_arr = np.clip(np.asarray(b, dtype=float), self.lo, self.hi)
        if np.any(a_arr > b_arr):
            raise DensityError("interval_mass needs a <= b")
        _, ka, _, ra, pa = self._inside_pieces(a_arr)
        _, kb, lb, _, pb = self._inside_pieces(b_arr)
        same = ka == kb
        e_same, _, _ = segment_moments(pa, pb)
        direct = (b_arr - a_arr) * e_same
        e_head, _, _ = segment_moments(pa, self.log_values[ka + 1])
        e_tail, _, _ = segment_moments(self.log_values[kb], pb)
        middle = self._cdf_knots[kb] - self._cdf_knots[np.minimum(ka + 1, kb)]
        split = (ra - a_arr) * e_head + middle + (b_arr - lb) * e_tail
        out = np.where(same, direct, split)
        return float(out) if out.ndim == 0 else out

    def integrated_cdf(self, t):
        """int_{x_0}^t F(r) dr for x_0 <= t <= x_m."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.lo) or np.any(t_arr > self.hi):
            raise DensityError("integrated_cdf argument outside the support")
        _, k, a, _, phi = self._inside_pieces(t_arr)
        d = t_arr - a
        _, e1_left, _ = segment_moments(phi, self.log_values[k])
        out = self._icdf_knots[k] + d * self._cdf_knots[k] + d * d * e1_left
        return float(out) if out.ndim == 0 else out

    def ppf(self, p):
        """Point x with cdf(x) = p, for p in [0, total mass]."""
        p_arr = np.asarray(p, dtype=float)
        cdf = self._cdf_knots
        k = np.clip(np.searchsorted(cdf, p_arr, side="right") - 1, 0, self.knots.size - 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.clip((p_arr - cdf[k]) / self._seg_mass[k], 0.0, 1.0)
        theta = self.log_values[k + 1] - self.log_values[k]
        out = self.knots[k] + self._widths[k] * inverse_exp_segment(u, theta)
        out = np.where(p_arr <= 0.0, self.lo, out)
        # a normalized mass may round to 1 + ulp; p = 1 must still reach x_m
        top = min(self.total_mass(), 1.0) if self.normalized else self.total_mass()
        out = np.where(p_arr >= top, self.hi, out)
        return float(out) if out.ndim == 0 else out

    def segment_probabilities(self) -> np.ndarray:
        return self._seg_mass / self.total_mass()

    def moments(self) -> tuple[float, float]:
        """Mean and variance of a normalized density, in closed form."""
        if not self.normalized:
            raise DensityError("moments require a normalized density")
        p, q = self.log_values[:-1], self.log_values[1:]
        w = self._widths
        e0, e1, e2 = segment_moments(p, q)
        offset = self.knots[:-1] - self.lo
        mean = self.lo + float(np.sum(offset * w * e0 + w * w * e1))
        c = self.knots[:-1] - mean
        var = float(np.sum(c * c * w * e0 + 2.0 * c * w * w * e1 + w ** 3 * e2))
        return mean, var

    def normalize(self):
        """Copy with log(total mass) subtracted from every log value."""
        # mass of exp(phi - max phi) cannot overflow
        top = float(np.max(self.log_values))
        e0, _, _ = segment_moments(self.log_values[:-1] - top, self.log_values[1:] - top)
        shift = top + math.log(float(np.sum(self._widths * e0)))
        return type(self)(self.knots, self.log_values - shift, normalized=True)

    # ----- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "knots": [float(v) for v in self.knots],
            "log_values": [float(v) for v in self.log_values],
            "normalized": self.normalized,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict):
        try:
            return cls(data["knots"], data["log_values"], bool(data.get("normalized", False)))
        except KeyError as exc:
            raise DensityError(f"fit JSON is missing field {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


class PLConcaveLogDensity(PiecewiseLogLinear):
    """Piecewise-linear log-density with nonincreasing slopes."""

    def __init__(self, knots, log_values, normalized: bool = False):
        super().__init__(knots, log_values, normalized)
        s = self.slopes
        if s.size > 1 and np.max(np.diff(s)) > slope_tolerance(s):
            raise DensityError("log values are not concave: slopes must be nonincreasing")
