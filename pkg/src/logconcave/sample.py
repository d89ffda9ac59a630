"""Order statistics and exact empirical-CDF computations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np


class SampleError(ValueError):
    """Raised for data that cannot support a log-concave fit."""


@dataclass(frozen=True)
class Sample:
    """Sorted i.i.d. observations X_1 <= ... <= X_n.

    Ties are kept; the distinct values carry weight multiplicity / n.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise SampleError("sample must be one-dimensional")
        if values.size < 2:
            raise SampleError("need n > 1 observations")
        if not np.all(np.isfinite(values)):
            raise SampleError("sample contains non-finite values")
        if np.any(np.diff(values) < 0):
            raise SampleError("sample values must be sorted ascending")
        if values[0] == values[-1]:
            raise SampleError("degenerate sample: all observations are equal")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __repr__(self):
        return f"Sample(n={self.n}, range=[{self.values[0]:g}, {self.values[-1]:g}])"

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def lo(self) -> float:
        return float(self.values[0])

    @property
    def hi(self) -> float:
        return float(self.values[-1])

    @cached_property
    def _distinct(self):
        x, counts = np.unique(self.values, return_counts=True)
        w = counts / self.n
        cdf = np.cumsum(counts) / self.n
        cdf[-1] = 1.0
        # integral of F_n from X_1 up to each distinct value
        integ = np.concatenate(([0.0], np.cumsum(cdf[:-1] * np.diff(x))))
        for arr in (x, w, cdf, integ):
            arr.flags.writeable = False
        return x, w, cdf, integ

    @property
    def distinct(self) -> np.ndarray:
        """Distinct observed values, ascending."""
        return self._distinct[0]

    @property
    def weights(self) -> np.ndarray:
        """Empirical mass multiplicity / n of each distinct value."""
        return self._distinct[1]

    def ecdf(self, x):
        """Right-continuous empirical CDF F_n(x)."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        out = idx / self.n
        return float(out) if np.ndim(out) == 0 else out

    def ecdf_left(self, x):
        """Left limit F_n(x-)."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="left")
        out = idx / self.n
        return float(out) if np.ndim(out) == 0 else out

    def integrated_ecdf(self, t):
        """Exact integral of F_n over [X_1, t] for X_1 <= t <= X_n."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.lo) or np.any(t_arr > self.hi):
            raise SampleError("integrated_ecdf argument outside [X_1, X_n]")
        x, _, cdf, integ = self._distinct
        j = np.searchsorted(x, t_arr, side="right") - 1
        out = integ[j] + cdf[j] * (t_arr - x[j])
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        return float(np.mean(self.values))

    def variance(self) -> float:
        """Var(F_n), the variance with divisor n."""
        return float(np.var(self.values))

    def to_unit(self, x):
        """Affine map sending [X_1, X_n] onto [0, 1]."""
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)


def ingest_sample(raw: Iterable[float]) -> Sample:
    """Validate and sort raw observations into a :class:`Sample`."""
    values = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float)
    if values.size < 2:
        raise SampleError("need n > 1 observations")
    if not np.all(np.isfinite(values)):
        raise SampleError("sample contains non-finite values")
    return Sample(np.sort(values, kind="stable"))


def parse_numbers(text: str, source: str = "<input>") -> list[float]:
    """Parse one number per line; blank lines and '#' comments are skipped."""
    numbers = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            value = float(line)
        except ValueError:
            raise SampleError(f"{source}:{lineno}: not a number: {line!r}") from None
        if not math.isfinite(value):
            raise SampleError(f"{source}:{lineno}: non-finite value {line!r}")
        numbers.append(value)
    return numbers


def read_sample(path) -> Sample:
    path = Path(path)
    return ingest_sample(parse_numbers(path.read_text(encoding="utf-8"), str(path)))
