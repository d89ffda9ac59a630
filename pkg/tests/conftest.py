from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from logconcave import PLConcaveLogDensity, fit, ingest_sample
from logconcave.simlab import draw, get_distribution

SUITE_SIZES = (10, 50, 200)
SUITE_DISTS = ("gumbel", "normal")


def suite_sample(i: int):
    """Suite sample i of 100: distribution and size cycle with i."""
    dist = get_distribution(SUITE_DISTS[i % 2])
    n = SUITE_SIZES[i % 3]
    rng = np.random.default_rng(np.random.SeedSequence(1000 + i))
    return ingest_sample(draw(dist, rng, n))


@pytest.fixture(scope="session")
def suite():
    """100 seeded samples with their fits: list of (sample, FitResult)."""
    out = []
    for i in range(100):
        s = suite_sample(i)
        out.append((s, fit(s)))
    return out


@pytest.fixture
def uniform():
    return PLConcaveLogDensity([0.0, 1.0], [0.0, 0.0], normalized=True)


@st.composite
def concave_densities(draw_, min_knots=2, max_knots=8, normalized=True):
    """Random normalized piecewise-linear concave log-densities."""
    m = draw_(st.integers(min_knots, max_knots))
    widths = draw_(st.lists(st.floats(0.05, 3.0), min_size=m - 1, max_size=m - 1))
    start = draw_(st.floats(-5.0, 5.0))
    knots = start + np.concatenate(([0.0], np.cumsum(widths)))
    slopes = sorted(draw_(st.lists(st.floats(-6.0, 6.0), min_size=m - 1, max_size=m - 1)), reverse=True)
    values = np.concatenate(([0.0], np.cumsum(np.array(slopes) * widths)))
    d = PLConcaveLogDensity(knots, values)
    return d.normalize() if normalized else d


@st.composite
def samples(draw_, min_n=2, max_n=50):
    n = draw_(st.integers(min_n, max_n))
    vals = draw_(st.lists(st.floats(-100, 100, allow_nan=False), min_size=n, max_size=n))
    # keep distinct values resolvable relative to the range; see the fitter's input limits
    vals = [round(v, 6) for v in vals]
    if max(vals) == min(vals):
        vals[-1] = vals[0] + 1.0
    return ingest_sample(vals)
