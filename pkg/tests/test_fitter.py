import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logconcave import (
    FitConfig,
    FitError,
    PiecewiseLinear,
    PLConcaveLogDensity,
    Quadratic,
    directional_derivative,
    fit,
    ingest_sample,
    objective,
)

from logconcave.sample import SampleError

from conftest import samples
from oracles import uniform_D


def test_two_points_uniform():
    s = ingest_sample([0.0, 1.0])
    res = fit(s)
    grid = np.linspace(0, 1, 101)
    assert np.max(np.abs(res.density.eval_log(grid))) <= 1e-6
    assert res.knots.tolist() == [0.0, 1.0]
    assert np.max(res.certificate.d_values - uniform_D(res.certificate.d_t)) <= 1e-12


def test_objective_examples(uniform):
    s = ingest_sample([0.0, 1.0])
    assert objective(s, uniform) == -1.0
    for c in (-1.0, -0.1, 0.3, 2.0):
        d = PLConcaveLogDensity([0.0, 1.0], [c, c])
        assert objective(s, d) == pytest.approx(c - math.exp(c), abs=1e-15)
        assert objective(s, d) <= -1.0
    short = PLConcaveLogDensity([0.0, 0.5], [0.0, 0.0])
    assert objective(s, short) == -math.inf


def test_directional_derivative_examples(suite):
    for s, res in suite[:12]:
        d = res.density
        scale = s.hi - s.lo
        assert directional_derivative(s, d, PiecewiseLinear.linear(1.0, 0.0)) == pytest.approx(0, abs=1e-12)
        assert abs(directional_derivative(s, d, PiecewiseLinear.linear(0.0, 1.0, s.lo, s.hi))) <= 1e-9 * scale
        # moving toward -x^2 cannot raise the likelihood at the optimum: Var(F_hat) <= Var(F_n)
        assert directional_derivative(s, d, Quadratic(c2=-1.0)) <= 1e-9 * scale**2


def test_fit_certificate_within_tolerance(suite):
    for s, res in suite:
        cert = res.certificate
        assert cert.passed
        assert cert.max_inequality_violation <= 1e-8
        assert cert.max_knot_equality_gap <= 1e-8
        assert cert.mean_gap <= 1e-9


def test_knots_are_data_points(suite):
    for s, res in suite:
        assert np.all(np.isin(res.knots, s.distinct))


def test_knot_bracket(suite):
    for s, res in suite:
        k = res.knots
        fh = res.density.cdf(k)
        assert np.all(fh <= s.ecdf(k) + 1e-8)
        assert np.all(fh >= s.ecdf(k) - 1 / s.n - 1e-8)


def test_monotone_ascent(suite):
    for _, res in suite:
        h = np.array(res.history)
        assert np.all(np.diff(h) >= -1e-12 * np.maximum(1.0, np.abs(h[1:])))


def test_uniqueness_two_initializations(suite):
    for s, res in suite[:30]:
        other = fit(s, FitConfig(init="flat")).density
        x = np.linspace(s.lo, s.hi, 500)
        assert np.max(np.abs(other.eval_log(x) - res.density.eval_log(x))) <= 1e-6


def test_fit_runtime_n200(suite):
    s = next(s for s, _ in suite if s.n == 200)
    t0 = time.perf_counter()
    fit(s)
    assert time.perf_counter() - t0 <= 1.0


def test_ties_handled():
    s = ingest_sample([0.0, 0.0, 1.0, 1.0, 1.0, 2.5, 3.0, 3.0])
    res = fit(s)
    assert res.certificate.passed
    assert res.density.moments()[0] == pytest.approx(s.mean(), abs=1e-9)


def test_beats_perturbed_candidates(suite):
    s, res = suite[4]
    d = res.density
    base = objective(s, d)
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = d.log_values + 1e-3 * rng.standard_normal(d.log_values.size)
        try:
            cand = PLConcaveLogDensity(d.knots, v)
        except ValueError:
            continue
        assert objective(s, cand) <= base + 1e-12


@settings(max_examples=40, deadline=None)
@given(samples(min_n=2, max_n=60))
def test_random_samples_certify(s):
    res = fit(s)
    assert res.certificate.passed
    assert res.density.normalized


def test_scale_invariance():
    rng = np.random.default_rng(5)
    x = rng.gumbel(size=80)
    a = fit(ingest_sample(x)).density
    b = fit(ingest_sample(1e6 * x + 3e7)).density
    assert np.allclose(b.knots, 1e6 * a.knots + 3e7, rtol=1e-12)
    assert np.allclose(b.log_values + math.log(1e6), a.log_values, atol=1e-6)


def test_unresolvable_spacing_rejected():
    with pytest.raises(SampleError, match="resolution"):
        fit(ingest_sample([0.0, 1e-17, 1.0]))
    fit(ingest_sample([0.0, 1e-15, 1.0]))


@pytest.mark.parametrize("scale", [1e-120, 1e120])
def test_extreme_range_rejected(scale):
    with pytest.raises(SampleError, match="range"):
        fit(ingest_sample([0.0, 0.4 * scale, scale]))


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(cert_tolerance=0)
    with pytest.raises(ValueError):
        FitConfig(init="other")
    with pytest.raises(ValueError):
        FitConfig(line_search_shrink=1.0)


def test_iteration_budget_raises_fit_error():
    rng = np.random.default_rng(1)
    s = ingest_sample(rng.normal(size=300))
    with pytest.raises(FitError) as info:
        fit(s, FitConfig(max_iterations=1, init="flat"))
    assert info.value.density is not None
    assert info.value.certificate is not None
