"""Seeded Monte-Carlo studies of the estimator's large-sample behaviour.

Every replication draws a sample by inverse-CDF sampling, fits it and records
four statistics on the shrunken interval T(n, beta) = [A + r, B - r] with
r = rho_n^{1/(2 beta + 1)} and rho_n = log(n) / n:

* sup |phi_hat - phi| on a grid plus the knots (rate study),
* sup |F_hat - F_n| on T(n, beta), exactly (equivalence study),
* sup over T of the distance to the nearest knot (gap study),
* whether sup |F_hat - F| <= sup |F_n - F| on the real line (Marshall study).

Replication (n, r) uses ``SeedSequence(seed, spawn_key=(n, r))``, so tables do
not depend on execution order.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats

from .certify import marshall_compare
from .fitter import FitConfig, FitError, fit
from .sample import Sample, ingest_sample

MAX_FAILURE_FRACTION = 0.02
DEFAULT_SIZES = (200, 400, 800, 1600, 3200, 6400)


class StudyQualityError(RuntimeError):
    """A study or its self-test did not meet its quality bar."""


# ----- true distributions ---------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    name: str
    ppf: Callable
    cdf: Callable
    logpdf: Callable
    support: tuple[float, float]


def _gumbel() -> Distribution:
    return Distribution(
        "gumbel",
        ppf=lambda u: -np.log(-np.log(u)),
        cdf=lambda x: np.exp(-np.exp(-np.asarray(x, dtype=float))),
        logpdf=lambda x: -np.asarray(x, dtype=float) - np.exp(-np.asarray(x, dtype=float)),
        support=(-math.inf, math.inf),
    )


def _normal() -> Distribution:
    return Distribution(
        "normal",
        ppf=special.ndtri,
        cdf=special.ndtr,
        logpdf=lambda x: -0.5 * np.asarray(x, dtype=float) ** 2 - 0.5 * math.log(2 * math.pi),
        support=(-math.inf, math.inf),
    )


def _gamma(shape: float) -> Distribution:
    if shape < 1:
        raise ValueError("gamma shape must be >= 1 for a log-concave density")
    law = stats.gamma(shape)
    return Distribution("gamma", law.ppf, law.cdf, law.logpdf, (0.0, math.inf))


def get_distribution(name: str, shape: float = 2.0) -> Distribution:
    if name == "gumbel":
        return _gumbel()
    if name == "normal":
        return _normal()
    if name == "gamma":
        return _gamma(shape)
    raise ValueError(f"unknown distribution {name!r}")


def draw(dist: Distribution, rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    return dist.ppf(u)


# ----- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class StudyConfig:
    distribution: str = "gumbel"
    sample_sizes: tuple = DEFAULT_SIZES
    replications: int = 50
    interval: tuple = (-1.0, 3.0)
    beta: float = 2.0
    seed: int = 0
    shape: float = 2.0
    grid: int = 1000
    cert_tolerance: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        sizes = self.sample_sizes
        if not sizes or sizes[0] < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample_sizes must be increasing integers >= 2")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 1.0 <= self.beta <= 2.0:
            raise ValueError("beta must lie in [1, 2]")
        a, b = self.interval
        lo, hi = get_distribution(self.distribution, self.shape).support
        if not lo < a < b < hi:
            raise ValueError("interval must satisfy A < B inside the support interior")


def rho(n: int) -> float:
    return math.log(n) / n


def shrunk_interval(n: int, beta: float, interval) -> tuple[float, float]:
    """T(n, beta): T shrunk by rho_n^{1/(2 beta + 1)} at both ends."""
    r = rho(n) ** (1.0 / (2.0 * beta + 1.0))
    return interval[0] + r, interval[1] - r


# ----- per-replication statistics ------------------------------------------------


def sup_log_error(d, logpdf, lo: float, hi: float, grid: int) -> float:
    x = np.linspace(lo, hi, grid)
    knots = d.knots[(d.knots >= lo) & (d.knots <= hi)]
    x = np.concatenate((x, knots))
    with np.errstate(invalid="ignore"):
        return float(np.max(np.abs(d.eval_log(x) - logpdf(x))))


def sup_cdf_gap(s: Sample, d, lo: float, hi: float) -> float:
    """Exact max over [lo, hi] of |F_hat - F_n|, using both one-sided limits of F_n."""
    x = s.distinct[(s.distinct >= lo) & (s.distinct <= hi)]
    fhat = d.cdf(x)
    inner = np.concatenate((np.abs(fhat - s.ecdf(x)), np.abs(fhat - s.ecdf_left(x))))
    ends = np.abs(d.cdf(np.array([lo, hi])) - s.ecdf(np.array([lo, hi])))
    return float(np.max(np.concatenate((inner, ends))))


def knot_gap(knots, lo: float, hi: float) -> float:
    """sup over x in [lo, hi] of the distance from x to the nearest knot."""
    knots = np.sort(np.asarray(knots, dtype=float))
    mids = 0.5 * (knots[:-1] + knots[1:])
    x = np.concatenate(([lo, hi], mids[(mids >= lo) & (mids <= hi)]))
    return float(np.max(np.min(np.abs(x[:, None] - knots[None, :]), axis=1)))


@dataclass(frozen=True)
class StudyRow:
    n: int
    replication: int
    ok: bool
    t_lo: float
    t_hi: float
    sup_log_error: float = math.nan
    sup_cdf_gap: float = math.nan
    scaled_cdf_gap: float = math.nan
    knot_gap: float = math.nan
    n_knots: int = 0
    sup_fit_vs_truth: float = math.nan
    sup_ecdf_vs_truth: float = math.nan
    marshall_holds: bool = False


ROW_FIELDS = tuple(StudyRow.__dataclass_fields__)


def replicate(cfg: StudyConfig, n: int, rep: int) -> StudyRow:
    dist = get_distribution(cfg.distribution, cfg.shape)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(n, rep)))
    s = ingest_sample(draw(dist, rng, n))
    t_lo, t_hi = shrunk_interval(n, cfg.beta, cfg.interval)
    try:
        result = fit(s, FitConfig(cert_tolerance=cfg.cert_tolerance))
    except FitError:
        return StudyRow(n, rep, False, t_lo, t_hi)
    d = result.density
    gap = sup_cdf_gap(s, d, t_lo, t_hi)
    knots = d.knot_set()
    sup_fit, sup_ecdf = marshall_compare(s, d, dist.cdf)
    return StudyRow(
        n=n,
        replication=rep,
        ok=True,
        t_lo=t_lo,
        t_hi=t_hi,
        sup_log_error=sup_log_error(d, dist.logpdf, t_lo, t_hi, cfg.grid),
        sup_cdf_gap=gap,
        scaled_cdf_gap=math.sqrt(n) * gap,
        knot_gap=knot_gap(knots, *cfg.interval),
        n_knots=int(knots.size),
        sup_fit_vs_truth=sup_fit,
        sup_ecdf_vs_truth=sup_ecdf,
        marshall_holds=bool(sup_fit <= sup_ecdf),
    )


def _replicate_args(args):
    return replicate(*args)


def simulate(cfg: StudyConfig) -> list[StudyRow]:
    """All replications, sorted by (n, replication); aborts on too many failed fits."""
    jobs = [(cfg, n, r) for n in cfg.sample_sizes for r in range(cfg.replications)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_replicate_args, jobs, chunksize=4))
    else:
        rows = [replicate(*job) for job in jobs]
    rows.sort(key=lambda row: (row.n, row.replication))
    failed = sum(not row.ok for row in rows)
    if failed > MAX_FAILURE_FRACTION * len(rows):
        raise StudyQualityError(f"{failed} of {len(rows)} fits failed to certify")
    return rows


# ----- summaries ------------------------------------------------------------------------


@dataclass(frozen=True)
class Slope:
    slope: float
    stderr: float
    points: int


def loglog_slope(x, y) -> Slope:
    """OLS slope of log(y) on log(x) with its standard error."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if lx.size < 3:
        slope = float(np.polyfit(lx, ly, 1)[0]) if lx.size == 2 else math.nan
        return Slope(slope, math.nan, int(lx.size))
    res = stats.linregress(lx, ly)
    return Slope(float(res.slope), float(res.stderr), int(lx.size))


STATISTIC = {
    "rate": "sup_log_error",
    "equivalence": "scaled_cdf_gap",
    "gap": "knot_gap",
    "marshall": "marshall_holds",
}


@dataclass
class StudyReport:
    kind: str
    config: StudyConfig
    rows: list
    sizes: list
    medians: list
    failures: int
    slope: Slope | None = None
    rho_slope: Slope | None = None
    decreases: list = field(default_factory=list)
    fractions: list = field(default_factory=list)

    @property
    def statistic(self) -> str:
        return STATISTIC[self.kind]

    def rows_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("\t".join(ROW_FIELDS) + "\n")
        for row in self.rows:
            buf.write("\t".join(_fmt(getattr(row, f)) for f in ROW_FIELDS) + "\n")
        return buf.getvalue()

    def summary_tsv(self) -> str:
        head = ["n", "t_lo", "t_hi", f"median_{self.statistic}"]
        if self.kind == "marshall":
            head.append("fraction_holds")
        lines = ["\t".join(head)]
        for i, n in enumerate(self.sizes):
            t_lo, t_hi = shrunk_interval(n, self.config.beta, self.config.interval)
            cells = [str(n), _fmt(t_lo), _fmt(t_hi), _fmt(self.medians[i])]
            if self.kind == "marshall":
                cells.append(_fmt(self.fractions[i]))
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "statistic": self.statistic,
            "config": asdict(self.config),
            "sizes": self.sizes,
            "medians": self.medians,
            "failures": self.failures,
            "replications": len(self.rows),
        }
        if self.slope is not None:
            out["slope"] = asdict(self.slope)
        if self.rho_slope is not None:
            out["slope_vs_inverse_rho"] = asdict(self.rho_slope)
        if self.kind == "equivalence":
            out["decreases"] = self.decreases
        if self.kind == "marshall":
            out["fraction_holds"] = self.fractions
        if self.kind == "rate":
            out["note"] = f"sup taken over a {self.config.grid}-point grid plus knots"
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summarize(cfg: StudyConfig, rows: list, kind: str) -> StudyReport:
    if kind not in STATISTIC:
        raise ValueError(f"unknown study kind {kind!r}")
    name = STATISTIC[kind]
    good = [row for row in rows if row.ok]
    sizes = sorted({row.n for row in rows})
    per_n = [np.array([getattr(r, name) for r in good if r.n == n], dtype=float) for n in sizes]
    medians = [float(np.median(v)) if v.size else math.nan for v in per_n]
    report = StudyReport(kind, cfg, rows, sizes, medians, len(rows) - len(good))
    if kind == "marshall":
        report.fractions = [float(np.mean(v)) if v.size else math.nan for v in per_n]
        return report
    if kind == "equivalence":
        report.decreases = [bool(b < a) for a, b in zip(medians, medians[1:])]
        return report
    report.slope = loglog_slope(sizes, medians)
    report.rho_slope = loglog_slope([1.0 / rho(n) for n in sizes], medians)
    return report


# ----- self-tests on exact model values ---------------------------------------------

SELF_TEST_SIZES = tuple(200 * 2**k for k in range(7))


def rate_self_test() -> dict:
    """Error exactly rho_n^{2/5}: the inverse-rho slope must be -2/5 and the
    log-n slope must match its closed form."""
    n = np.array(SELF_TEST_SIZES, dtype=float)
    err = (np.log(n) / n) ** 0.4
    by_n = loglog_slope(n, err).slope
    by_rho = loglog_slope(n / np.log(n), err).slope
    # d log err / d log n = 0.4 (1 / log n - 1); OLS of that curve on log n
    ln = np.log(n)
    expected = 0.4 * (np.polyfit(ln, np.log(ln), 1)[0] - 1.0)
    ok = -0.43 <= by_rho <= -0.37 and abs(by_n - expected) < 1e-12
    return {"ok": bool(ok), "slope_vs_n": by_n, "slope_vs_inverse_rho": by_rho}


def equivalence_self_test() -> dict:
    n = np.array(SELF_TEST_SIZES, dtype=float)
    scaled = np.sqrt(n) * n ** -0.6
    ok = bool(np.all(np.diff(scaled) < 0))
    return {"ok": ok, "slope_vs_n": loglog_slope(n, scaled).slope}


def gap_self_test() -> dict:
    n = np.array(SELF_TEST_SIZES, dtype=float)
    slope = loglog_slope(n, n ** -0.2).slope
    return {"ok": bool(-0.25 <= slope <= -0.15), "slope_vs_n": slope}


SELF_TESTS = {
    "rate": rate_self_test,
    "equivalence": equivalence_self_test,
    "gap": gap_self_test,
    "marshall": lambda: {"ok": True},
}


def run_study(cfg: StudyConfig, kind: str, rows: list | None = None) -> StudyReport:
    check = SELF_TESTS[kind]()
    if not check["ok"]:
        raise StudyQualityError(f"{kind} self-test failed: {check}")
    if rows is None:
        rows = simulate(cfg)
    return summarize(cfg, rows, kind)


def run_rate_study(cfg: StudyConfig, rows=None) -> StudyReport:
    return run_study(cfg, "rate", rows)


def run_equivalence_study(cfg: StudyConfig, rows=None) -> StudyReport:
    return run_study(cfg, "equivalence", rows)


def run_gap_study(cfg: StudyConfig, rows=None) -> StudyReport:
    return run_study(cfg, "gap", rows)


def run_marshall_study(cfg: StudyConfig, rows=None) -> StudyReport:
    return run_study(cfg, "marshall", rows)
