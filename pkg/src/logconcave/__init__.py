"""Maximum likelihood estimation of a log-concave density on the line."""

from .sample import Sample, ingest_sample, read_sample
from .kernels import exp_mean_kernel, exp_moment_kernel
from .density import PiecewiseLogLinear, PLConcaveLogDensity
from .fitter import FitConfig, FitResult, FitError, fit, objective, directional_derivative
from .certify import (
    CertificateReport,
    PiecewiseLinear,
    Quadratic,
    check_integral_characterization,
    check_perturbation,
    check_knot_bracket,
    check_lemma_a1,
    check_lemma_a1_ratio,
    check_monotone_ratios,
    marshall_compare,
)
from .derived import (
    SmoothedDensity,
    sample_fit,
    sample_smoothed,
    smooth,
    smoothed_density_eval,
    hazard_eval,
    quantile,
)
from .simlab import StudyConfig, StudyReport, StudyQualityError, run_study

__all__ = [
    "Sample", "ingest_sample", "read_sample",
    "exp_mean_kernel", "exp_moment_kernel",
    "PiecewiseLogLinear", "PLConcaveLogDensity",
    "FitConfig", "FitResult", "FitError", "fit", "objective", "directional_derivative",
    "CertificateReport", "PiecewiseLinear", "Quadratic",
    "check_integral_characterization", "check_perturbation", "check_knot_bracket",
    "check_lemma_a1", "check_lemma_a1_ratio", "check_monotone_ratios", "marshall_compare",
    "SmoothedDensity", "sample_fit", "sample_smoothed", "smooth",
    "smoothed_density_eval", "hazard_eval", "quantile",
    "StudyConfig", "StudyReport", "StudyQualityError", "run_study",
]
