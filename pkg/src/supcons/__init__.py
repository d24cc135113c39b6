"""Sinc-kernel smoothing, smoothness bounds, probability metrics and a seeded
posterior-simulation harness for sup-norm consistency experiments."""

from .densities import (
    Family,
    MixtureDensity,
    SmoothnessClass,
    classify_smoothness,
    evaluate,
    fourier_envelope,
    sample,
)
from .errors import AssumptionViolation, ConfigError, NumericalError
from .smoother import (
    GridSpec,
    SmootherConfig,
    gaussian_J,
    sinc_kernel,
    smooth_at,
    smoothing_error_tail,
    sup_error_empirical,
    weak_statistic,
)

__version__ = "0.1.0"
