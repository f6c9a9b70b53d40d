"""Bayesian effective reproduction number surveillance from daily case counts."""

__version__ = "0.1.0"

from .core import (DatedSeries, EstimationConfig, GenerationInterval, GeoUnit, IncidenceSeries,
                   RtPoint, RtSeries, discretize_generation_interval)
from .estimator import estimate_series, estimate_window, sample_trajectories, total_infectivity
from .gammamath import GammaParams, gamma_cdf, gamma_quantile, gamma_sample, log_gamma
from .simulate import simulate
from .stats import correlate_vs_reference, correlation_credible_interval, moving_average, pearson

__all__ = [
    "DatedSeries", "EstimationConfig", "GammaParams", "GenerationInterval", "GeoUnit",
    "IncidenceSeries", "RtPoint", "RtSeries", "correlate_vs_reference",
    "correlation_credible_interval", "discretize_generation_interval", "estimate_series",
    "estimate_window", "gamma_cdf", "gamma_quantile", "gamma_sample", "log_gamma",
    "moving_average", "pearson", "sample_trajectories", "simulate", "total_infectivity",
]
