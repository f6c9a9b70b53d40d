"""Sliding-window Gamma-Poisson estimation of the effective reproduction number.

For a window of ``tau`` days ending at day i, a Gamma(a, b) prior on R
(shape a, scale b) combined with Poisson counts I_j ~ Poisson(R * L_j) gives
the posterior

    Gamma(a + sum I_j,  1 / (1/b + sum L_j))

where L_j is the total infectivity: the generation-interval weighted sum of
past incidence.  Incidence before the first observed day is taken as zero,
and days whose window still touches that padding are flagged as burn-in.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .core import EstimationConfig, GenerationInterval, IncidenceSeries, RtSeries
from .gammamath import GammaParams, gamma_quantile_array, gamma_variates


def total_infectivity(series: IncidenceSeries, gi: GenerationInterval, i: int) -> float:
    """Generation-weighted incidence before day ``i`` (index into the series)."""
    if not 0 <= i < len(series):
        raise IndexError(f"day index {i} outside series of length {len(series)}")
    s = 0.0
    w = gi.weights
    for j in range(1, gi.n + 1):
        if i - j < 0:
            break
        s += w[j - 1] * series.counts[i - j]
    return float(s)


def infectivity_profile(counts, gi: GenerationInterval) -> np.ndarray:
    """Total infectivity for every day of ``counts``.

    Lags are accumulated in increasing order so each entry is bitwise
    identical to :func:`total_infectivity`.
    """
    counts = np.asarray(counts, dtype=float)
    lam = np.zeros(counts.size)
    for j in range(1, min(gi.n, counts.size - 1) + 1):
        lam[j:] += gi.weights[j - 1] * counts[:-j]
    return lam


@dataclass(frozen=True)
class WindowEstimate:
    posterior: GammaParams
    mean: float
    variance: float
    burn_in: bool


def _burn_in_cutoff(gi: GenerationInterval, tau: int) -> int:
    # first index whose window is clear of the zero-padded history
    return gi.n + tau - 1


def estimate_window(series: IncidenceSeries, gi: GenerationInterval,
                    cfg: EstimationConfig, i: int) -> WindowEstimate:
    tau = cfg.window_tau
    if i >= len(series) or i < 0:
        raise IndexError(f"day index {i} outside series of length {len(series)}")
    if i < tau - 1:
        raise ValueError(f"window of {tau} days ending at index {i} starts before the series")
    sum_i = 0
    sum_lam = 0.0
    for j in range(i - tau + 1, i + 1):
        sum_i += int(series.counts[j])
        sum_lam += total_infectivity(series, gi, j)
    a, b = cfg.prior.shape, cfg.prior.scale
    shape = a + sum_i
    rate = 1.0 / b + sum_lam
    burn_in = i < _burn_in_cutoff(gi, tau) or (sum_lam == 0.0 and sum_i > 0)
    return WindowEstimate(
        posterior=GammaParams(shape, 1.0 / rate),
        mean=shape / rate,
        variance=shape / (rate * rate),
        burn_in=burn_in,
    )


def estimate_series(series: IncidenceSeries, gi: GenerationInterval,
                    cfg: EstimationConfig | None = None) -> RtSeries:
    """Posterior summaries for every day with a complete window.

    The first estimate is for index ``tau - 1``; credible bounds are the
    equal-tailed quantiles holding ``cfg.credible_mass`` of the posterior.
    """
    cfg = cfg or EstimationConfig()
    tau = cfg.window_tau
    n_days = len(series)
    if n_days < tau:
        raise ValueError(f"series has {n_days} days, shorter than the {tau}-day window")
    m = n_days - tau + 1
    lam = infectivity_profile(series.counts, gi)
    counts = series.counts
    # window sums accumulated oldest-first, as in estimate_window
    sum_lam = np.zeros(m)
    sum_i = np.zeros(m, dtype=np.int64)
    for k in range(tau):
        sum_lam += lam[k:k + m]
        sum_i += counts[k:k + m]
    a, b = cfg.prior.shape, cfg.prior.scale
    shape = a + sum_i
    rate = 1.0 / b + sum_lam
    scale = 1.0 / rate
    mean = shape / rate
    variance = shape / (rate * rate)
    tail = (1.0 - cfg.credible_mass) / 2.0
    lower = gamma_quantile_array(tail, shape, scale)
    upper = gamma_quantile_array(1.0 - tail, shape, scale)
    idx = np.arange(tau - 1, n_days)
    burn_in = (idx < _burn_in_cutoff(gi, tau)) | ((sum_lam == 0.0) & (sum_i > 0))
    return RtSeries(
        unit=series.unit,
        start_date=series.start_date + dt.timedelta(days=tau - 1),
        shape=shape, scale=scale, mean=mean, variance=variance,
        lower=lower, upper=upper, burn_in=burn_in,
        credible_mass=cfg.credible_mass,
    )


def sample_trajectories(rt: RtSeries, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Independent posterior draws of R over the non-burn-in days.

    Returns an array of shape ``(n_samples, n_days)``; row k is one sampled
    path, column d the d-th non-burn-in day of ``rt`` in date order.
    """
    if len(rt) == 0:
        raise ValueError("cannot sample from an empty RtSeries")
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples!r}")
    keep = ~rt.burn_in
    return gamma_variates(rt.shape[keep], rt.scale[keep], rng, size=(int(n_samples), int(keep.sum())))
