"""Surveillance indicators and their correlation with a reference series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import DatedSeries, GeoUnit, IncidenceSeries, RtSeries
from .estimator import sample_trajectories


class UndefinedCorrelation(ValueError):
    """Correlation requested for a series with zero variance or too few points."""


def moving_average(series: IncidenceSeries, window: int = 7) -> DatedSeries:
    """Trailing mean of the last ``window`` days; the first ``window - 1``
    days have no value and are omitted."""
    if int(window) != window or window < 1:
        raise ValueError(f"window must be a positive integer, got {window!r}")
    n = len(series)
    if n < window:
        raise ValueError(f"series has {n} days, shorter than the {window}-day window")
    # integer prefix sums are exact, so every value equals a fresh re-summation
    csum = np.concatenate(([0], np.cumsum(series.counts, dtype=np.int64)))
    sums = csum[window:] - csum[:-window]
    return DatedSeries(series.dates[window - 1:], sums / window)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson needs two 1-d series of equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise UndefinedCorrelation("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise correlation of two equally shaped 2-d arrays."""
    dx = x - x.mean(axis=1, keepdims=True)
    dy = y - y.mean(axis=1, keepdims=True)
    num = np.einsum("ij,ij->i", dx, dy)
    den = np.sqrt(np.einsum("ij,ij->i", dx, dx)) * np.sqrt(np.einsum("ij,ij->i", dy, dy))
    if np.any(den == 0):
        raise UndefinedCorrelation("a sampled trajectory has zero variance")
    return np.clip(num / den, -1.0, 1.0)


def align(a: DatedSeries, b: DatedSeries) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values of ``a`` and ``b`` on the dates both cover."""
    common, ia, ib = np.intersect1d(a.dates, b.dates, assume_unique=True, return_indices=True)
    return common, a.values[ia], b.values[ib]


@dataclass(frozen=True)
class CorrelationRow:
    unit: GeoUnit
    r: float | None
    lower: float | None = None
    upper: float | None = None
    reason: str = ""

    @property
    def defined(self) -> bool:
        return self.r is not None


def correlate_vs_reference(indicator: Mapping[GeoUnit, DatedSeries],
                           reference: DatedSeries) -> list[CorrelationRow]:
    """Pearson r of every unit's indicator against the reference, on the
    dates both share.  A unit whose correlation is undefined gets a row with
    ``r=None`` and the reason, and the rest of the batch still runs."""
    rows = []
    for unit, series in indicator.items():
        _, x, y = align(series, reference)
        try:
            if x.size < 2:
                raise UndefinedCorrelation(f"only {x.size} overlapping day(s)")
            rows.append(CorrelationRow(unit, pearson(x, y)))
        except UndefinedCorrelation as exc:
            rows.append(CorrelationRow(unit, None, reason=str(exc)))
    return rows


@dataclass(frozen=True)
class CorrelationInterval:
    r: float
    lower: float
    upper: float
    n_samples: int
    n_days: int


def correlation_credible_interval(unit_rt: RtSeries, ref_rt: RtSeries, n_samples: int = 1000,
                                  mass: float = 0.95, rng: np.random.Generator | None = None
                                  ) -> CorrelationInterval:
    """Point correlation of posterior means plus an equal-tailed interval
    from correlating independently sampled posterior trajectories.

    Only days that are out of burn-in in both series are used.
    """
    if not 0 < mass < 1:
        raise ValueError(f"mass must lie in (0, 1), got {mass!r}")
    if rng is None:
        raise ValueError("an explicit random generator is required")
    u_dates = unit_rt.dates[~unit_rt.burn_in]
    r_dates = ref_rt.dates[~ref_rt.burn_in]
    common, iu, ir = np.intersect1d(u_dates, r_dates, assume_unique=True, return_indices=True)
    if common.size < 2:
        raise UndefinedCorrelation(f"only {common.size} overlapping non-burn-in day(s)")
    point = pearson(unit_rt.mean[~unit_rt.burn_in][iu], ref_rt.mean[~ref_rt.burn_in][ir])
    xs = sample_trajectories(unit_rt, n_samples, rng)[:, iu]
    ys = sample_trajectories(ref_rt, n_samples, rng)[:, ir]
    rs = pearson_rows(xs, ys)
    tail = (1.0 - mass) / 2.0
    lo, hi = np.quantile(rs, [tail, 1.0 - tail])
    return CorrelationInterval(point, float(lo), float(hi), int(n_samples), int(common.size))
