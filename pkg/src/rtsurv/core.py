"""Domain types shared across the package."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .gammamath import GammaParams, gamma_cdf, gamma_sf

COUNTRY_CODE = "BR"
REGION_CODES = ("N", "NE", "S", "SE", "CO")
STATE_CODES = (
    "AC", "AL", "AM", "AP", "BA", "CE", "DF", "ES", "GO", "MA", "MG", "MS", "MT", "PA",
    "PB", "PE", "PI", "PR", "RJ", "RN", "RO", "RR", "RS", "SC", "SE", "SP", "TO",
)
KINDS = ("country", "region", "state")


@dataclass(frozen=True, order=True)
class GeoUnit:
    kind: str
    code: str

    def __post_init__(self):
        if self.kind == "country":
            ok = self.code == COUNTRY_CODE
        elif self.kind == "region":
            ok = self.code in REGION_CODES
        elif self.kind == "state":
            ok = self.code in STATE_CODES
        else:
            raise ValueError(f"unknown unit kind {self.kind!r}; expected one of {KINDS}")
        if not ok:
            raise ValueError(f"{self.code!r} is not a valid {self.kind} code")

    @classmethod
    def country(cls) -> "GeoUnit":
        return cls("country", COUNTRY_CODE)

    @classmethod
    def region(cls, code: str) -> "GeoUnit":
        return cls("region", code)

    @classmethod
    def state(cls, code: str) -> "GeoUnit":
        return cls("state", code)

    @classmethod
    def parse(cls, text: str) -> "GeoUnit":
        """Parse ``BR``, a state code, a region code or ``kind:code``.

        ``SE`` is both Sergipe and the Southeast region; the bare code means
        the state, so the region has to be written ``region:SE``.
        """
        text = text.strip()
        if ":" in text:
            kind, code = text.split(":", 1)
            return cls(kind.strip().lower(), code.strip().upper())
        code = text.upper()
        if code == COUNTRY_CODE:
            return cls.country()
        if code in STATE_CODES:
            return cls.state(code)
        if code in REGION_CODES:
            return cls.region(code)
        raise ValueError(f"unrecognised geographic unit {text!r}")

    @property
    def key(self) -> str:
        return f"{self.kind}:{self.code}"

    @property
    def stem(self) -> str:
        """File-name stem, unique across kinds."""
        return f"{self.kind}_{self.code}"

    def __str__(self) -> str:
        return self.code if self.kind != "region" else self.key


def all_units() -> list[GeoUnit]:
    """Country, the five regions and the 27 states, in that order."""
    return ([GeoUnit.country()] + [GeoUnit.region(c) for c in REGION_CODES]
            + [GeoUnit.state(c) for c in STATE_CODES])


def _as_date(d) -> dt.date:
    if isinstance(d, dt.datetime):
        return d.date()
    if isinstance(d, dt.date):
        return d
    if isinstance(d, np.datetime64):
        return d.astype("datetime64[D]").item()
    return dt.date.fromisoformat(str(d))


def date_range(start: dt.date, n: int) -> np.ndarray:
    return np.datetime64(start, "D") + np.arange(n)


@dataclass(frozen=True, eq=False)
class IncidenceSeries:
    """Daily non-negative case counts on consecutive days from ``start_date``."""

    unit: GeoUnit
    start_date: dt.date
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if c.size and not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.isfinite(c)) or np.any(c != np.round(c)):
                raise ValueError("counts must be integers")
        c = c.astype(np.int64, copy=True)
        if np.any(c < 0):
            raise ValueError("counts must be non-negative; sanitize negative values before construction")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "start_date", _as_date(self.start_date))

    def __len__(self) -> int:
        return self.counts.size

    @property
    def dates(self) -> np.ndarray:
        return date_range(self.start_date, len(self))

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self) - 1)

    def __eq__(self, other):
        if not isinstance(other, IncidenceSeries):
            return NotImplemented
        return (self.unit == other.unit and self.start_date == other.start_date
                and np.array_equal(self.counts, other.counts))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GenerationInterval:
    """Discrete generation-time weights over lags 1..n."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("generation interval needs at least one lag")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("generation interval weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"generation interval weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    def __len__(self) -> int:
        return self.weights.size

    @property
    def mode_lag(self) -> int:
        return int(np.argmax(self.weights)) + 1


def cell_masses(mean: float, cv: float, n: int) -> np.ndarray:
    """Unnormalized masses CDF(j) - CDF(j-1), j = 1..n, of the continuous
    Gamma with the given mean and coefficient of variation."""
    g = GammaParams(1.0 / (cv * cv), mean * cv * cv)
    cdf = np.array([gamma_cdf(float(j), g) for j in range(n + 1)])
    sf = np.array([gamma_sf(float(j), g) for j in range(n + 1)])
    # difference whichever tail is small, to keep relative precision in the tail
    return np.where(cdf[:-1] < 0.5, np.diff(cdf), -np.diff(sf))


def discretize_generation_interval(mean: float = 6.5, cv: float = 0.62,
                                   tail_eps: float = 1e-4) -> GenerationInterval:
    """Unit-day discretization of a Gamma generation-time density.

    Lags run from 1 to the smallest n whose upper tail mass 1 - CDF(n)
    drops below ``tail_eps``; the retained masses are renormalized.
    Lag 0 is dropped on purpose.
    """
    for name, v in (("mean", mean), ("cv", cv)):
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive, got {v!r}")
    if not 0 < tail_eps < 1:
        raise ValueError(f"tail_eps must lie in (0, 1), got {tail_eps!r}")
    g = GammaParams(1.0 / (cv * cv), mean * cv * cv)
    n = 1
    while gamma_sf(float(n), g) >= tail_eps:
        n += 1
    raw = cell_masses(mean, cv, n)
    return GenerationInterval(raw / raw.sum())


@dataclass(frozen=True)
class EstimationConfig:
    window_tau: int = 7
    prior: GammaParams = field(default_factory=lambda: GammaParams(1.0, 5.0))
    credible_mass: float = 0.95

    def __post_init__(self):
        if int(self.window_tau) != self.window_tau or self.window_tau < 1:
            raise ValueError(f"window_tau must be a positive integer, got {self.window_tau!r}")
        if not 0 < self.credible_mass < 1:
            raise ValueError(f"credible_mass must lie in (0, 1), got {self.credible_mass!r}")
        if not isinstance(self.prior, GammaParams):
            raise TypeError("prior must be GammaParams")


@dataclass(frozen=True)
class RtPoint:
    date: dt.date
    posterior: GammaParams
    mean: float
    variance: float
    lower: float
    upper: float
    burn_in: bool


@dataclass(frozen=True, eq=False)
class RtSeries:
    """Per-day posterior summaries, stored column-wise.

    ``start_date`` is the date of the first estimate.  ``points`` and
    indexing give per-day :class:`RtPoint` records.
    """

    unit: GeoUnit
    start_date: dt.date
    shape: np.ndarray
    scale: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    burn_in: np.ndarray
    credible_mass: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "start_date", _as_date(self.start_date))
        n = None
        for name in ("shape", "scale", "mean", "variance", "lower", "upper", "burn_in"):
            arr = np.array(getattr(self, name), dtype=bool if name == "burn_in" else float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ValueError("RtSeries columns must have equal length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.mean.size

    @property
    def dates(self) -> np.ndarray:
        return date_range(self.start_date, len(self))

    def __getitem__(self, k: int) -> RtPoint:
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        return RtPoint(
            date=self.start_date + dt.timedelta(days=k),
            posterior=GammaParams(self.shape[k], self.scale[k]),
            mean=float(self.mean[k]), variance=float(self.variance[k]),
            lower=float(self.lower[k]), upper=float(self.upper[k]),
            burn_in=bool(self.burn_in[k]),
        )

    def __iter__(self) -> Iterator[RtPoint]:
        return (self[k] for k in range(len(self)))

    @property
    def points(self) -> list[RtPoint]:
        return list(self)

    def mean_series(self, include_burn_in: bool = False) -> "DatedSeries":
        keep = np.ones(len(self), bool) if include_burn_in else ~self.burn_in
        return DatedSeries(self.dates[keep], self.mean[keep])


@dataclass(frozen=True, eq=False)
class DatedSeries:
    """Real values on (not necessarily consecutive) calendar days."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dates).astype("datetime64[D]")
        v = np.asarray(self.values, dtype=float)
        if d.shape != v.shape or d.ndim != 1:
            raise ValueError("dates and values must be 1-d arrays of equal length")
        if d.size > 1 and np.any(np.diff(d) <= np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly increasing")
        object.__setattr__(self, "dates", d)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def consecutive(cls, start: dt.date, values: Sequence[float]) -> "DatedSeries":
        values = np.asarray(values, dtype=float)
        return cls(date_range(_as_date(start), values.size), values)


def credible_mass_of(point: RtPoint) -> float:
    """Posterior mass between the point's credible bounds."""
    return gamma_cdf(point.upper, point.posterior) - gamma_cdf(point.lower, point.posterior)
