"""Stochastic renewal-equation incidence generator.

Used as ground truth when validating the estimator: after a seed prefix,
each day's count is Poisson with mean R(t) times the total infectivity of
the simulated history.
"""

from __future__ import annotations

import datetime as dt
import re
from typing import Sequence

import numpy as np

from .core import GenerationInterval, GeoUnit, IncidenceSeries

DEFAULT_START = dt.date(2020, 1, 1)


def simulate(r_profile: Sequence[float], gi: GenerationInterval, seed_cases: Sequence[int],
             days: int, rng: np.random.Generator, *, unit: GeoUnit | None = None,
             start_date: dt.date = DEFAULT_START) -> IncidenceSeries:
    r = np.asarray(r_profile, dtype=float)
    seeds = np.asarray(seed_cases)
    if days < 1:
        raise ValueError("days must be positive")
    if r.size < days:
        raise ValueError(f"r_profile has {r.size} entries, need at least {days}")
    if seeds.size == 0:
        raise ValueError("seed_cases must be non-empty")
    if np.any(~np.isfinite(r)) or np.any(r[:days] < 0):
        raise ValueError("r_profile must be finite and non-negative")
    if np.any(seeds < 0) or np.any(seeds != np.round(seeds)):
        raise ValueError("seed_cases must be non-negative integers")

    counts = np.zeros(days, dtype=np.int64)
    k = min(seeds.size, days)
    counts[:k] = seeds[:k]
    w = gi.weights
    n = gi.n
    for i in range(k, days):
        lo = max(0, i - n)
        # history reversed so that lag 1 lines up with w[0]
        lam = float(np.dot(w[: i - lo], counts[lo:i][::-1]))
        counts[i] = rng.poisson(r[i] * lam)
    return IncidenceSeries(unit or GeoUnit.country(), start_date, counts)


_SEGMENT = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*[xX]\s*([0-9]+)\s*$")


def parse_profile(spec: str) -> np.ndarray:
    """Expand ``"2.0x60,0.7x120"`` into a per-day array of R values."""
    parts = []
    for seg in spec.split(","):
        m = _SEGMENT.match(seg)
        if not m:
            raise ValueError(f"malformed profile segment {seg!r}; expected VALUExDAYS")
        value, length = float(m.group(1)), int(m.group(2))
        if length < 1:
            raise ValueError(f"segment {seg!r} has zero length")
        parts.append(np.full(length, value))
    if not parts:
        raise ValueError("empty profile")
    return np.concatenate(parts)


def parse_seeds(spec: str) -> np.ndarray:
    """``"100x5"`` or an explicit list ``"10,20,30"``."""
    out = []
    for seg in spec.split(","):
        seg = seg.strip()
        if "x" in seg.lower():
            value, length = re.split(r"[xX]", seg, maxsplit=1)
            try:
                out.extend([int(value)] * int(length))
            except ValueError:
                raise ValueError(f"malformed seed segment {seg!r}") from None
        else:
            try:
                out.append(int(seg))
            except ValueError:
                raise ValueError(f"malformed seed value {seg!r}") from None
    if not out or any(v < 0 for v in out):
        raise ValueError(f"seeds must be non-empty and non-negative: {spec!r}")
    return np.asarray(out, dtype=np.int64)
