"""Reading the per-state incidence file and building region/country series.

The defaults follow the ``cases-brazil-states.csv`` layout of the public
wcota/covid19br repository: one row per (date, state) with columns
``date``, ``state`` and ``newCases``, plus country-level rows whose state
field is ``TOTAL``.  Those rows are skipped; the country series is always
the sum of the states.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import REGION_CODES, STATE_CODES, GeoUnit, IncidenceSeries

log = logging.getLogger(__name__)

STUDY_START = dt.date(2020, 5, 20)
STUDY_END = dt.date(2021, 5, 20)
SKIPPED_UNITS = frozenset({"TOTAL"})


class IngestError(Exception):
    pass


class CasesSemantics(enum.Enum):
    DAILY_NEW = "daily_new"
    CUMULATIVE_TOTAL = "cumulative_total"


class NegativePolicy(enum.Enum):
    CLAMP_ZERO_WARN = "clamp_zero_warn"


@dataclass(frozen=True)
class IngestConfig:
    path: Path
    date_column: str = "date"
    unit_column: str = "state"
    cases_column: str = "newCases"
    cases_semantics: CasesSemantics = CasesSemantics.DAILY_NEW
    start_date: dt.date = STUDY_START
    end_date: dt.date = STUDY_END
    negative_policy: NegativePolicy = NegativePolicy.CLAMP_ZERO_WARN
    max_error_fraction: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        object.__setattr__(self, "cases_semantics", CasesSemantics(self.cases_semantics))
        object.__setattr__(self, "negative_policy", NegativePolicy(self.negative_policy))
        if self.start_date > self.end_date:
            raise ValueError(f"start_date {self.start_date} is after end_date {self.end_date}")
        for name in ("date_column", "unit_column", "cases_column"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")


BRAZIL_REGIONS: dict[str, str] = {
    "AC": "N", "AM": "N", "AP": "N", "PA": "N", "RO": "N", "RR": "N", "TO": "N",
    "AL": "NE", "BA": "NE", "CE": "NE", "MA": "NE", "PB": "NE", "PE": "NE", "PI": "NE",
    "RN": "NE", "SE": "NE",
    "ES": "SE", "MG": "SE", "RJ": "SE", "SP": "SE",
    "PR": "S", "RS": "S", "SC": "S",
    "DF": "CO", "GO": "CO", "MS": "CO", "MT": "CO",
}


@dataclass(frozen=True)
class RegionMap:
    """Assignment of every state code to one of the five regions."""

    mapping: Mapping[str, str] = field(default_factory=lambda: dict(BRAZIL_REGIONS))

    def __post_init__(self):
        m = dict(self.mapping)
        missing = sorted(set(STATE_CODES) - set(m))
        extra = sorted(set(m) - set(STATE_CODES))
        if missing or extra:
            raise ValueError(f"region map must cover exactly the 27 states (missing {missing}, unknown {extra})")
        bad = sorted({r for r in m.values() if r not in REGION_CODES})
        if bad:
            raise ValueError(f"unknown region codes {bad}")
        if set(m.values()) != set(REGION_CODES):
            raise ValueError("region map must use all five regions")
        object.__setattr__(self, "mapping", m)

    def region_of(self, state: str) -> str:
        try:
            return self.mapping[state]
        except KeyError:
            raise IngestError(f"state {state!r} is not in the region map") from None

    def members(self, region: str) -> list[str]:
        return sorted(s for s, r in self.mapping.items() if r == region)


# ---------------------------------------------------------------------------
# sanitation bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SanitationRecord:
    row: int | None
    unit: str
    date: str
    field: str
    original: str
    replacement: str
    reason: str


@dataclass
class SanitationReport:
    records: list[SanitationRecord] = field(default_factory=list)
    row_errors: list[dict] = field(default_factory=list)
    rows_read: int = 0
    rows_skipped: int = 0

    @property
    def n_modified(self) -> int:
        return len(self.records)

    def __bool__(self) -> bool:
        return bool(self.records or self.row_errors)

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_skipped": self.rows_skipped,
            "n_modified": self.n_modified,
            "records": [asdict(r) for r in self.records],
            "row_errors": list(self.row_errors),
        }

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


@dataclass
class ParseResult:
    states: dict[str, IncidenceSeries]
    report: SanitationReport


def _parse_count(text: str) -> int:
    v = float(text)
    if not math.isfinite(v) or v != round(v):
        raise ValueError(f"not an integer count: {text!r}")
    return int(round(v))


def parse_csv(cfg: IngestConfig) -> ParseResult:
    """Read per-state daily counts over ``[cfg.start_date, cfg.end_date]``.

    Missing days are zero-filled, negative daily values clamped to zero;
    both are listed in the returned report.  Malformed rows are collected
    and tolerated up to ``cfg.max_error_fraction`` of all rows.
    """
    path = cfg.path
    if not path.is_file():
        raise IngestError(f"input file not found: {path}")
    report = SanitationReport()
    cells: dict[tuple[str, dt.date], tuple[int, int]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (cfg.date_column, cfg.unit_column, cfg.cases_column) if c not in header]
        if missing:
            raise IngestError(f"{path}: missing column(s) {missing}; header is {header}")
        for lineno, row in enumerate(reader, start=2):
            report.rows_read += 1
            unit = (row.get(cfg.unit_column) or "").strip().upper()
            if unit in SKIPPED_UNITS:
                report.rows_skipped += 1
                continue
            try:
                if unit not in STATE_CODES:
                    raise ValueError(f"unknown state code {unit!r}")
                day = dt.date.fromisoformat((row.get(cfg.date_column) or "").strip())
                value = _parse_count((row.get(cfg.cases_column) or "").strip())
            except (ValueError, TypeError) as exc:
                report.row_errors.append({"row": lineno, "error": str(exc)})
                continue
            key = (unit, day)
            if key in cells:
                report.row_errors.append({"row": lineno, "error": f"duplicate row for {unit} on {day}"})
                # keep the larger value so the outcome does not depend on row order
                if (value, -lineno) <= (cells[key][0], -cells[key][1]):
                    continue
            cells[key] = (value, lineno)

    n_bad = len(report.row_errors)
    if report.rows_read and n_bad > cfg.max_error_fraction * report.rows_read:
        raise IngestError(f"{path}: {n_bad} of {report.rows_read} rows failed to parse, "
                          f"first: {report.row_errors[0]}")
    for err in report.row_errors:
        log.warning("row %s rejected: %s", err["row"], err["error"])

    by_state: dict[str, dict[dt.date, tuple[int, int]]] = {}
    for (unit, day), v in cells.items():
        by_state.setdefault(unit, {})[day] = v

    n_days = (cfg.end_date - cfg.start_date).days + 1
    states = {}
    for unit in sorted(by_state):
        obs = by_state[unit]
        daily = _daily_values(unit, obs, cfg, report)
        counts = np.zeros(n_days, dtype=np.int64)
        for k in range(n_days):
            day = cfg.start_date + dt.timedelta(days=k)
            if day in daily:
                counts[k] = daily[day]
            else:
                report.records.append(SanitationRecord(
                    None, unit, day.isoformat(), cfg.cases_column, "", "0", "missing_date_filled"))
        states[unit] = IncidenceSeries(GeoUnit.state(unit), cfg.start_date, counts)
    for r in report.records:
        log.warning("sanitized %s %s %s: %r -> %r (%s)", r.unit, r.date, r.field,
                    r.original, r.replacement, r.reason)
    return ParseResult(states, report)


def _daily_values(unit, obs, cfg: IngestConfig, report: SanitationReport) -> dict[dt.date, int]:
    days = sorted(obs)
    out = {}
    if cfg.cases_semantics is CasesSemantics.CUMULATIVE_TOTAL:
        # first differences over the whole file, first observation kept;
        # a gap carries the previous total forward (zero new cases)
        prev = 0
        for day in days:
            total, lineno = obs[day]
            raw = total - prev
            prev = total
            out[day] = _clamp(raw, unit, day, lineno, cfg, report, "cumulative_decrease_clamped")
    else:
        for day in days:
            value, lineno = obs[day]
            out[day] = _clamp(value, unit, day, lineno, cfg, report, "negative_clamped")
    return {d: v for d, v in out.items() if cfg.start_date <= d <= cfg.end_date}


def _clamp(value, unit, day, lineno, cfg, report, reason) -> int:
    if value >= 0:
        return value
    if cfg.start_date <= day <= cfg.end_date:
        report.records.append(SanitationRecord(
            lineno, unit, day.isoformat(), cfg.cases_column, str(value), "0", reason))
    return 0


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass
class Aggregates:
    regions: dict[str, IncidenceSeries]
    country: IncidenceSeries


def aggregate(states: Mapping[str, IncidenceSeries], rmap: RegionMap | None = None) -> Aggregates:
    """Daywise integer sums: regions over their member states, the country
    over every state supplied.  Regions with no member present are omitted."""
    rmap = rmap or RegionMap()
    if not states:
        raise IngestError("no state series to aggregate")
    first = next(iter(states.values()))
    start, n = first.start_date, len(first)
    region_sums: dict[str, np.ndarray] = {}
    total = np.zeros(n, dtype=np.int64)
    for code, s in states.items():
        if s.start_date != start or len(s) != n:
            raise IngestError(f"state {code} covers {s.start_date}..{s.end_date}, "
                              f"expected {start}..{first.end_date}")
        region = rmap.region_of(code)
        region_sums.setdefault(region, np.zeros(n, dtype=np.int64))
        region_sums[region] += s.counts
        total += s.counts
    regions = {r: IncidenceSeries(GeoUnit.region(r), start, region_sums[r])
               for r in REGION_CODES if r in region_sums}
    return Aggregates(regions, IncidenceSeries(GeoUnit.country(), start, total))


def unit_series(states: Mapping[str, IncidenceSeries], rmap: RegionMap | None = None
                ) -> dict[GeoUnit, IncidenceSeries]:
    """Country, regions and states keyed by unit."""
    agg = aggregate(states, rmap)
    out = {agg.country.unit: agg.country}
    out.update({s.unit: s for s in agg.regions.values()})
    out.update({states[c].unit: states[c] for c in sorted(states)})
    return out


# ---------------------------------------------------------------------------
# relative shares (cases vs population)
# ---------------------------------------------------------------------------

def read_population(path) -> dict[str, int]:
    """Two-column file ``state_code,population``; a header row is optional."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"population file not found: {path}")
    pop = {}
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise IngestError(f"{path}:{lineno}: expected state_code,population")
            code, value = row[0].strip().upper(), row[1].strip()
            try:
                pop[code] = _parse_count(value)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise IngestError(f"{path}:{lineno}: bad population {value!r}") from None
    return pop


@dataclass(frozen=True)
class ShareRow:
    state: str
    cases_pct: float
    population_pct: float | None


def relative_share_report(states: Mapping[str, IncidenceSeries],
                          population: Mapping[str, int] | None = None) -> list[ShareRow]:
    """Each state's percentage of all cases (and of population, if given)."""
    codes = sorted(states)
    totals = {c: int(states[c].counts.sum()) for c in codes}
    all_cases = sum(totals.values())
    if population is not None:
        missing = [c for c in codes if c not in population]
        if missing:
            raise IngestError(f"population file lacks states {missing}")
        all_pop = sum(population[c] for c in codes)
    rows = []
    for c in codes:
        cases_pct = 100.0 * totals[c] / all_cases if all_cases else 0.0
        pop_pct = 100.0 * population[c] / all_pop if population is not None and all_pop else None
        rows.append(ShareRow(c, cases_pct, pop_pct))
    return rows
