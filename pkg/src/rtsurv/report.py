"""Serialization of estimates, correlation tables and SVG charts.

Floats are written with ``repr`` (shortest round-trip decimal) so that
every numeric file parses back to bit-identical values.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .core import DatedSeries, GeoUnit, RtSeries
from .ingest import ShareRow
from .stats import CorrelationRow

RT_COLUMNS = ("date", "mean", "variance", "lower", "upper", "burn_in")


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _parse_float(text: str) -> float | None:
    return float(text) if text != "" else None


def emit_rt_table(rt: RtSeries, destination) -> Path:
    if len(rt) == 0:
        raise ValueError("refusing to write an empty R(t) table")
    path = Path(destination)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RT_COLUMNS)
        for d, m, v, lo, hi, b in zip(rt.dates, rt.mean, rt.variance, rt.lower, rt.upper, rt.burn_in):
            w.writerow([str(d), _fmt(m), _fmt(v), _fmt(lo), _fmt(hi), "true" if b else "false"])
    return path


@dataclass
class RtTable:
    dates: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    burn_in: np.ndarray


def read_rt_table(path) -> RtTable:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return RtTable(
        dates=np.array([r["date"] for r in rows], dtype="datetime64[D]"),
        mean=np.array([float(r["mean"]) for r in rows]),
        variance=np.array([float(r["variance"]) for r in rows]),
        lower=np.array([float(r["lower"]) for r in rows]),
        upper=np.array([float(r["upper"]) for r in rows]),
        burn_in=np.array([r["burn_in"] == "true" for r in rows], dtype=bool),
    )


# ---------------------------------------------------------------------------
# correlation tables
# ---------------------------------------------------------------------------

def _sort_key(unit: GeoUnit):
    return (unit.code, unit.kind)


def emit_correlation_matrix(table: Sequence[CorrelationRow] | Mapping[str, Sequence[CorrelationRow]],
                            destination) -> Path:
    """Write correlations sorted by unit code.

    A plain sequence of rows gives columns ``unit,kind,r,lower,upper,reason``.
    A mapping ``indicator -> rows`` gives one column group per indicator,
    prefixed with the indicator name (``ma_r``, ``rt_lower``, ...).  An
    undefined correlation is an empty ``r`` field plus a reason.
    """
    if isinstance(table, Mapping):
        groups = {name: list(rows) for name, rows in table.items()}
        prefix = True
    else:
        groups = {"": list(table)}
        prefix = False
    units = sorted({row.unit for rows in groups.values() for row in rows}, key=_sort_key)
    if not units:
        raise ValueError("refusing to write an empty correlation table")
    index = {name: {row.unit: row for row in rows} for name, rows in groups.items()}
    header = ["unit", "kind"]
    for name in groups:
        p = f"{name}_" if prefix else ""
        header += [f"{p}r", f"{p}lower", f"{p}upper", f"{p}reason"]
    path = Path(destination)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for unit in units:
            line = [unit.code, unit.kind]
            for name in groups:
                row = index[name].get(unit)
                if row is None:
                    line += ["", "", "", "not computed"]
                else:
                    line += [_fmt(row.r), _fmt(row.lower), _fmt(row.upper), row.reason]
            w.writerow(line)
    return path


def read_correlation_matrix(path) -> dict[str, list[CorrelationRow]]:
    """Inverse of :func:`emit_correlation_matrix`; single-indicator files come
    back under the key ``""``."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    names = [h[:-2] for h in header if h.endswith("r") and (h == "r" or h.endswith("_r"))]
    out = {}
    for name in names:
        p = f"{name}_" if name else ""
        out[name] = [
            CorrelationRow(GeoUnit(r["kind"], r["unit"]), _parse_float(r[f"{p}r"]),
                           _parse_float(r[f"{p}lower"]), _parse_float(r[f"{p}upper"]), r[f"{p}reason"])
            for r in rows
        ]
    return out


def emit_share_table(rows: Sequence[ShareRow], destination) -> Path:
    path = Path(destination)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "cases_pct", "population_pct"])
        for r in rows:
            w.writerow([r.state, _fmt(r.cases_pct), _fmt(r.population_pct)])
    return path


# ---------------------------------------------------------------------------
# SVG line chart
# ---------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


@dataclass
class ChartSeries:
    name: str
    series: DatedSeries
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    @classmethod
    def from_rt(cls, name: str, rt: RtSeries, band: bool = True, include_burn_in: bool = False) -> "ChartSeries":
        keep = np.ones(len(rt), dtype=bool) if include_burn_in else ~rt.burn_in
        return cls(name, DatedSeries(rt.dates[keep], rt.mean[keep]),
                   rt.lower[keep] if band else None, rt.upper[keep] if band else None)


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _num(v: float) -> str:
    return f"{v:.2f}"


def emit_chart(series_set: Sequence[ChartSeries], destination, title: str = "",
               width: int = 800, height: int = 400, description: str = "") -> Path:
    """Standalone SVG: one polyline per series, a translucent band polygon
    where bounds are given, a date axis and a dashed guide at R = 1."""
    series_set = [s for s in series_set]
    if not series_set or all(len(s.series) == 0 for s in series_set):
        raise ValueError("chart needs at least one non-empty series")
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    all_dates = np.concatenate([s.series.dates for s in series_set]).astype(np.int64)
    d0, d1 = int(all_dates.min()), int(all_dates.max())
    ys = [s.series.values for s in series_set]
    ys += [s.lower for s in series_set if s.lower is not None]
    ys += [s.upper for s in series_set if s.upper is not None]
    yv = np.concatenate([np.asarray(y, dtype=float) for y in ys] + [np.array([1.0])])
    yv = yv[np.isfinite(yv)]
    y0, y1 = float(yv.min()), float(yv.max())
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = max(0.0, y0 - pad) if y0 >= 0 else y0 - pad, y1 + pad

    def sx(d):
        return left + (0.5 * pw if d1 == d0 else (d - d0) / (d1 - d0) * pw)

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    if description:
        out.append(f"<desc>{escape(description)}</desc>")
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="#444"/>')

    # y axis ticks
    step = _nice_step(y1 - y0)
    t = math.ceil(y0 / step) * step
    while t <= y1 + 1e-12:
        y = sy(t)
        out.append(f'<line x1="{left - 4}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="#444"/>')
        out.append(f'<text x="{left - 6}" y="{_num(y + 4)}" text-anchor="end">{t:g}</text>')
        t += step
    # date ticks at month starts, thinned to at most ~8 labels
    first = np.datetime64(d0, "D").astype(dt.date)
    last = np.datetime64(d1, "D").astype(dt.date)
    months = []
    m = dt.date(first.year, first.month, 1)
    while m <= last:
        if m >= first:
            months.append(m)
        m = dt.date(m.year + (m.month == 12), m.month % 12 + 1, 1)
    if not months:
        months = [first]
    stride = max(1, math.ceil(len(months) / 8))
    for m in months[::stride]:
        x = sx(np.datetime64(m, "D").astype(np.int64))
        out.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 4}" stroke="#444"/>')
        out.append(f'<text x="{_num(x)}" y="{top + ph + 16}" text-anchor="middle">{m.isoformat()}</text>')

    if y0 <= 1.0 <= y1:
        y = sy(1.0)
        out.append(f'<line class="guide" x1="{left}" y1="{_num(y)}" x2="{left + pw}" y2="{_num(y)}" '
                   'stroke="#888" stroke-dasharray="4 3"/>')

    for k, s in enumerate(series_set):
        color = PALETTE[k % len(PALETTE)]
        xs = [sx(d) for d in s.series.dates.astype(np.int64)]
        if s.lower is not None and s.upper is not None:
            upper = [f"{_num(x)},{_num(sy(v))}" for x, v in zip(xs, s.upper)]
            lower = [f"{_num(x)},{_num(sy(v))}" for x, v in zip(xs, s.lower)]
            pts = " ".join(upper + lower[::-1])
            out.append(f'<polygon class="band" points="{pts}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(f"{_num(x)},{_num(sy(v))}" for x, v in zip(xs, s.series.values))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5">'
                   f"<title>{escape(s.name)}</title></polyline>")
        ly = top + 14 + 14 * k
        out.append(f'<text x="{left + pw - 8}" y="{ly}" text-anchor="end" fill={quoteattr(color)}>'
                   f"{escape(s.name)}</text>")
    out.append("</svg>")
    path = Path(destination)
    path.write_text("\n".join(out) + "\n")
    return path
