import datetime as dt
import json
import random
from pathlib import Path

import numpy as np
import pytest

from rtsurv.core import STATE_CODES, GeoUnit, IncidenceSeries
from rtsurv.ingest import (BRAZIL_REGIONS, STUDY_END, STUDY_START, CasesSemantics, IngestConfig, IngestError,
                           RegionMap, aggregate, parse_csv, read_population, relative_share_report, unit_series)

FIXTURES = Path(__file__).parent / "fixtures"
D0 = dt.date(2020, 5, 20)


def write(path, rows, header=("date", "state", "newCases")):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return path


def cfg(path, days=None, **kw):
    end = D0 + dt.timedelta(days=days - 1) if days else D0
    return IngestConfig(path=path, start_date=kw.pop("start", D0), end_date=kw.pop("end", end), **kw)


def day(k):
    return (D0 + dt.timedelta(days=k)).isoformat()


class TestConfig:
    def test_defaults(self):
        c = IngestConfig(path="x.csv")
        assert (c.start_date, c.end_date) == (STUDY_START, STUDY_END)
        assert (c.date_column, c.unit_column, c.cases_column) == ("date", "state", "newCases")
        assert c.cases_semantics is CasesSemantics.DAILY_NEW

    def test_invalid(self):
        with pytest.raises(ValueError):
            IngestConfig(path="x", start_date=dt.date(2021, 1, 2), end_date=dt.date(2021, 1, 1))
        with pytest.raises(ValueError):
            IngestConfig(path="x", cases_column="")


class TestParse:
    def test_daily_copied(self, tmp_path):
        p = write(tmp_path / "a.csv", [(day(0), "AC", 4), (day(1), "AC", 0), (day(2), "AC", 9)])
        res = parse_csv(cfg(p, 3))
        assert list(res.states) == ["AC"]
        assert res.states["AC"].counts.tolist() == [4, 0, 9]
        assert res.report.n_modified == 0 and not res.report

    def test_cumulative(self, tmp_path):
        rows = [(day(k), "RJ", v) for k, v in enumerate([10, 15, 15, 22])]
        res = parse_csv(cfg(write(tmp_path / "c.csv", rows), 4, cases_semantics=CasesSemantics.CUMULATIVE_TOTAL))
        assert res.states["RJ"].counts.tolist() == [10, 5, 0, 7]

    def test_cumulative_revision_clamped(self, tmp_path):
        rows = [(day(0), "RJ", 10), (day(1), "RJ", 8)]
        res = parse_csv(cfg(write(tmp_path / "c.csv", rows), 2, cases_semantics=CasesSemantics.CUMULATIVE_TOTAL))
        assert res.states["RJ"].counts.tolist() == [10, 0]
        assert res.report.n_modified == 1
        rec = res.report.records[0]
        assert (rec.original, rec.replacement, rec.row) == ("-2", "0", 3)

    def test_negative_daily_clamped(self, tmp_path):
        res = parse_csv(cfg(write(tmp_path / "n.csv", [(day(0), "PE", 3), (day(1), "PE", -5)]), 2))
        assert res.states["PE"].counts.tolist() == [3, 0]
        assert res.report.records[0].reason == "negative_clamped"

    def test_missing_dates_filled(self, tmp_path):
        res = parse_csv(cfg(write(tmp_path / "m.csv", [(day(0), "PA", 3), (day(3), "PA", 6)]), 5))
        assert res.states["PA"].counts.tolist() == [3, 0, 0, 6, 0]
        filled = [r.date for r in res.report.records if r.reason == "missing_date_filled"]
        assert filled == [day(1), day(2), day(4)]
        assert res.report.n_modified == 3

    def test_range_filter(self, tmp_path):
        rows = [(day(k), "SC", k) for k in range(-3, 10)]
        res = parse_csv(cfg(write(tmp_path / "r.csv", rows), 4))
        assert res.states["SC"].counts.tolist() == [0, 1, 2, 3]
        assert res.states["SC"].start_date == D0

    def test_total_rows_skipped(self, tmp_path):
        res = parse_csv(cfg(write(tmp_path / "t.csv", [(day(0), "TOTAL", 99), (day(0), "AP", 1)])))
        assert list(res.states) == ["AP"]
        assert res.report.rows_skipped == 1

    def test_order_independent(self, tmp_path):
        rows = [(day(k), s, (k * 31 + i * 7) % 50) for k in range(30) for i, s in enumerate(STATE_CODES)]
        a = parse_csv(cfg(write(tmp_path / "a.csv", rows), 30))
        random.Random(0).shuffle(rows)
        b = parse_csv(cfg(write(tmp_path / "b.csv", rows), 30))
        assert a.states == b.states

    def test_duplicates_resolved_independent_of_order(self, tmp_path):
        rows = [(day(k), "GO", k) for k in range(200)]
        a = parse_csv(cfg(write(tmp_path / "a.csv", rows + [(day(5), "GO", 50)]), 200))
        b = parse_csv(cfg(write(tmp_path / "b.csv", [(day(5), "GO", 50)] + rows), 200))
        assert a.states == b.states
        assert a.states["GO"].counts[5] == 50
        assert len(a.report.row_errors) == 1

    def test_bad_rows_tolerated_below_threshold(self, tmp_path):
        rows = [(day(k % 200), STATE_CODES[k // 200], k) for k in range(400)]
        rows.append((day(0), "AC", "abc"))
        res = parse_csv(cfg(write(tmp_path / "b.csv", rows), 200))
        assert len(res.report.row_errors) == 1 and res.report

    def test_bad_rows_abort_above_threshold(self, tmp_path):
        rows = [(day(k), "AC", 1) for k in range(50)] + [("2020-13-40", "AC", 1)]
        with pytest.raises(IngestError, match="failed to parse"):
            parse_csv(cfg(write(tmp_path / "b.csv", rows), 50))

    def test_missing_file_and_columns(self, tmp_path):
        with pytest.raises(IngestError, match="not found"):
            parse_csv(cfg(tmp_path / "nope.csv"))
        p = write(tmp_path / "h.csv", [(day(0), "AC", 1)], header=("date", "uf", "newCases"))
        with pytest.raises(IngestError, match="missing column"):
            parse_csv(cfg(p))
        res = parse_csv(cfg(p, unit_column="uf"))
        assert res.states["AC"].counts.tolist() == [1]

    def test_vendored_repository_layout(self):
        res = parse_csv(cfg(FIXTURES / "cases-brazil-states-sample.csv", 4))
        assert sorted(res.states) == ["AM", "SP"]
        assert res.states["SP"].counts.tolist() == [812, 930, 1001, 760]
        assert res.report.rows_skipped == 4
        cum = parse_csv(cfg(FIXTURES / "cases-brazil-states-sample.csv", 4, cases_column="totalCases",
                            cases_semantics=CasesSemantics.CUMULATIVE_TOTAL))
        assert cum.states == res.states

    def test_report_json(self, tmp_path):
        res = parse_csv(cfg(write(tmp_path / "n.csv", [(day(0), "PE", -1)]), 2))
        out = json.loads(res.report.write(tmp_path / "r.json").read_text())
        assert out["n_modified"] == 2
        assert {r["reason"] for r in out["records"]} == {"negative_clamped", "missing_date_filled"}
        assert set(out["records"][0]) == {"row", "unit", "date", "field", "original", "replacement", "reason"}


class TestRegions:
    def test_table(self):
        rm = RegionMap()
        assert [rm.region_of(s) for s in ["AM", "SP", "RS", "BA", "MT"]] == ["N", "SE", "S", "NE", "CO"]
        assert len(BRAZIL_REGIONS) == 27
        assert sum(len(rm.members(r)) for r in ["N", "NE", "S", "SE", "CO"]) == 27

    def test_invalid_maps(self):
        bad = dict(BRAZIL_REGIONS)
        del bad["AC"]
        with pytest.raises(ValueError):
            RegionMap(bad)
        bad = {s: "N" for s in STATE_CODES}
        with pytest.raises(ValueError):
            RegionMap(bad)


def state_set(rng, days=20):
    return {s: IncidenceSeries(GeoUnit.state(s), D0, rng.integers(0, 10**6, days)) for s in STATE_CODES}


class TestAggregate:
    def test_two_states(self):
        states = {"SP": IncidenceSeries(GeoUnit.state("SP"), D0, [1, 2, 3]),
                  "RJ": IncidenceSeries(GeoUnit.state("RJ"), D0, [4, 5, 6])}
        agg = aggregate(states)
        assert agg.regions["SE"].counts.tolist() == [5, 7, 9]
        assert list(agg.regions) == ["SE"]

    def test_partition_identities(self, rng):
        states = state_set(rng)
        agg = aggregate(states)
        assert len(agg.regions) == 5
        assert np.array_equal(agg.country.counts, sum(s.counts for s in states.values()))
        assert np.array_equal(agg.country.counts, sum(r.counts for r in agg.regions.values()))
        for code, reg in agg.regions.items():
            members = RegionMap().members(code)
            assert np.array_equal(reg.counts, sum(states[m].counts for m in members))

    def test_misaligned(self):
        states = {"SP": IncidenceSeries(GeoUnit.state("SP"), D0, [1, 2, 3]),
                  "RJ": IncidenceSeries(GeoUnit.state("RJ"), D0 + dt.timedelta(days=1), [4, 5, 6])}
        with pytest.raises(IngestError):
            aggregate(states)

    def test_unit_series(self, rng):
        units = unit_series(state_set(rng))
        assert len(units) == 33
        assert GeoUnit.region("SE") in units and GeoUnit.state("SE") in units


class TestShares:
    def test_single_state(self):
        rows = relative_share_report({"AC": IncidenceSeries(GeoUnit.state("AC"), D0, [3, 4])})
        assert rows[0].cases_pct == 100.0 and rows[0].population_pct is None

    def test_equal_states(self):
        states = {s: IncidenceSeries(GeoUnit.state(s), D0, [5, 5]) for s in STATE_CODES}
        rows = relative_share_report(states, {s: 1000 for s in STATE_CODES})
        for r in rows:
            assert r.cases_pct == pytest.approx(100 / 27, abs=1e-9)
            assert r.population_pct == pytest.approx(100 / 27, abs=1e-9)
        assert abs(sum(r.cases_pct for r in rows) - 100.0) <= 1e-9

    def test_population_file(self, tmp_path):
        p = tmp_path / "pop.csv"
        p.write_text("state_code,population\nAC,100\nAM,300\n")
        assert read_population(p) == {"AC": 100, "AM": 300}
        states = {s: IncidenceSeries(GeoUnit.state(s), D0, [1]) for s in ["AC", "AM", "AP"]}
        with pytest.raises(IngestError, match="lacks"):
            relative_share_report(states, read_population(p))
        p.write_text("state_code,population\nAC,abc\n")
        with pytest.raises(IngestError, match="bad population"):
            read_population(p)
        with pytest.raises(IngestError):
            read_population(tmp_path / "missing.csv")
