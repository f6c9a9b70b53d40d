"""Command-line entry point: ``rtsurv {estimate,correlate,simulate,report}``."""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import EstimationConfig, GeoUnit, discretize_generation_interval
from .estimator import estimate_series
from .gammamath import GammaParams
from .ingest import (STUDY_END, STUDY_START, CasesSemantics, IngestConfig, IngestError, parse_csv,
                     read_population, relative_share_report, unit_series)
from .report import ChartSeries, emit_chart, emit_correlation_matrix, emit_rt_table, emit_share_table
from .simulate import parse_profile, parse_seeds, simulate
from .stats import (CorrelationRow, UndefinedCorrelation, correlate_vs_reference,
                    correlation_credible_interval, moving_average)

log = logging.getLogger("rtsurv")

OUT_DIR_ENV = "RTSURV_OUT_DIR"
DEFAULT_OUT_DIR = "rtsurv-out"


class CliError(Exception):
    pass


class Outputs:
    """Tracks written files so a failed run can remove its partial output."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.created_dir = not out_dir.exists()
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def rollback(self):
        for p in self.paths:
            p.unlink(missing_ok=True)
        if self.created_dir and self.out_dir.exists() and not any(self.out_dir.iterdir()):
            self.out_dir.rmdir()


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _add_model_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--tau", type=int, default=7, help="window length in days (default 7)")
    g.add_argument("--prior-shape", type=float, default=1.0)
    g.add_argument("--prior-scale", type=float, default=5.0)
    g.add_argument("--gi-mean", type=float, default=6.5, help="generation interval mean, days")
    g.add_argument("--gi-cv", type=float, default=0.62, help="generation interval coefficient of variation")
    g.add_argument("--gi-tail-eps", type=float, default=1e-4, help="truncate lags once the tail mass drops below this")
    g.add_argument("--mass", type=float, default=0.95, help="credible interval mass")


def _add_input_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("input")
    g.add_argument("--input", required=True, type=Path, help="per-state incidence CSV")
    g.add_argument("--from", dest="start", type=_date, default=STUDY_START)
    g.add_argument("--to", dest="end", type=_date, default=STUDY_END)
    g.add_argument("--date-column", default="date")
    g.add_argument("--unit-column", default="state")
    g.add_argument("--cases-column", default="newCases")
    g.add_argument("--cumulative", action="store_true", help="cases column holds running totals")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--out-dir", type=Path, default=None,
                   help=f"output directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    p.add_argument("--seed", type=int, default=None, help="master random seed")
    p.add_argument("--workers", type=int, default=4, help="worker threads for per-unit work")
    # also accepted after the subcommand; SUPPRESS keeps the top-level value otherwise
    p.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtsurv", description="Sliding-window Bayesian R(t) surveillance")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="R(t) table and chart per geographic unit")
    _add_input_flags(p)
    _add_model_flags(p)
    p.add_argument("--units", default=None, help="comma list, e.g. BR,SP,region:SE (default: all available)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("correlate", help="MA and R(t) correlation of each unit against the country")
    _add_input_flags(p)
    _add_model_flags(p)
    p.add_argument("--units", default=None, help="comma list (default: all regions and states available)")
    p.add_argument("--samples", type=int, default=1000, help="posterior trajectory pairs per unit")
    p.add_argument("--ma-window", type=int, default=7)
    _add_run_flags(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("simulate", help="renewal-equation incidence with a known R profile")
    p.add_argument("--profile", required=True, help="piecewise-constant R, e.g. 2.0x60,0.7x120")
    p.add_argument("--seeds", default="100x5", help="seed prefix, e.g. 100x5 or 10,20,30")
    p.add_argument("--start-date", type=_date, default=dt.date(2020, 1, 1))
    p.add_argument("--estimate", action="store_true", help="also write the recovered R(t) table")
    _add_model_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="share of national cases (and population) per state")
    _add_input_flags(p)
    p.add_argument("--population", type=Path, default=None, help="state_code,population CSV")
    _add_run_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def _out_dir(args) -> Path:
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    log.info("event=seed chosen=%d", seed)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _model(args):
    try:
        gi = discretize_generation_interval(args.gi_mean, args.gi_cv, args.gi_tail_eps)
        cfg = EstimationConfig(args.tau, GammaParams(args.prior_shape, args.prior_scale), args.mass)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return gi, cfg


def _load(args, outputs: Outputs):
    cfg = IngestConfig(
        path=args.input, date_column=args.date_column, unit_column=args.unit_column,
        cases_column=args.cases_column, start_date=args.start, end_date=args.end,
        cases_semantics=CasesSemantics.CUMULATIVE_TOTAL if args.cumulative else CasesSemantics.DAILY_NEW,
    )
    parsed = parse_csv(cfg)
    if not parsed.states:
        raise CliError(f"{args.input}: no state rows in the requested range")
    log.info("event=parsed states=%d rows=%d modified_cells=%d row_errors=%d", len(parsed.states),
             parsed.report.rows_read, parsed.report.n_modified, len(parsed.report.row_errors))
    if parsed.report:
        parsed.report.write(outputs.path("sanitation_report.json"))
    return parsed, unit_series(parsed.states)


def _select(available: dict, spec: str | None, default):
    if spec is None:
        return default
    units = []
    for tok in spec.split(","):
        if not tok.strip():
            continue
        try:
            unit = GeoUnit.parse(tok)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        if unit not in available:
            raise CliError(f"no data for unit {unit}")
        units.append(unit)
    if not units:
        raise CliError("--units selected nothing")
    return units


def _estimate_all(series_by_unit: dict, units: list, gi, cfg, workers: int) -> dict:
    def one(unit):
        rt = estimate_series(series_by_unit[unit], gi, cfg)
        log.info("event=estimated unit=%s days=%d", unit.key, len(rt))
        return rt
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(one, units))
    return dict(zip(units, results))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_estimate(args, outputs: Outputs) -> None:
    gi, cfg = _model(args)
    _, series = _load(args, outputs)
    units = _select(series, args.units, list(series))
    country = GeoUnit.country()
    needed = units if country in units else units + [country]
    rts = _estimate_all(series, needed, gi, cfg, args.workers)
    desc = (f"tau={cfg.window_tau} prior_shape={cfg.prior.shape!r} prior_scale={cfg.prior.scale!r} "
            f"gi_mean={args.gi_mean!r} gi_cv={args.gi_cv!r} gi_n={gi.n} mass={cfg.credible_mass!r}; "
            "country series is the sum of the state rows")
    for unit in units:
        rt = rts[unit]
        emit_rt_table(rt, outputs.path(f"{unit.stem}_rt.csv"))
        # a series shorter than the burn-in still gets a chart, drawn from the flagged days
        short = not (~rt.burn_in).any()
        if short:
            log.warning("event=all_burn_in unit=%s days=%d", unit.key, len(rt))
        lines = [ChartSeries.from_rt(str(unit), rt, include_burn_in=short)]
        if unit != country:
            lines.append(ChartSeries.from_rt(str(country), rts[country], band=False, include_burn_in=short))
        emit_chart(lines, outputs.path(f"{unit.stem}_rt.svg"), title=f"R(t) {unit}", description=desc)
        log.info("event=written unit=%s", unit.key)


def cmd_correlate(args, outputs: Outputs) -> None:
    gi, cfg = _model(args)
    if args.samples < 1:
        raise CliError("--samples must be positive")
    seed = _seed(args)
    _, series = _load(args, outputs)
    country = GeoUnit.country()
    default = [u for u in series if u != country]
    units = [u for u in _select(series, args.units, default) if u != country]
    if not units:
        raise CliError("nothing to correlate against the country")

    ma = {u: moving_average(series[u], args.ma_window) for u in units}
    ma_rows = correlate_vs_reference(ma, moving_average(series[country], args.ma_window))

    rts = _estimate_all(series, [country] + units, gi, cfg, args.workers)
    streams = np.random.SeedSequence(seed).spawn(len(units))

    def one(k):
        unit = units[k]
        try:
            ci = correlation_credible_interval(rts[unit], rts[country], args.samples, cfg.credible_mass,
                                               np.random.default_rng(streams[k]))
        except UndefinedCorrelation as exc:
            return CorrelationRow(unit, None, reason=str(exc))
        return CorrelationRow(unit, ci.r, ci.lower, ci.upper)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        rt_rows = list(pool.map(one, range(len(units))))
    for row in ma_rows + rt_rows:
        if row.r is None:
            log.warning("event=undefined_correlation unit=%s reason=%s", row.unit.key, row.reason)

    emit_correlation_matrix({"ma": ma_rows, "rt": rt_rows}, outputs.path("correlation_matrix.csv"))
    meta = {
        "reference": country.key,
        "reference_construction": "sum of state rows",
        "ma_window": args.ma_window,
        "rt_point": "pearson of posterior means over shared non-burn-in days",
        "rt_interval": {
            "samples": args.samples,
            "mass": cfg.credible_mass,
            "sampling": "unit and reference trajectories drawn independently",
            "seed": seed,
        },
        "model": {"tau": cfg.window_tau, "prior_shape": cfg.prior.shape, "prior_scale": cfg.prior.scale,
                  "gi_mean": args.gi_mean, "gi_cv": args.gi_cv, "gi_tail_eps": args.gi_tail_eps, "gi_n": gi.n},
        "burn_in_excluded": True,
    }
    outputs.path("correlation_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args, outputs: Outputs) -> None:
    gi, cfg = _model(args)
    try:
        profile = parse_profile(args.profile)
        seeds = parse_seeds(args.seeds)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    inc = simulate(profile, gi, seeds, profile.size, rng, start_date=args.start_date)
    path = outputs.path("simulated_incidence.csv")
    with path.open("w") as fh:
        fh.write("date,cases,r_true\n")
        for d, c, r in zip(inc.dates, inc.counts, profile):
            fh.write(f"{d},{int(c)},{float(r)!r}\n")
    log.info("event=simulated days=%d total_cases=%d", len(inc), int(inc.counts.sum()))
    if args.estimate:
        if len(inc) < cfg.window_tau:
            raise CliError("simulated series is shorter than the estimation window")
        emit_rt_table(estimate_series(inc, gi, cfg), outputs.path("simulated_rt.csv"))


def cmd_report(args, outputs: Outputs) -> None:
    parsed, _ = _load(args, outputs)
    population = read_population(args.population) if args.population else None
    rows = relative_share_report(parsed.states, population)
    emit_share_table(rows, outputs.path("relative_shares.csv"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, stream=sys.stderr,
                        format="rtsurv level=%(levelname)s %(message)s", force=True)
    outputs = Outputs(_out_dir(args))
    try:
        args.func(args, outputs)
    except (CliError, IngestError, ValueError, OSError) as exc:
        log.error("event=failed command=%s error=%s", args.command, exc)
        outputs.rollback()
        return 1
    log.info("event=done command=%s files=%d dir=%s", args.command, len(outputs.paths), outputs.out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
