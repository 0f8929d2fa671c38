"""CSV ingestion, synthetic data generation, and figure-data emission."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
from pathlib import Path

import numpy as np

from . import simulate
from .activity_time import ActivityTime
from .core_types import (
    TRADING_DAYS_PER_YEAR,
    BnpError,
    IndexSeries,
    MmmParams,
    TimeGrid,
    YearFraction,
)
from .hedging import HedgeLedger

SCHEMA_VERSION = "1"
DEFAULT_SYNTHETIC_START = dt.date(2000, 1, 3)


class CsvFormatError(BnpError):
    code = "io_cli.csv_format"


class MissingUpstreamError(BnpError):
    code = "io_cli.missing_upstream"


def load_index_csv(
    path: str | Path, convention: YearFraction = YearFraction.ACT365
) -> IndexSeries:
    """Load an index series from a `date,level` CSV.

    ISO-8601 dates, decimal levels, rows in any order (sorted on load).
    Malformed rows are reported with their line number; duplicate dates
    and non-positive levels are rejected by series validation.
    """
    path = Path(path)
    rows: list[tuple[dt.date, float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["date", "level"]:
            raise CsvFormatError(f"{path}: expected header 'date,level'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise CsvFormatError(f"{path}:{lineno}: expected 2 columns")
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{lineno}: bad date {row[0]!r}") from exc
            try:
                level = float(row[1])
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{lineno}: bad level {row[1]!r}") from exc
            rows.append((day, level))
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: need at least 2 data rows, got {len(rows)}")
    rows.sort(key=lambda r: r[0])
    return IndexSeries(
        dates=tuple(r[0] for r in rows),
        levels=np.array([r[1] for r in rows]),
        convention=convention,
    )


def series_report(series: IndexSeries) -> dict:
    """Parse report: row count, date range, and calendar gaps."""
    gaps = [
        (b - a).days
        for a, b in zip(series.dates, series.dates[1:])
        if (b - a).days > 1
    ]
    return {
        "n_rows": len(series),
        "first_date": series.epoch.isoformat(),
        "last_date": series.dates[-1].isoformat(),
        "n_gaps": len(gaps),
        "max_gap_days": max(gaps) if gaps else 1,
    }


def business_days(start: dt.date, n: int) -> tuple[dt.date, ...]:
    """n consecutive weekdays from start (start shifted to a weekday)."""
    days = []
    day = start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return tuple(days)


def synthetic_index_series(
    params: MmmParams,
    years: float,
    seed: int | None = 0,
    start: dt.date = DEFAULT_SYNTHETIC_START,
    steps_per_year: int = TRADING_DAYS_PER_YEAR,
) -> IndexSeries:
    """On-model daily series from the exact sampler (trading-day clock)."""
    n_steps = max(1, round(years * steps_per_year))
    grid = TimeGrid(0.0, np.arange(n_steps + 1) / steps_per_year)
    path = simulate.simulate_q(params, grid, seed)
    return IndexSeries(
        dates=business_days(start, n_steps + 1),
        levels=path.s_star,
        convention=YearFraction.ACT252,
    )


class Figure(enum.Enum):
    FIG1 = "fig1"  # date,level
    FIG2 = "fig2"  # date,tau,trendline
    FIG3 = "fig3"  # date,price
    FIG4 = "fig4"  # date,fraction
    FIG5 = "fig5"  # date,pnl
    FIG6 = "fig6"  # date,pnl_enhanced


_LEDGER_FIGURES = {
    Figure.FIG3: ("price", "bond_price"),
    Figure.FIG4: ("fraction", "fraction_gop"),
    Figure.FIG5: ("pnl", "pnl"),
    Figure.FIG6: ("pnl_enhanced", "pnl"),
}


def emit_figure_data(
    which: Figure,
    out_dir: str | Path,
    *,
    series: IndexSeries | None = None,
    activity: ActivityTime | None = None,
    ledger: HedgeLedger | None = None,
) -> Path:
    """Write the tidy CSV backing one figure; returns the file path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{which.value}.csv"
    if which is Figure.FIG1:
        if series is None:
            raise MissingUpstreamError("fig1 needs the index series")
        write_csv(target, ["date", "level"],
                  [[d.isoformat() for d in series.dates], series.levels])
    elif which is Figure.FIG2:
        if series is None or activity is None:
            raise MissingUpstreamError("fig2 needs the series and the fitted activity time")
        write_csv(
            target,
            ["date", "tau", "trendline"],
            [[d.isoformat() for d in series.dates], activity.tau, activity.trend_values()],
        )
    else:
        name, field = _LEDGER_FIGURES[which]
        if ledger is None or series is None:
            raise MissingUpstreamError(f"{which.value} needs a hedge ledger and its series")
        n = len(ledger.grid)
        write_csv(
            target,
            ["date", name],
            [[d.isoformat() for d in series.dates[:n]], getattr(ledger, field)],
        )
    return target


def write_csv(path: str | Path, header: list[str], columns: list) -> Path:
    """Column-oriented CSV writer with round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(columns[0])
    if any(len(c) != n for c in columns):
        raise MissingUpstreamError("figure columns have mismatched lengths")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(n):
            writer.writerow([_cell(col[i]) for col in columns])
    return path


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_json(path: str | Path, payload: dict) -> Path:
    """Deterministic JSON writer (sorted keys, repr floats)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    return path
