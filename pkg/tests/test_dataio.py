import datetime as dt

import numpy as np
import pytest

from bnpricer import hedging
from bnpricer.activity_time import fit_trendline
from bnpricer.core_types import MmmParams, SeriesValidationError, YearFraction
from bnpricer.dataio import (
    CsvFormatError,
    Figure,
    MissingUpstreamError,
    emit_figure_data,
    load_index_csv,
    series_report,
    synthetic_index_series,
    write_csv,
    write_json,
)

PARAMS = MmmParams(tau0=2.15, a_bar=0.053, s_star_0=100.0)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestLoadCsv:
    def test_well_formed(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-06,100.0", "2020-01-07,101.5", "2020-01-08,99.0",
        ])
        series = load_index_csv(p)
        assert len(series) == 3
        np.testing.assert_allclose(series.levels, [100.0, 101.5, 99.0])

    def test_rows_sorted_on_load(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-08,99.0", "2020-01-06,100.0", "2020-01-07,101.5",
        ])
        series = load_index_csv(p)
        assert series.dates[0] == dt.date(2020, 1, 6)
        np.testing.assert_allclose(series.levels, [100.0, 101.5, 99.0])

    def test_duplicate_date_names_it(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-06,100.0", "2020-01-06,101.0",
        ])
        with pytest.raises(SeriesValidationError, match="2020-01-06"):
            load_index_csv(p)

    def test_weekend_gap_recorded(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-03,100.0", "2020-01-06,101.0", "2020-01-07,102.0",
        ])
        series = load_index_csv(p)
        report = series_report(series)
        assert report["n_rows"] == 3
        assert report["n_gaps"] == 1
        assert report["max_gap_days"] == 3

    def test_malformed_row_has_line_number(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-06,100.0", "not-a-date,1.0",
        ])
        with pytest.raises(CsvFormatError, match=":3"):
            load_index_csv(p)

    def test_bad_level_has_line_number(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-06,abc",
        ])
        with pytest.raises(CsvFormatError, match=":2"):
            load_index_csv(p)

    def test_nonpositive_level_rejected(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", [
            "date,level", "2020-01-06,100.0", "2020-01-07,-3.0",
        ])
        with pytest.raises(SeriesValidationError, match="non-positive"):
            load_index_csv(p)

    def test_bad_header(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", ["time,price", "2020-01-06,1.0"])
        with pytest.raises(CsvFormatError, match="header"):
            load_index_csv(p)

    def test_too_few_rows(self, tmp_path):
        p = write_lines(tmp_path / "in.csv", ["date,level", "2020-01-06,1.0"])
        with pytest.raises(CsvFormatError, match="at least 2"):
            load_index_csv(p)


class TestSynthetic:
    def test_shape_and_convention(self):
        series = synthetic_index_series(PARAMS, years=1.0, seed=0)
        assert len(series) == 253
        assert series.convention is YearFraction.ACT252
        assert series.times()[-1] == pytest.approx(1.0)

    def test_deterministic(self):
        a = synthetic_index_series(PARAMS, years=0.5, seed=9)
        b = synthetic_index_series(PARAMS, years=0.5, seed=9)
        np.testing.assert_array_equal(a.levels, b.levels)
        assert a.dates == b.dates

    def test_weekday_dates(self):
        series = synthetic_index_series(PARAMS, years=0.2, seed=1)
        assert all(d.weekday() < 5 for d in series.dates)


class TestFigures:
    @pytest.fixture()
    def fitted(self):
        series = synthetic_index_series(PARAMS, years=2.0, seed=4)
        return series, fit_trendline(series)

    def test_fig2_schema(self, tmp_path, fitted):
        series, fit = fitted
        path = emit_figure_data(Figure.FIG2, tmp_path, series=series, activity=fit)
        lines = path.read_text().splitlines()
        assert lines[0] == "date,tau,trendline"
        assert len(lines) == len(series) + 1

    def test_fig5_max_matches_report(self, tmp_path, fitted):
        series, _ = fitted
        ledger = hedging.run_hedge(series, PARAMS, maturity=2.0)
        path = emit_figure_data(Figure.FIG5, tmp_path, series=series, ledger=ledger)
        rows = path.read_text().splitlines()[1:]
        pnl = np.array([float(r.split(",")[1]) for r in rows])
        assert np.max(np.abs(pnl)) == hedging.pnl_report(ledger)["max_abs_pnl"]

    def test_fig3_prices_end_at_payoff(self, tmp_path):
        series = synthetic_index_series(PARAMS, years=30.0, seed=4)
        ledger = hedging.run_hedge(series, PARAMS, maturity=30.0)
        path = emit_figure_data(Figure.FIG3, tmp_path, series=series, ledger=ledger)
        rows = path.read_text().splitlines()[1:]
        price = np.array([float(r.split(",")[1]) for r in rows])
        assert np.all((price > 0.0) & (price <= 1.0))
        assert price[-1] == 1.0

    def test_missing_upstream(self, tmp_path):
        with pytest.raises(MissingUpstreamError):
            emit_figure_data(Figure.FIG5, tmp_path, series=None, ledger=None)
        with pytest.raises(MissingUpstreamError):
            emit_figure_data(Figure.FIG2, tmp_path, series=None, activity=None)


class TestWriters:
    def test_csv_bytes_deterministic(self, tmp_path):
        cols = [["2020-01-06", "2020-01-07"], [1.0 / 3.0, 2.0 / 7.0]]
        a = write_csv(tmp_path / "a.csv", ["date", "x"], cols).read_bytes()
        b = write_csv(tmp_path / "b.csv", ["date", "x"], cols).read_bytes()
        assert a == b
        assert b"0.3333333333333333" in a

    def test_json_bytes_deterministic(self, tmp_path):
        payload = {"b": 2.0 / 3.0, "a": [1, 2], "nested": {"y": None, "x": "s"}}
        a = write_json(tmp_path / "a.json", payload).read_bytes()
        b = write_json(tmp_path / "b.json", payload).read_bytes()
        assert a == b
        assert a.startswith(b"{")
