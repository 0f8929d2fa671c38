"""Shared domain types, time conventions, and validation.

Calendar time is measured in real-valued years since the epoch of the
series under study.  The epoch is t = 0; every trendline intercept is
quoted at the epoch, which keeps it invariant under the choice of
calendar start date.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass

import numpy as np

TRADING_DAYS_PER_YEAR = 252
CALENDAR_DAYS_PER_YEAR = 365


class BnpError(Exception):
    """Base error; ``code`` is the module-qualified error code."""

    code = "bnpricer.error"


class SeriesValidationError(BnpError):
    code = "core_types.series_validation"


class ParamsError(BnpError):
    code = "core_types.params"


class YearFraction(enum.Enum):
    """Day-count convention mapping observation dates to year fractions."""

    ACT365 = "ACT365"
    ACT252 = "ACT252"


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy() if arr.flags.writeable else arr
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class IndexSeries:
    """Dated, strictly positive index observations in savings-account units.

    The series is the observable proxy for the stock growth-optimal
    portfolio.  Dates must be strictly increasing and levels strictly
    positive; both are enforced on construction.
    """

    dates: tuple[dt.date, ...]
    levels: np.ndarray
    convention: YearFraction = YearFraction.ACT365

    def __post_init__(self) -> None:
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "levels", _readonly(self.levels))
        if len(self.dates) != self.levels.size:
            raise SeriesValidationError(
                f"{len(self.dates)} dates but {self.levels.size} levels"
            )
        if len(self.dates) < 2:
            raise SeriesValidationError("need at least 2 observations")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur == prev:
                raise SeriesValidationError(f"duplicate date {cur.isoformat()}")
            if cur < prev:
                raise SeriesValidationError(
                    f"dates not increasing at {cur.isoformat()}"
                )
        if not np.all(np.isfinite(self.levels)) or np.any(self.levels <= 0.0):
            bad = int(np.argmin((self.levels > 0) & np.isfinite(self.levels)))
            raise SeriesValidationError(
                f"non-positive level {self.levels[bad]!r} at {self.dates[bad].isoformat()}"
            )

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def epoch(self) -> dt.date:
        return self.dates[0]

    def times(self) -> np.ndarray:
        """Observation times as years since the epoch (first date).

        ACT365 counts calendar days / 365; ACT252 counts each observation
        as one trading day, i.e. row index / 252.
        """
        if self.convention is YearFraction.ACT252:
            return np.arange(len(self.dates)) / TRADING_DAYS_PER_YEAR
        days = np.array([(d - self.epoch).days for d in self.dates], dtype=float)
        return days / CALENDAR_DAYS_PER_YEAR


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing grid of times (years); first point equals t0."""

    t0: float
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _readonly(self.points))
        if self.points.size < 1:
            raise ParamsError("empty time grid")
        if self.points[0] != self.t0:
            raise ParamsError(
                f"grid starts at {self.points[0]}, expected t0={self.t0}"
            )
        if np.any(np.diff(self.points) <= 0.0):
            raise ParamsError("grid points must be strictly increasing")

    def __len__(self) -> int:
        return int(self.points.size)

    @classmethod
    def from_points(cls, points) -> "TimeGrid":
        points = np.asarray(points, dtype=float)
        return cls(t0=float(points[0]), points=points)

    @classmethod
    def regular(cls, t0: float, horizon: float, n_steps: int) -> "TimeGrid":
        if n_steps < 1:
            raise ParamsError("n_steps must be >= 1")
        return cls(t0=t0, points=np.linspace(t0, t0 + horizon, n_steps + 1))


@dataclass(frozen=True)
class MmmParams:
    """Model parameter bundle.

    tau0       trendline value of the activity time at the epoch (t = 0)
    a_bar      trendline slope, per year
    s_star_0   initial index level at the epoch
    lambda_bar scale of the net risk-adjusted return; enters real-world
               simulation only, never pricing
    """

    tau0: float
    a_bar: float
    s_star_0: float
    lambda_bar: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.tau0):
            raise ParamsError(f"tau0 must be finite, got {self.tau0}")
        if not (self.a_bar > 0.0 and np.isfinite(self.a_bar)):
            raise ParamsError(f"a_bar must be positive, got {self.a_bar}")
        if not (self.s_star_0 > 0.0 and np.isfinite(self.s_star_0)):
            raise ParamsError(f"s_star_0 must be positive, got {self.s_star_0}")
        if not (self.lambda_bar >= 0.0 and np.isfinite(self.lambda_bar)):
            raise ParamsError(f"lambda_bar must be >= 0, got {self.lambda_bar}")


def trendline(params: MmmParams, t) -> np.ndarray | float:
    """Affine trendline of the activity time, tau0 + a_bar * t.

    ``t`` is years since the epoch at which ``params.tau0`` is anchored.
    Accepts scalars or arrays.
    """
    return params.tau0 + params.a_bar * np.asarray(t, dtype=float)[()]
