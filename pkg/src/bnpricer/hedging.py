"""Discrete-time self-financing replication of the zero-coupon bond.

The hedge holds two assets: the savings account (constant value 1) and
the index.  At each observation the target fraction of wealth in the
index is read off the pricing formulas, the holdings are reset, and the
portfolio then rides the next index move:

    V_{k+1} = V_k + units_k * (S_{k+1} - S_k),
    units_k = pi_k * V_k / S_k.

The fraction applied over (t_k, t_{k+1}] is computed from information
at t_k only.  The plain variant prices against the trendline activity
time; the enhanced variant substitutes the observed activity time and
parks all wealth in the savings account once the observed activity time
reaches the trendline value at maturity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import activity_time, pricing
from .core_types import BnpError, IndexSeries, MmmParams, TimeGrid, trendline

_GRID_EPS = 1e-9


class HedgeError(BnpError):
    code = "hedging.invalid"


@dataclass(frozen=True, eq=False)
class HedgeLedger:
    """Time-indexed record of one hedging backtest, in savings units."""

    grid: TimeGrid
    portfolio_value: np.ndarray
    bond_price: np.ndarray
    pnl: np.ndarray
    fraction_gop: np.ndarray
    terminal_value: float
    stopped_at: float | None = None

    def __post_init__(self) -> None:
        n = len(self.grid)
        for name in ("portfolio_value", "bond_price", "pnl", "fraction_gop"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.size != n:
                raise HedgeError(f"{name} length {arr.size} != grid length {n}")
        if not np.allclose(self.pnl, self.portfolio_value - self.bond_price,
                           rtol=0.0, atol=1e-12):
            raise HedgeError("pnl must equal portfolio_value - bond_price")
        if self.portfolio_value[0] != self.bond_price[0]:
            raise HedgeError("hedge must be initiated at the fair price")
        if np.any(self.portfolio_value <= 0.0):
            raise HedgeError("portfolio value must stay positive")
        if np.any((self.fraction_gop < 0.0) | (self.fraction_gop > 1.0)):
            raise HedgeError("fraction_gop must lie in [0, 1]")
        if self.stopped_at is not None:
            after = self.grid.points >= self.stopped_at
            if np.any(self.fraction_gop[after] != 0.0):
                raise HedgeError("all wealth must sit in savings after the stop")


def _hedge_window(series: IndexSeries, maturity: float):
    t = series.times()
    if maturity > t[-1] + _GRID_EPS:
        raise HedgeError(
            f"maturity {maturity} lies beyond the series end {t[-1]}"
        )
    if maturity <= t[0]:
        raise HedgeError(f"maturity {maturity} not after the series start")
    keep = t <= maturity + _GRID_EPS
    return t[keep], series.levels[keep]


def _portfolio_values(v0: float, s: np.ndarray, frac: np.ndarray) -> np.ndarray:
    rel = s[1:] / s[:-1]
    growth = frac[:-1] * rel + (1.0 - frac[:-1])
    return v0 * np.cumprod(np.concatenate([[1.0], growth]))


def _price_and_fraction(s: np.ndarray, dphi: np.ndarray, live: np.ndarray):
    """Price and invested fraction; 1.0 / 0.0 where the window is closed."""
    price = np.ones_like(s)
    frac = np.zeros_like(s)
    x = s[live] / (2.0 * dphi[live])
    price[live] = pricing.price_from_exponent(x)
    frac[live] = pricing.fraction_from_exponent(x)
    return price, frac


def run_hedge(series: IndexSeries, params: MmmParams, maturity: float) -> HedgeLedger:
    """Daily self-financing hedge against the trendline bond price.

    Rebalances at every observation up to the last one at or before
    maturity; a gap in the dates is spanned by a single rebalance
    interval.  At a grid point equal to maturity the claim is worth
    exactly 1 and nothing remains invested in the index.
    """
    t, s = _hedge_window(series, maturity)
    phi = np.exp(np.asarray(trendline(params, t)))
    dphi = phi * np.expm1(params.a_bar * (maturity - t))
    price, frac = _price_and_fraction(s, dphi, dphi > 0.0)

    value = _portfolio_values(float(price[0]), s, frac)
    return HedgeLedger(
        grid=TimeGrid.from_points(t),
        portfolio_value=value,
        bond_price=price,
        pnl=value - price,
        fraction_gop=frac,
        terminal_value=float(value[-1]),
    )


def run_enhanced_hedge(
    series: IndexSeries, params: MmmParams, maturity: float
) -> HedgeLedger:
    """Hedge against the observed activity time with the stop rule.

    The observed activity time accumulates from the quadratic variation
    of the series with the anchor params.tau0 fixed up front (no
    refitting along the way).  At the first observation where it
    reaches the trendline value at maturity, all wealth moves into the
    savings account and stays there; from then on the claim is carried
    at its payoff value 1 and the terminal value is reported against 1.
    """
    t, s = _hedge_window(series, maturity)
    qv = activity_time.quadratic_variation(series)[: t.size]
    tau_obs = activity_time.observed_activity_time(qv, params.tau0)
    tau_bar_T = float(trendline(params, maturity))

    dphi = np.exp(tau_obs) * np.expm1(tau_bar_T - tau_obs)
    running = dphi > 0.0
    hit = np.flatnonzero(~running)
    stop = int(hit[0]) if hit.size else None
    if stop == 0:
        raise HedgeError(
            "observed activity time already at the maturity trendline value"
        )
    if stop is not None:
        running[stop:] = False

    # if no stop triggers, the hedge simply ends at the last grid point
    # with the formula price (tau_obs stayed below the trendline there)
    price, frac = _price_and_fraction(s, dphi, running)
    value = _portfolio_values(float(price[0]), s, frac)
    return HedgeLedger(
        grid=TimeGrid.from_points(t),
        portfolio_value=value,
        bond_price=price,
        pnl=value - price,
        fraction_gop=frac,
        terminal_value=float(value[-1]),
        stopped_at=float(t[stop]) if stop is not None else None,
    )


def pnl_report(ledger: HedgeLedger) -> dict:
    """Summary of a ledger: extremes, terminal outcome, rebalance count.

    terminal_pnl is quoted against the payoff of one savings unit;
    n_rebalances counts the intervals over which a freshly computed
    fraction was applied (rebalancing stops once wealth is parked).
    """
    n_intervals = len(ledger.grid) - 1
    if ledger.stopped_at is not None:
        n_intervals = min(
            n_intervals, int(np.searchsorted(ledger.grid.points, ledger.stopped_at))
        )
    return {
        "max_abs_pnl": float(np.max(np.abs(ledger.pnl))),
        "terminal_pnl": float(ledger.terminal_value - 1.0),
        "terminal_value": float(ledger.terminal_value),
        "stopped_at": ledger.stopped_at,
        "n_rebalances": int(n_intervals),
    }


def hedge_columns(
    series: IndexSeries,
    params: MmmParams,
    maturity: float,
    variant: pricing.Variant = pricing.Variant.TRENDLINE,
) -> tuple[HedgeLedger, dict]:
    """Ledger plus aligned output columns (dates, s_star, tau, ...)."""
    if variant is pricing.Variant.ENHANCED:
        ledger = run_enhanced_hedge(series, params, maturity)
        qv = activity_time.quadratic_variation(series)[: len(ledger.grid)]
        tau = activity_time.observed_activity_time(qv, params.tau0)
    else:
        ledger = run_hedge(series, params, maturity)
        tau = np.asarray(trendline(params, ledger.grid.points))
    n = len(ledger.grid)
    columns = {
        "date": [d.isoformat() for d in series.dates[:n]],
        "s_star": series.levels[:n],
        "tau": tau,
        "price": ledger.bond_price,
        "portfolio_value": ledger.portfolio_value,
        "pnl": ledger.pnl,
        "fraction_gop": ledger.fraction_gop,
    }
    return ledger, columns
