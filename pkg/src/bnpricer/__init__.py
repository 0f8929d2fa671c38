"""Benchmark-neutral pricing and hedging of long-term zero-coupon bonds.

Core package: activity-time estimation from index data, closed-form
bond pricing and hedge ratios, self-financing hedging backtests, exact
simulation of the time-changed squared Bessel index model, and Monte
Carlo measure diagnostics.  A FastAPI service (bnpricer.service) wraps
the package; the CLI (bnpricer.cli) is a thin client of that service.
"""

from .activity_time import ActivityTime, fit_trendline, observed_activity_time, quadratic_variation
from .besq import BesqTransition, inverse_moment, sample_transition, transition_density
from .core_types import IndexSeries, MmmParams, TimeGrid, YearFraction, trendline
from .dataio import SCHEMA_VERSION, load_index_csv, synthetic_index_series
from .hedging import HedgeLedger, pnl_report, run_enhanced_hedge, run_hedge
from .pricing import (
    BondQuote,
    ExhaustKey,
    Variant,
    bn_vs_risk_neutral,
    bond_price,
    enhanced_bond_price,
    enhanced_fraction,
    fraction_in_gop,
    hedge_ratio_savings,
    make_quote,
)
from .simulate import (
    Measure,
    MeasureDiagnostics,
    Scheme,
    SimPath,
    diagnose_measures,
    radon_nikodym_bn,
    simulate_p,
    simulate_p_euler,
    simulate_q,
)

__version__ = "0.1.0"

__all__ = [
    "ActivityTime",
    "BesqTransition",
    "BondQuote",
    "ExhaustKey",
    "HedgeLedger",
    "IndexSeries",
    "Measure",
    "MeasureDiagnostics",
    "MmmParams",
    "SCHEMA_VERSION",
    "Scheme",
    "SimPath",
    "TimeGrid",
    "Variant",
    "YearFraction",
    "bn_vs_risk_neutral",
    "bond_price",
    "diagnose_measures",
    "enhanced_bond_price",
    "enhanced_fraction",
    "fit_trendline",
    "fraction_in_gop",
    "hedge_ratio_savings",
    "inverse_moment",
    "load_index_csv",
    "make_quote",
    "observed_activity_time",
    "pnl_report",
    "quadratic_variation",
    "radon_nikodym_bn",
    "run_enhanced_hedge",
    "run_hedge",
    "sample_transition",
    "simulate_p",
    "simulate_p_euler",
    "simulate_q",
    "synthetic_index_series",
    "transition_density",
    "trendline",
]
