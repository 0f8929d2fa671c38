"""Shared oracle utilities for the test suite.

These deliberately avoid the closed forms they are used to check:
distribution functions come from dense numerical integration of the
transition density, and reference moments from quadrature.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from bnpricer import besq

KS_ONE_SAMPLE_1PCT = 1.6276  # asymptotic Kolmogorov critical constant at 1%


def density_cdf(tr: besq.BesqTransition, n_grid: int = 40_001):
    """CDF of the transition law by dense trapezoid integration.

    Returns a callable usable with scipy.stats.kstest; accuracy is far
    below the KS resolution at the sample sizes used here.
    """
    grid = np.linspace(0.0, besq.truncation_bound(tr), n_grid)
    pdf = besq.transition_density(tr, grid)
    cdf = cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf /= cdf[-1]

    def evaluate(x):
        return np.interp(x, grid, cdf)

    return evaluate


def mc_mean_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))
