"""Squared Bessel process of dimension four under a deterministic time change.

The index level, observed in its operational clock u = exp(activity time),
is a squared Bessel process of dimension four:

    dX_u = 4 du + 2 sqrt(X_u) dW_u,   X_u > 0 for all u.

Conditionally on X_u = x, the value at a later clock time u + D is
distributed as D times a noncentral chi-squared variate with 4 degrees of
freedom and noncentrality x / D.  That representation gives an exact
sampler and the closed-form transition density

    p(x -> y; D) = (1 / 2D) * sqrt(y / x)
                   * exp(-(x + y) / 2D) * I1(sqrt(x y) / D),

with I1 the modified Bessel function of the first kind of order one.
All evaluations here are done in log space with the exponentially scaled
Bessel function, so large arguments (small D, large x) cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ive
from scipy.stats import ncx2

from .core_types import BnpError

DIMENSION = 4

# Truncation for oracle quadrature: mean + 40 standard deviations of the
# transition law.  The neglected tail mass must pass `_check_tail`.
_TAIL_SIGMAS = 40.0
_TAIL_TOL = 1e-12


class DomainError(BnpError):
    code = "besq.domain"


@dataclass(frozen=True)
class BesqTransition:
    """One conditional step of the time-changed process.

    x_from is the current level, u_from / u_to the operational clock at
    the start and end of the step (u = exp(activity time)).
    """

    x_from: float
    u_from: float
    u_to: float

    def __post_init__(self) -> None:
        if not (self.x_from > 0.0 and np.isfinite(self.x_from)):
            raise DomainError(f"x_from must be positive, got {self.x_from}")
        if not (self.u_to > self.u_from):
            raise DomainError(
                f"time change must advance: u_from={self.u_from}, u_to={self.u_to}"
            )
        if not np.isfinite(self.u_to - self.u_from):
            raise DomainError("non-finite clock increment")

    @property
    def delta(self) -> float:
        """Clock increment u_to - u_from."""
        return self.u_to - self.u_from

    @property
    def mean(self) -> float:
        """E[X_to | X_from] = x_from + 4 * delta."""
        return self.x_from + DIMENSION * self.delta

    @property
    def std(self) -> float:
        return float(np.sqrt(2.0 * self.delta * (2.0 * self.x_from + 4.0 * self.delta)))


def log_transition_density(tr: BesqTransition, x_to) -> np.ndarray:
    """Log transition density, finite for every x_to > 0.

    Uses exp(-(sqrt(x) - sqrt(y))^2 / 2D) * ive(1, sqrt(xy)/D), i.e. the
    Bessel factor is exponentially scaled and its scale folded into the
    exponent, which keeps each factor bounded.
    """
    x_to = np.asarray(x_to, dtype=float)
    if np.any(x_to < 0.0):
        raise DomainError("x_to must be nonnegative")
    d = tr.delta
    z = np.sqrt(tr.x_from * x_to) / d
    with np.errstate(divide="ignore"):
        return (
            -np.log(2.0 * d)
            + 0.5 * (np.log(x_to) - np.log(tr.x_from))
            - (np.sqrt(tr.x_from) - np.sqrt(x_to)) ** 2 / (2.0 * d)
            + np.log(ive(1, z))
        )


def transition_density(tr: BesqTransition, x_to) -> np.ndarray | float:
    """Transition density p(x_from -> x_to) over the clock increment.

    Vectorized in ``x_to``; returns 0.0 at x_to = 0 (the boundary is
    unattainable in dimension four).
    """
    x_to = np.asarray(x_to, dtype=float)
    if np.any(x_to < 0.0):
        raise DomainError("x_to must be nonnegative")
    out = np.zeros_like(x_to, dtype=float)
    pos = x_to > 0.0
    if np.any(pos):
        out[pos] = np.exp(log_transition_density(tr, x_to[pos]))
    return out[()]


def sample_transition(tr: BesqTransition, rng: np.random.Generator, size=None):
    """Exact draw(s) from the transition law.

    X_to = delta * ncx2(df=4, nonc=x_from / delta); strictly positive
    almost surely.  ``size=None`` returns a scalar.
    """
    draws = tr.delta * rng.noncentral_chisquare(
        DIMENSION, tr.x_from / tr.delta, size=size
    )
    return float(draws) if size is None else draws


def inverse_moment(tr: BesqTransition) -> float:
    """E[1 / X_to | X_from = x_from] = (1 - exp(-x_from / 2 delta)) / x_from.

    Strictly below 1 / x_from for every positive clock increment; the gap
    is what makes the inverse process a strict supermartingale.
    """
    return float(-np.expm1(-tr.x_from / (2.0 * tr.delta)) / tr.x_from)


def truncation_bound(tr: BesqTransition) -> float:
    """Upper integration limit for oracle quadrature (mean + 40 sd)."""
    return tr.mean + _TAIL_SIGMAS * tr.std


def _check_tail(tr: BesqTransition, upper: float) -> None:
    # Independent tail estimate via scipy's noncentral chi-squared.
    tail = float(ncx2.sf(upper / tr.delta, DIMENSION, tr.x_from / tr.delta))
    if not tail < _TAIL_TOL:
        raise DomainError(
            f"truncated tail mass {tail:.3e} exceeds {_TAIL_TOL:.1e}"
        )


def integrate_density(tr: BesqTransition, power: float = 0.0) -> float:
    """Adaptive quadrature of x^power * p(x) over (0, truncation_bound).

    This is the reference oracle for the closed-form moments and for
    normalization checks; it shares no algebra with `inverse_moment` or
    the pricing formulas.
    """
    upper = truncation_bound(tr)
    _check_tail(tr, upper)

    def integrand(x: float) -> float:
        if x <= 0.0:
            return 0.0
        return float(x**power * np.exp(log_transition_density(tr, x)))

    value, _ = integrate.quad(
        integrand,
        0.0,
        upper,
        points=[tr.x_from, tr.mean],
        limit=400,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    return value
