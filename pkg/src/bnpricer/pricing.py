"""Closed-form bond prices, hedge ratios, and invested fractions.

The zero-coupon bond pays one unit of the savings account at maturity.
Everything is driven by a single exponent

    x = s_star / (2 * (phi_T - phi_t)),

where phi = exp(activity time) is the operational clock, evaluated on
the trendline (plain variant) or at the observed activity time
(enhanced variant).  In savings-account units:

    price             P   = 1 - exp(-x)
    hedge ratio       d0  = 1 - exp(-x) * (1 + x)     (savings account leg)
    invested fraction pi  = (1/P - 1) * x = x / (exp(x) - 1)

All prices are computed and stored in savings-account denomination; the
index (GOP) denomination is obtained by dividing by s_star on demand.
The net risk-adjusted return never enters any of these formulas.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core_types import BnpError, MmmParams, trendline

_CONSISTENCY_TOL = 1e-9


class PricingDomainError(BnpError):
    code = "pricing.domain"


class StoppingTimeReached(BnpError):
    """Observed activity time has caught up with the maturity trendline.

    Not a failure: the enhanced hedge switches to the stop rule (all
    wealth into the savings account) at this point.
    """

    code = "pricing.stopping_time"


class Variant(enum.Enum):
    TRENDLINE = "TRENDLINE"
    ENHANCED = "ENHANCED"


@dataclass(frozen=True)
class ExhaustKey:
    """Clock window (phi_t, phi_T) remaining until maturity.

    phi_t is exp(tau) at valuation (trendline or observed), phi_T is
    exp(trendline at maturity).  The window phi_T - phi_t is the still
    unexhausted variance budget of the bond.
    """

    phi_t: float
    phi_T: float

    def __post_init__(self) -> None:
        if not (self.phi_t > 0.0 and np.isfinite(self.phi_t)):
            raise PricingDomainError(f"phi_t must be positive, got {self.phi_t}")
        if not self.phi_T > self.phi_t:
            raise PricingDomainError(
                f"need phi_T > phi_t, got phi_t={self.phi_t}, phi_T={self.phi_T}"
            )

    @property
    def delta_phi(self) -> float:
        return self.phi_T - self.phi_t

    @classmethod
    def from_trendline(cls, params: MmmParams, t: float, maturity: float) -> "ExhaustKey":
        if not maturity > t:
            raise PricingDomainError(f"maturity {maturity} must exceed t {t}")
        return cls._from_tau(float(trendline(params, t)), params.a_bar * (maturity - t))

    @classmethod
    def from_observed(cls, tau_obs: float, tau_bar_T: float) -> "ExhaustKey":
        if tau_obs >= tau_bar_T:
            raise StoppingTimeReached(
                f"observed activity time {tau_obs} has reached the maturity "
                f"trendline value {tau_bar_T}"
            )
        return cls._from_tau(tau_obs, tau_bar_T - tau_obs)

    @classmethod
    def _from_tau(cls, tau_t: float, dtau: float) -> "ExhaustKey":
        # phi_T = phi_t * (1 + expm1(dtau)) avoids the cancellation of
        # exp(tau_T) - exp(tau_t) when the window is small
        phi_t = float(np.exp(tau_t))
        return cls(phi_t=phi_t, phi_T=phi_t + phi_t * float(np.expm1(dtau)))


def exponent(s_star: float, key: ExhaustKey) -> float:
    """The single exponent x = s_star / (2 (phi_T - phi_t)), x > 0."""
    if not (s_star > 0.0 and np.isfinite(s_star)):
        raise PricingDomainError(f"s_star must be positive, got {s_star}")
    return s_star / (2.0 * key.delta_phi)


def price_from_exponent(x):
    """P = 1 - exp(-x), vectorized."""
    return -np.expm1(-np.asarray(x, dtype=float))[()]


def hedge_ratio_from_exponent(x):
    """d0 = 1 - exp(-x)(1 + x) = P - x exp(-x), vectorized."""
    x = np.asarray(x, dtype=float)
    return (-np.expm1(-x) - x * np.exp(-x))[()]


def fraction_from_exponent(x):
    """pi = x / (exp(x) - 1), evaluated as x exp(-x) / (1 - exp(-x)).

    The expm1-based form is exact for small x (pi -> 1) and free of
    overflow for large x (pi -> 0).
    """
    x = np.asarray(x, dtype=float)
    return (x * np.exp(-x) / (-np.expm1(-x)))[()]


def bond_price(s_star: float, key: ExhaustKey) -> float:
    """Bond price in savings-account units, strictly inside (0, 1)."""
    return float(price_from_exponent(exponent(s_star, key)))


def hedge_ratio_savings(s_star: float, key: ExhaustKey) -> float:
    """Units of the savings account held per bond, in GOP denomination."""
    return float(hedge_ratio_from_exponent(exponent(s_star, key)))


def fraction_in_gop(s_star: float, key: ExhaustKey) -> float:
    """Fraction of the hedge portfolio value invested in the index."""
    return float(fraction_from_exponent(exponent(s_star, key)))


def enhanced_bond_price(s_star: float, tau_obs: float, tau_bar_T: float) -> float:
    """Bond price with the observed activity time in place of the trendline.

    Raises StoppingTimeReached once tau_obs >= tau_bar_T.
    """
    return bond_price(s_star, ExhaustKey.from_observed(tau_obs, tau_bar_T))


def enhanced_fraction(s_star: float, tau_obs: float, tau_bar_T: float) -> float:
    """Invested fraction with the observed activity time."""
    return fraction_in_gop(s_star, ExhaustKey.from_observed(tau_obs, tau_bar_T))


@dataclass(frozen=True)
class BondQuote:
    """Bond price with its hedge quantities at one valuation time.

    The risk-neutral price of the claim is identically one unit of the
    savings account; the quoted price is always strictly below it.
    """

    t: float
    maturity: float
    s_star: float
    price: float
    hedge_ratio_savings: float
    fraction_in_gop: float
    variant: Variant
    risk_neutral_price: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.price < 1.0):
            raise PricingDomainError(f"price {self.price} outside (0, 1)")
        if not (0.0 < self.hedge_ratio_savings < 1.0):
            raise PricingDomainError(
                f"hedge ratio {self.hedge_ratio_savings} outside (0, 1)"
            )
        if not (0.0 < self.fraction_in_gop < 1.0):
            raise PricingDomainError(
                f"fraction {self.fraction_in_gop} outside (0, 1)"
            )
        if self.risk_neutral_price != 1.0:
            raise PricingDomainError("risk-neutral price of the claim is 1")
        # the three quantities come from one exponent: d0 + pi * P = P
        gap = self.hedge_ratio_savings + self.fraction_in_gop * self.price - self.price
        if abs(gap) > _CONSISTENCY_TOL:
            raise PricingDomainError(f"inconsistent quote, identity gap {gap:.2e}")


def make_quote(
    params: MmmParams,
    t: float,
    maturity: float,
    s_star: float,
    variant: Variant = Variant.TRENDLINE,
    tau_obs: float | None = None,
) -> BondQuote:
    """Assemble a full quote from the trendline or an observed activity time."""
    if variant is Variant.ENHANCED:
        if tau_obs is None:
            raise PricingDomainError("enhanced variant requires tau_obs")
        key = ExhaustKey.from_observed(tau_obs, float(trendline(params, maturity)))
    else:
        key = ExhaustKey.from_trendline(params, t, maturity)
    x = exponent(s_star, key)
    return BondQuote(
        t=t,
        maturity=maturity,
        s_star=s_star,
        price=float(price_from_exponent(x)),
        hedge_ratio_savings=float(hedge_ratio_from_exponent(x)),
        fraction_in_gop=float(fraction_from_exponent(x)),
        variant=variant,
    )


def bn_vs_risk_neutral(quote: BondQuote) -> float:
    """Quoted price as a fraction of the risk-neutral price (always < 1)."""
    return quote.price / quote.risk_neutral_price
