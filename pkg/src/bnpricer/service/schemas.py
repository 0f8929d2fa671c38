"""Pydantic request/response models for the pricing service."""

from __future__ import annotations

import datetime as dt
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core_types import IndexSeries, MmmParams, YearFraction
from ..dataio import DEFAULT_SYNTHETIC_START, SCHEMA_VERSION


class MmmParamsModel(BaseModel):
    tau0: float = 2.15
    a_bar: float = Field(default=0.053, gt=0)
    s_star_0: float = Field(default=100.0, gt=0)
    lambda_bar: float = Field(default=0.0, ge=0)

    def to_domain(self) -> MmmParams:
        return MmmParams(
            tau0=self.tau0,
            a_bar=self.a_bar,
            s_star_0=self.s_star_0,
            lambda_bar=self.lambda_bar,
        )

    @classmethod
    def from_domain(cls, params: MmmParams) -> "MmmParamsModel":
        return cls(
            tau0=params.tau0,
            a_bar=params.a_bar,
            s_star_0=params.s_star_0,
            lambda_bar=params.lambda_bar,
        )


class SeriesPayload(BaseModel):
    dates: list[dt.date]
    levels: list[float]
    convention: Literal["ACT365", "ACT252"] = "ACT365"

    def to_domain(self) -> IndexSeries:
        return IndexSeries(
            dates=tuple(self.dates),
            levels=np.asarray(self.levels, dtype=float),
            convention=YearFraction(self.convention),
        )


class SyntheticSpec(BaseModel):
    """On-model series generated server-side from a seed."""

    params: MmmParamsModel = MmmParamsModel()
    years: float = Field(default=30.0, gt=0)
    seed: int = 0
    start_date: dt.date = DEFAULT_SYNTHETIC_START
    steps_per_year: int = Field(default=252, ge=1)


class EstimateRequest(BaseModel):
    series: SeriesPayload


class ActivityCurve(BaseModel):
    dates: list[str]
    qv: list[float]
    tau: list[float]
    trendline: list[float]


class EstimateResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    tau0_est: float
    a_bar_est: float
    r_squared: float
    n_obs: int
    epoch_date: str
    params: MmmParamsModel
    curve: ActivityCurve


class PriceRequest(BaseModel):
    s_star: float = Field(gt=0)
    tau0: float
    a_bar: float = Field(gt=0)
    t: float = 0.0
    maturity: float
    variant: Literal["trendline", "enhanced"] = "trendline"
    tau_obs: Optional[float] = None

    @model_validator(mode="after")
    def _enhanced_needs_tau_obs(self) -> "PriceRequest":
        if self.variant == "enhanced" and self.tau_obs is None:
            raise ValueError("enhanced variant requires tau_obs")
        return self


class PriceResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    t: float
    maturity: float
    s_star: float
    price: float
    hedge_ratio_savings: float
    fraction_in_gop: float
    risk_neutral_price: float
    price_over_risk_neutral: float
    variant: Literal["trendline", "enhanced"]


class HedgeRequest(BaseModel):
    series: Optional[SeriesPayload] = None
    synthetic: Optional[SyntheticSpec] = None
    params: Optional[MmmParamsModel] = None
    maturity: Optional[float] = None
    variant: Literal["plain", "enhanced"] = "plain"

    @model_validator(mode="after")
    def _one_source(self) -> "HedgeRequest":
        if (self.series is None) == (self.synthetic is None):
            raise ValueError("provide exactly one of series or synthetic")
        return self


class PnlSummary(BaseModel):
    max_abs_pnl: float
    terminal_pnl: float
    terminal_value: float
    stopped_at: Optional[float]
    n_rebalances: int


class LedgerColumns(BaseModel):
    dates: list[str]
    s_star: list[float]
    tau: list[float]
    price: list[float]
    portfolio_value: list[float]
    pnl: list[float]
    fraction_gop: list[float]


class HedgeResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    variant: Literal["plain", "enhanced"]
    maturity: float
    params: MmmParamsModel
    summary: PnlSummary
    ledger: LedgerColumns


class SimulateRequest(BaseModel):
    params: MmmParamsModel = MmmParamsModel()
    measure: Literal["Q_BN", "P_REAL"] = "Q_BN"
    horizon: float = Field(default=30.0, gt=0)
    steps_per_year: int = Field(default=252, ge=1)
    n_paths: int = Field(default=100, ge=1)
    seed: int = 0
    max_paths_dump: int = Field(default=20, ge=0)


class SimulateResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    measure: Literal["Q_BN", "P_REAL"]
    n_paths: int
    horizon: float
    terminal_mean: float
    terminal_stderr: float
    terminal_mean_expected: float
    terminal_inverse_mean: float
    grid: list[float]
    paths: list[list[float]]
    paths_dumped: int


class DiagnoseRequest(BaseModel):
    # default level is scaled so the ten-year supermartingale gap is
    # resolvable above Monte Carlo noise at the default path counts;
    # the tail-sensitive inverse-moment leg gets ten times the paths
    params: MmmParamsModel = MmmParamsModel(s_star_0=25.0, lambda_bar=0.5)
    horizon: float = Field(default=10.0, gt=0)
    n_paths: int = Field(default=100_000, ge=1)
    n_paths_inverse: int = Field(default=1_000_000, ge=1)
    steps_per_year: int = Field(default=252, ge=1)
    seed: int = 0


class DiagnoseResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    horizon: float
    n_paths: int
    mean_lambda_bn: float
    mean_lambda_bn_stderr: float
    mean_inv_sstar_q: float
    mean_inv_sstar_q_stderr: float
    closed_form_inv: float
    supermartingale_gap: float
    closed_form_gap: float


class HealthResponse(BaseModel):
    status: str
    version: str
    schema_version: str = SCHEMA_VERSION


class ErrorBody(BaseModel):
    code: str
    message: str
