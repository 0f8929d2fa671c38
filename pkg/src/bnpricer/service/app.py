"""FastAPI service wrapping the pricing package."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, activity_time, besq, dataio, hedging, pricing, simulate
from ..core_types import BnpError, MmmParams, TimeGrid, trendline
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="bnpricer",
        description="Benchmark-neutral pricing and hedging of long-term "
        "zero-coupon bonds",
        version=__version__,
    )

    @app.exception_handler(BnpError)
    async def _domain_error(request: Request, exc: BnpError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/estimate", response_model=schemas.EstimateResponse)
    def estimate(req: schemas.EstimateRequest) -> schemas.EstimateResponse:
        series = req.series.to_domain()
        fit = activity_time.fit_trendline(series)
        params = fit.to_params(float(series.levels[0]))
        return schemas.EstimateResponse(
            tau0_est=fit.tau0_est,
            a_bar_est=fit.a_bar_est,
            r_squared=fit.r_squared,
            n_obs=len(series),
            epoch_date=series.epoch.isoformat(),
            params=schemas.MmmParamsModel.from_domain(params),
            curve=schemas.ActivityCurve(
                dates=[d.isoformat() for d in series.dates],
                qv=fit.qv.tolist(),
                tau=fit.tau.tolist(),
                trendline=fit.trend_values().tolist(),
            ),
        )

    @app.post("/price", response_model=schemas.PriceResponse)
    def price(req: schemas.PriceRequest) -> schemas.PriceResponse:
        params = MmmParams(tau0=req.tau0, a_bar=req.a_bar, s_star_0=req.s_star)
        variant = (
            pricing.Variant.ENHANCED
            if req.variant == "enhanced"
            else pricing.Variant.TRENDLINE
        )
        quote = pricing.make_quote(
            params, req.t, req.maturity, req.s_star, variant, req.tau_obs
        )
        return schemas.PriceResponse(
            t=quote.t,
            maturity=quote.maturity,
            s_star=quote.s_star,
            price=quote.price,
            hedge_ratio_savings=quote.hedge_ratio_savings,
            fraction_in_gop=quote.fraction_in_gop,
            risk_neutral_price=quote.risk_neutral_price,
            price_over_risk_neutral=pricing.bn_vs_risk_neutral(quote),
            variant=req.variant,
        )

    @app.post("/hedge", response_model=schemas.HedgeResponse)
    def hedge(req: schemas.HedgeRequest) -> schemas.HedgeResponse:
        if req.synthetic is not None:
            spec = req.synthetic
            series = dataio.synthetic_index_series(
                spec.params.to_domain(),
                years=spec.years,
                seed=spec.seed,
                start=spec.start_date,
                steps_per_year=spec.steps_per_year,
            )
            params = (req.params or spec.params).to_domain()
        else:
            series = req.series.to_domain()
            if req.params is not None:
                params = req.params.to_domain()
            else:
                fit = activity_time.fit_trendline(series)
                params = fit.to_params(float(series.levels[0]))
        maturity = req.maturity if req.maturity is not None else float(series.times()[-1])
        variant = (
            pricing.Variant.ENHANCED
            if req.variant == "enhanced"
            else pricing.Variant.TRENDLINE
        )
        ledger, columns = hedging.hedge_columns(series, params, maturity, variant)
        summary = hedging.pnl_report(ledger)
        return schemas.HedgeResponse(
            variant=req.variant,
            maturity=maturity,
            params=schemas.MmmParamsModel.from_domain(params),
            summary=schemas.PnlSummary(**summary),
            ledger=schemas.LedgerColumns(
                dates=columns["date"],
                s_star=np.asarray(columns["s_star"]).tolist(),
                tau=np.asarray(columns["tau"]).tolist(),
                price=np.asarray(columns["price"]).tolist(),
                portfolio_value=np.asarray(columns["portfolio_value"]).tolist(),
                pnl=np.asarray(columns["pnl"]).tolist(),
                fraction_gop=np.asarray(columns["fraction_gop"]).tolist(),
            ),
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate_paths(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        params = req.params.to_domain()
        n_steps = max(1, round(req.horizon * req.steps_per_year))
        grid = TimeGrid.regular(0.0, req.horizon, n_steps)
        if req.measure == "Q_BN":
            paths = simulate.simulate_q_paths(params, grid, req.n_paths, req.seed)
            u0 = float(np.exp(trendline(params, 0.0)))
            u_T = float(np.exp(trendline(params, req.horizon)))
            expected = params.s_star_0 + besq.DIMENSION * (u_T - u0)
        else:
            paths = simulate.simulate_p_paths(params, grid, req.n_paths, req.seed)
            clock = simulate.p_time_change(params, grid)
            expected = float(
                np.exp(params.lambda_bar * params.a_bar * req.horizon)
                * (params.s_star_0 + besq.DIMENSION * (clock[-1] - clock[0]))
            )
        terminal = paths[:, -1]
        dumped = paths[: req.max_paths_dump]
        return schemas.SimulateResponse(
            measure=req.measure,
            n_paths=req.n_paths,
            horizon=req.horizon,
            terminal_mean=float(terminal.mean()),
            terminal_stderr=float(terminal.std(ddof=1) / np.sqrt(terminal.size))
            if terminal.size > 1
            else 0.0,
            terminal_mean_expected=expected,
            terminal_inverse_mean=float((1.0 / terminal).mean()),
            grid=grid.points.tolist(),
            paths=dumped.tolist(),
            paths_dumped=int(dumped.shape[0]),
        )

    @app.post("/diagnose", response_model=schemas.DiagnoseResponse)
    def diagnose(req: schemas.DiagnoseRequest) -> schemas.DiagnoseResponse:
        params = req.params.to_domain()
        result = simulate.diagnose_measures(
            params,
            horizon=req.horizon,
            n_paths=req.n_paths,
            rng=req.seed,
            n_paths_inverse=req.n_paths_inverse,
            steps_per_year=req.steps_per_year,
        )
        return schemas.DiagnoseResponse(
            horizon=result.horizon,
            n_paths=result.n_paths,
            mean_lambda_bn=result.mean_lambda_bn,
            mean_lambda_bn_stderr=result.mean_lambda_bn_stderr,
            mean_inv_sstar_q=result.mean_inv_sstar_q,
            mean_inv_sstar_q_stderr=result.mean_inv_sstar_q_stderr,
            closed_form_inv=result.closed_form_inv,
            supermartingale_gap=result.supermartingale_gap,
            closed_form_gap=1.0 / params.s_star_0 - result.closed_form_inv,
        )

    return app


app = create_app()
