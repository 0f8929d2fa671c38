"""Command-line interface: a thin client of the pricing service.

Each subcommand builds a RunConfig, sends requests to the service
(in-process by default, remote via --server), and writes the received
artifacts to the output directory.  Identical config and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import datetime as dt
import enum
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import pydantic

from . import __version__
from .client import PricerClient
from .core_types import BnpError
from .dataio import SCHEMA_VERSION, load_index_csv, series_report, write_csv, write_json
from .service import schemas

DEFAULT_OUTPUT_DIR = "bnpricer_out"


class Command(enum.Enum):
    ESTIMATE = "estimate"
    PRICE = "price"
    HEDGE = "hedge"
    SIMULATE = "simulate"
    DIAGNOSE = "diagnose"
    REPORT = "report"


@dataclass
class RunConfig:
    command: Command
    output_dir: Path
    seed: int = 0
    input_path: Path | None = None
    server: str | None = None
    params: schemas.MmmParamsModel | None = None
    params_source: str = "defaults"
    flags: dict = field(default_factory=dict)

    def record(self) -> dict:
        """Full provenance block embedded in every JSON artifact."""
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "command": self.command.value,
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "input_path": str(self.input_path) if self.input_path else None,
            "server": self.server,
            "params": self.params.model_dump() if self.params else None,
            "params_source": self.params_source,
            "flags": self.flags,
        }


def resolve_params(
    params_file: Path | None, overrides: dict, fallback: dict | None = None
) -> tuple[schemas.MmmParamsModel | None, str]:
    """Merge params-file values with CLI flag overrides (flags win).

    ``fallback`` entries fill fields set by neither source; they do not
    turn an otherwise empty resolution into explicit parameters.
    """
    merged: dict = {}
    source = "defaults"
    if params_file is not None:
        merged.update(json.loads(Path(params_file).read_text(encoding="utf-8")))
        source = f"params-file:{params_file}"
    explicit = {k: v for k, v in overrides.items() if v is not None}
    if explicit:
        merged.update(explicit)
        source = f"{source}+flags" if source != "defaults" else "flags"
    if not merged:
        return None, source
    for key, value in (fallback or {}).items():
        merged.setdefault(key, value)
    return schemas.MmmParamsModel(**merged), source


def _load_series(path: Path, convention: str):
    series = load_index_csv(path)
    payload = schemas.SeriesPayload(
        dates=list(series.dates),
        levels=series.levels.tolist(),
        convention=convention,
    )
    return series, payload


def _series_payload(path: Path, convention: str) -> schemas.SeriesPayload:
    return _load_series(path, convention)[1]


def _ledger_csv(path: Path, ledger: schemas.LedgerColumns) -> Path:
    return write_csv(
        path,
        ["date", "s_star", "tau", "price", "portfolio_value", "pnl", "fraction_gop"],
        [
            ledger.dates,
            ledger.s_star,
            ledger.tau,
            ledger.price,
            ledger.portfolio_value,
            ledger.pnl,
            ledger.fraction_gop,
        ],
    )


def _hedge_request(config: RunConfig) -> schemas.HedgeRequest:
    flags = config.flags
    if config.input_path is not None:
        source = {"series": _series_payload(config.input_path, flags["convention"])}
    else:
        source = {
            "synthetic": schemas.SyntheticSpec(
                params=config.params or schemas.MmmParamsModel(),
                years=flags["years"],
                seed=config.seed,
                start_date=dt.date.fromisoformat(flags["start_date"]),
            )
        }
    return schemas.HedgeRequest(
        params=config.params,
        maturity=flags.get("maturity"),
        variant=flags.get("variant", "plain"),
        **source,
    )


def run(config: RunConfig) -> int:
    """Dispatch one configured command; returns the process exit status."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with PricerClient(base_url=config.server) as client:
        handler = _HANDLERS[config.command]
        written = handler(config, client, out)
    for path in written:
        click.echo(f"wrote {path}")
    return 0


def _run_estimate(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    series, payload = _load_series(config.input_path, config.flags["convention"])
    resp = client.estimate(schemas.EstimateRequest(series=payload))
    report = {
        "config": config.record(),
        "schema_version": SCHEMA_VERSION,
        "tau0_est": resp.tau0_est,
        "a_bar_est": resp.a_bar_est,
        "r_squared": resp.r_squared,
        "n_obs": resp.n_obs,
        "epoch_date": resp.epoch_date,
        "params": resp.params.model_dump(),
        "series": series_report(series),
    }
    return [
        write_json(out / "estimate.json", report),
        write_csv(
            out / "activity.csv",
            ["date", "qv", "tau", "trendline"],
            [resp.curve.dates, resp.curve.qv, resp.curve.tau, resp.curve.trendline],
        ),
    ]


def _run_price(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    resp = client.price(schemas.PriceRequest(**config.flags))
    quote = resp.model_dump()
    quote["config"] = config.record()
    return [write_json(out / "quote.json", quote)]


def _run_hedge(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    resp = client.hedge(_hedge_request(config))
    summary = {
        "config": config.record(),
        "schema_version": SCHEMA_VERSION,
        "variant": resp.variant,
        "maturity": resp.maturity,
        "params": resp.params.model_dump(),
        "summary": resp.summary.model_dump(),
    }
    return [
        write_json(out / "hedge_summary.json", summary),
        _ledger_csv(out / "ledger.csv", resp.ledger),
    ]


def _run_simulate(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    flags = config.flags
    resp = client.simulate(
        schemas.SimulateRequest(
            params=config.params or schemas.MmmParamsModel(),
            measure=flags["measure"],
            horizon=flags["horizon"],
            steps_per_year=flags["steps_per_year"],
            n_paths=flags["n_paths"],
            seed=config.seed,
            max_paths_dump=flags["max_paths_dump"],
        )
    )
    body = resp.model_dump(exclude={"grid", "paths"})
    body["config"] = config.record()
    written = [write_json(out / "simulate.json", body)]
    if resp.paths_dumped:
        ids, times, values = [], [], []
        for i, path in enumerate(resp.paths):
            ids.extend([i] * len(resp.grid))
            times.extend(resp.grid)
            values.extend(path)
        written.append(
            write_csv(out / "paths.csv", ["path", "t", "s_star"], [ids, times, values])
        )
    return written


def _run_diagnose(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    flags = config.flags
    request = {
        "horizon": flags["horizon"],
        "n_paths": flags["n_paths"],
        "n_paths_inverse": flags.get("n_paths_inverse"),
        "seed": config.seed,
    }
    if config.params is not None:
        request["params"] = config.params
    resp = client.diagnose(
        schemas.DiagnoseRequest(**{k: v for k, v in request.items() if v is not None})
    )
    body = resp.model_dump()
    body["config"] = config.record()
    return [write_json(out / "diagnostics.json", body)]


def _run_report(config: RunConfig, client: PricerClient, out: Path) -> list[Path]:
    """Full pipeline: estimate, both hedges, and the six figure CSVs."""
    written: list[Path] = []

    plain = client.hedge(_hedge_request(_with_flags(config, variant="plain")))
    enhanced = client.hedge(_hedge_request(_with_flags(config, variant="enhanced")))

    if config.input_path is not None:
        series = _series_payload(config.input_path, config.flags["convention"])
    else:
        # synthetic runs estimate over the hedge window (the full series
        # when no maturity was given)
        series = schemas.SeriesPayload(
            dates=[dt.date.fromisoformat(d) for d in plain.ledger.dates],
            levels=plain.ledger.s_star,
            convention="ACT252",
        )
    estimate = client.estimate(schemas.EstimateRequest(series=series))

    written.append(
        write_json(
            out / "report.json",
            {
                "config": config.record(),
                "schema_version": SCHEMA_VERSION,
                "estimate": estimate.model_dump(exclude={"curve"}),
                "hedge_plain": {
                    "params": plain.params.model_dump(),
                    "summary": plain.summary.model_dump(),
                },
                "hedge_enhanced": {
                    "params": enhanced.params.model_dump(),
                    "summary": enhanced.summary.model_dump(),
                },
            },
        )
    )
    written.append(
        write_csv(
            out / "activity.csv",
            ["date", "qv", "tau", "trendline"],
            [estimate.curve.dates, estimate.curve.qv, estimate.curve.tau,
             estimate.curve.trendline],
        )
    )
    written.append(_ledger_csv(out / "ledger_plain.csv", plain.ledger))
    written.append(_ledger_csv(out / "ledger_enhanced.csv", enhanced.ledger))

    led = plain.ledger
    figures = {
        "fig1": (["date", "level"], [led.dates, led.s_star]),
        "fig2": (
            ["date", "tau", "trendline"],
            [estimate.curve.dates, estimate.curve.tau, estimate.curve.trendline],
        ),
        "fig3": (["date", "price"], [led.dates, led.price]),
        "fig4": (["date", "fraction"], [led.dates, led.fraction_gop]),
        "fig5": (["date", "pnl"], [led.dates, led.pnl]),
        "fig6": (
            ["date", "pnl_enhanced"],
            [enhanced.ledger.dates, enhanced.ledger.pnl],
        ),
    }
    for name, (header, cols) in figures.items():
        written.append(write_csv(out / f"{name}.csv", header, cols))
    return written


def _with_flags(config: RunConfig, **updates) -> RunConfig:
    merged = dict(config.flags)
    merged.update(updates)
    return RunConfig(
        command=config.command,
        output_dir=config.output_dir,
        seed=config.seed,
        input_path=config.input_path,
        server=config.server,
        params=config.params,
        params_source=config.params_source,
        flags=merged,
    )


_HANDLERS = {
    Command.ESTIMATE: _run_estimate,
    Command.PRICE: _run_price,
    Command.HEDGE: _run_hedge,
    Command.SIMULATE: _run_simulate,
    Command.DIAGNOSE: _run_diagnose,
    Command.REPORT: _run_report,
}


# ---------------------------------------------------------------------------
# click wiring

def _fail(code: str, message: str) -> int:
    click.echo(json.dumps({"error": {"code": code, "message": message}}), err=True)
    return 2


def _dispatch(config: RunConfig) -> None:
    try:
        status = run(config)
    except BnpError as exc:
        status = _fail(exc.code, str(exc))
    except pydantic.ValidationError as exc:
        status = _fail("io_cli.invalid_config", str(exc))
    if status:
        sys.exit(status)


@click.group()
@click.version_option(version=__version__)
@click.option("--output-dir", default=DEFAULT_OUTPUT_DIR, show_default=True,
              type=click.Path(path_type=Path), help="Directory for artifacts.")
@click.option("--seed", default=0, show_default=True, help="Deterministic seed.")
@click.option("--server", default=None,
              help="Base URL of a running service; in-process when omitted.")
@click.pass_context
def main(ctx: click.Context, output_dir: Path, seed: int, server: str | None) -> None:
    """Benchmark-neutral bond pricing, hedging, and diagnostics."""
    ctx.obj = {"output_dir": output_dir, "seed": seed, "server": server}


def _config(ctx: click.Context, command: Command, **kwargs) -> RunConfig:
    return RunConfig(
        command=command,
        output_dir=ctx.obj["output_dir"],
        seed=ctx.obj["seed"],
        server=ctx.obj["server"],
        **kwargs,
    )


_convention = click.option(
    "--convention", type=click.Choice(["ACT365", "ACT252"]), default="ACT365",
    show_default=True, help="Year-fraction convention for input data.")
_params_file = click.option(
    "--params-file", type=click.Path(exists=True, path_type=Path), default=None,
    help="JSON file with tau0/a_bar/s_star_0/lambda_bar.")


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, path_type=Path), help="Index CSV.")
@_convention
@click.pass_context
def estimate(ctx: click.Context, input_path: Path, convention: str) -> None:
    """Fit the activity-time trendline from an index CSV."""
    _dispatch(_config(ctx, Command.ESTIMATE, input_path=input_path,
                      flags={"convention": convention}))


@main.command()
@click.option("--s-star", required=True, type=float, help="Current index level.")
@click.option("--tau0", default=2.15, show_default=True, type=float)
@click.option("--a-bar", default=0.053, show_default=True, type=float)
@click.option("--t", default=0.0, show_default=True, type=float,
              help="Valuation time (years since epoch).")
@click.option("--maturity", required=True, type=float, help="Maturity (years).")
@click.option("--variant", type=click.Choice(["trendline", "enhanced"]),
              default="trendline", show_default=True)
@click.option("--tau-obs", default=None, type=float,
              help="Observed activity time (enhanced variant).")
@click.pass_context
def price(ctx, s_star, tau0, a_bar, t, maturity, variant, tau_obs) -> None:
    """Quote the bond price, hedge ratio, and invested fraction."""
    _dispatch(_config(ctx, Command.PRICE, flags={
        "s_star": s_star, "tau0": tau0, "a_bar": a_bar, "t": t,
        "maturity": maturity, "variant": variant, "tau_obs": tau_obs,
    }))


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Index CSV (omit with --simulate).")
@click.option("--simulate", "simulate_", is_flag=True,
              help="Hedge a synthetic on-model series instead of a file.")
@click.option("--maturity", default=None, type=float,
              help="Maturity in years since epoch [default: series end].")
@click.option("--variant", type=click.Choice(["plain", "enhanced"]),
              default="plain", show_default=True)
@click.option("--years", default=30.0, show_default=True, type=float,
              help="Length of the synthetic series.")
@click.option("--start-date", default="2000-01-03", show_default=True,
              help="First date of the synthetic series.")
@_params_file
@click.option("--tau0", default=None, type=float)
@click.option("--a-bar", default=None, type=float)
@click.option("--s-star-0", default=None, type=float)
@_convention
@click.pass_context
def hedge(ctx, input_path, simulate_, maturity, variant, years, start_date,
          params_file, tau0, a_bar, s_star_0, convention) -> None:
    """Run a self-financing hedging backtest and emit its ledger."""
    if (input_path is None) == (not simulate_):
        raise click.UsageError("provide exactly one of --input or --simulate")
    params, source = resolve_params(
        params_file, {"tau0": tau0, "a_bar": a_bar, "s_star_0": s_star_0})
    _dispatch(_config(ctx, Command.HEDGE, input_path=input_path, params=params,
                      params_source=source, flags={
                          "maturity": maturity, "variant": variant,
                          "years": years, "start_date": start_date,
                          "convention": convention,
                      }))


@main.command()
@click.option("--measure", type=click.Choice(["Q_BN", "P_REAL"]), default="Q_BN",
              show_default=True)
@click.option("--horizon", default=30.0, show_default=True, type=float)
@click.option("--n-paths", default=100, show_default=True, type=int)
@click.option("--steps-per-year", default=252, show_default=True, type=int)
@click.option("--max-paths-dump", default=20, show_default=True, type=int,
              help="Cap on per-path CSV output.")
@_params_file
@click.option("--tau0", default=None, type=float)
@click.option("--a-bar", default=None, type=float)
@click.option("--s-star-0", default=None, type=float)
@click.option("--lambda-bar", default=None, type=float)
@click.pass_context
def simulate(ctx, measure, horizon, n_paths, steps_per_year, max_paths_dump,
             params_file, tau0, a_bar, s_star_0, lambda_bar) -> None:
    """Generate exact index paths and summarize the terminal law."""
    params, source = resolve_params(params_file, {
        "tau0": tau0, "a_bar": a_bar, "s_star_0": s_star_0,
        "lambda_bar": lambda_bar})
    _dispatch(_config(ctx, Command.SIMULATE, params=params, params_source=source,
                      flags={
                          "measure": measure, "horizon": horizon,
                          "n_paths": n_paths, "steps_per_year": steps_per_year,
                          "max_paths_dump": max_paths_dump,
                      }))


@main.command()
@click.option("--horizon", default=10.0, show_default=True, type=float)
@click.option("--n-paths", default=100_000, show_default=True, type=int)
@click.option("--n-paths-inverse", default=None, type=int,
              help="Path count for the inverse-moment leg [default: n-paths].")
@_params_file
@click.option("--tau0", default=None, type=float)
@click.option("--a-bar", default=None, type=float)
@click.option("--s-star-0", default=None, type=float)
@click.option("--lambda-bar", default=None, type=float)
@click.pass_context
def diagnose(ctx, horizon, n_paths, n_paths_inverse, params_file, tau0, a_bar,
             s_star_0, lambda_bar) -> None:
    """Monte Carlo diagnostics of the two candidate pricing measures."""
    params, source = resolve_params(
        params_file,
        {"tau0": tau0, "a_bar": a_bar, "s_star_0": s_star_0,
         "lambda_bar": lambda_bar},
        fallback={"lambda_bar": 0.5, "s_star_0": 25.0},
    )
    _dispatch(_config(ctx, Command.DIAGNOSE, params=params, params_source=source,
                      flags={
                          "horizon": horizon, "n_paths": n_paths,
                          "n_paths_inverse": n_paths_inverse,
                      }))


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Index CSV (omit with --simulate).")
@click.option("--simulate", "simulate_", is_flag=True)
@click.option("--maturity", default=None, type=float)
@click.option("--years", default=30.0, show_default=True, type=float)
@click.option("--start-date", default="2000-01-03", show_default=True)
@_params_file
@_convention
@click.pass_context
def report(ctx, input_path, simulate_, maturity, years, start_date, params_file,
           convention) -> None:
    """Estimate, hedge both variants, and emit all figure CSVs."""
    if (input_path is None) == (not simulate_):
        raise click.UsageError("provide exactly one of --input or --simulate")
    params, source = resolve_params(params_file, {})
    _dispatch(_config(ctx, Command.REPORT, input_path=input_path, params=params,
                      params_source=source, flags={
                          "maturity": maturity, "years": years,
                          "start_date": start_date, "convention": convention,
                      }))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the pricing service with uvicorn."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
