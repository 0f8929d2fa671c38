"""Exact path generation and measure diagnostics.

Under the pricing measure the index is a squared Bessel process of
dimension four in the deterministic clock u(t) = exp(trendline(t)), so
paths are generated by exact transition sampling (no discretization
bias).  Under the real-world measure the index is the product of a
deterministic exponential exp(lambda_bar * a_bar * (t - t0)) and a
squared Bessel process of dimension four running in the closed-form
clock

    u(t) = u(t0) + exp(tau(t0)) * expm1(a_bar (1 - lambda_bar)(t - t0))
                                   / (1 - lambda_bar),

which again permits exact sampling (lambda_bar = 1 makes the closed
form degenerate and is rejected).

The density process of the pricing measure relative to the real-world
measure is the stochastic exponential of -sigma dW with

    sigma(t) = lambda_bar * sqrt(a_bar * S_t / (4 exp(trendline(t)))).

The exact sampler does not expose the Brownian increments, so the
density process is accumulated on paths from a dedicated strong
(Euler) scheme whose increments are recoverable from the path values.
The Euler scheme also serves as an independent cross-check of the
exact real-world sampler; it is never used for production paths.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import besq
from .core_types import BnpError, MmmParams, TimeGrid, trendline

MIN_DIAGNOSTIC_PATHS = 10_000
_CHUNK = 25_000


class MeasureMismatchError(BnpError):
    code = "simulate.measure_mismatch"


class TimeChangeError(BnpError):
    code = "simulate.time_change"


class Measure(enum.Enum):
    Q_BN = "Q_BN"
    P_REAL = "P_REAL"


class Scheme(enum.Enum):
    EXACT = "EXACT"
    EULER = "EULER"


@dataclass(frozen=True, eq=False)
class SimPath:
    """One simulated index path with the trendline used to generate it."""

    grid: TimeGrid
    s_star: np.ndarray
    tau_bar: np.ndarray
    measure: Measure
    lambda_bar: float
    seed: int | None
    scheme: Scheme = Scheme.EXACT

    def __post_init__(self) -> None:
        s = np.asarray(self.s_star, dtype=float)
        object.__setattr__(self, "s_star", s)
        object.__setattr__(self, "tau_bar", np.asarray(self.tau_bar, dtype=float))
        if s.size != len(self.grid) or self.tau_bar.size != len(self.grid):
            raise TimeChangeError("path length does not match the grid")
        if np.any(s <= 0.0):
            raise TimeChangeError("index path must be strictly positive")


@dataclass(frozen=True)
class MeasureDiagnostics:
    """Monte Carlo evidence for the two candidate pricing measures.

    mean_lambda_bn estimates the real-world expectation of the density
    process at the horizon (martingale: should be 1); mean_inv_sstar_q
    estimates the inverse-index expectation under the pricing measure
    against its closed form; supermartingale_gap is 1/s0 minus that
    estimate (strictly positive: the putative risk-neutral density
    loses mass).
    """

    horizon: float
    n_paths: int
    mean_lambda_bn: float
    mean_lambda_bn_stderr: float
    mean_inv_sstar_q: float
    mean_inv_sstar_q_stderr: float
    closed_form_inv: float
    supermartingale_gap: float

    def __post_init__(self) -> None:
        if self.n_paths < MIN_DIAGNOSTIC_PATHS:
            raise TimeChangeError(
                f"diagnostics need at least {MIN_DIAGNOSTIC_PATHS} paths"
            )
        for name in ("mean_lambda_bn_stderr", "mean_inv_sstar_q_stderr"):
            if not np.isfinite(getattr(self, name)):
                raise TimeChangeError(f"{name} is not finite")


# ---------------------------------------------------------------------------
# randomness and worker plumbing

def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _seed_of(rng: np.random.Generator | int | None) -> int | None:
    return rng if isinstance(rng, int) else None


def _child_sequences(rng: np.random.Generator | int | None, n: int):
    if isinstance(rng, np.random.Generator):
        root = np.random.SeedSequence(int(rng.integers(0, 2**63)))
    else:
        root = np.random.SeedSequence(rng)
    return root.spawn(n)


def worker_count() -> int:
    """Thread cap from BN_PRICER_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("BN_PRICER_THREADS", "1")))
    except ValueError:
        return 1


def _map_chunks(fn, seeds, sizes):
    """Run fn(seed_sequence, size) per chunk; order is fixed by the input,
    so results are identical for any thread count."""
    workers = worker_count()
    if workers == 1:
        return [fn(s, n) for s, n in zip(seeds, sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds, sizes))


def _chunk_sizes(total: int, chunk: int = _CHUNK) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _mean_stderr(chunks: list[tuple[float, float, int]]) -> tuple[float, float]:
    """Compensated mean and standard error from per-chunk (sum, sumsq, n)."""
    n = sum(c[2] for c in chunks)
    total = math.fsum(c[0] for c in chunks)
    totalsq = math.fsum(c[1] for c in chunks)
    mean = total / n
    var = max(totalsq - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


# ---------------------------------------------------------------------------
# pricing-measure paths (exact)

def _clock_q(params: MmmParams, points: np.ndarray) -> np.ndarray:
    return np.exp(np.asarray(trendline(params, points)))


def simulate_q_paths(
    params: MmmParams,
    grid: TimeGrid,
    n_paths: int,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Exact paths under the pricing measure, shape (n_paths, len(grid)).

    Each transition is an exact draw, so the marginals are correct for
    any grid spacing; refining the grid only adds observation points.
    """
    gen = as_generator(rng)
    u = _clock_q(params, grid.points)
    du = np.diff(u)
    out = np.empty((n_paths, len(grid)))
    out[:, 0] = params.s_star_0
    level = np.full(n_paths, params.s_star_0)
    for k, d in enumerate(du):
        level = d * gen.noncentral_chisquare(besq.DIMENSION, level / d)
        out[:, k + 1] = level
    return out


def simulate_q(
    params: MmmParams,
    grid: TimeGrid,
    rng: np.random.Generator | int | None = None,
) -> SimPath:
    """One exact path under the pricing measure."""
    path = simulate_q_paths(params, grid, 1, rng)[0]
    return SimPath(
        grid=grid,
        s_star=path,
        tau_bar=np.asarray(trendline(params, grid.points)),
        measure=Measure.Q_BN,
        lambda_bar=0.0,
        seed=_seed_of(rng),
    )


# ---------------------------------------------------------------------------
# real-world paths

def p_time_change(params: MmmParams, grid: TimeGrid) -> np.ndarray:
    """Closed-form clock for the real-world product representation."""
    lam = params.lambda_bar
    if lam == 1.0:
        raise TimeChangeError(
            "lambda_bar = 1 degenerates the real-world time change"
        )
    dt = grid.points - grid.t0
    u0 = float(np.exp(trendline(params, grid.t0)))
    return u0 * (1.0 + np.expm1(params.a_bar * (1.0 - lam) * dt) / (1.0 - lam))


def simulate_p_paths(
    params: MmmParams,
    grid: TimeGrid,
    n_paths: int,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Exact real-world paths via the product representation."""
    gen = as_generator(rng)
    du = np.diff(p_time_change(params, grid))
    growth = np.exp(params.lambda_bar * params.a_bar * (grid.points - grid.t0))
    out = np.empty((n_paths, len(grid)))
    out[:, 0] = params.s_star_0
    level = np.full(n_paths, params.s_star_0)
    for k, d in enumerate(du):
        level = d * gen.noncentral_chisquare(besq.DIMENSION, level / d)
        out[:, k + 1] = level * growth[k + 1]
    return out


def simulate_p(
    params: MmmParams,
    grid: TimeGrid,
    rng: np.random.Generator | int | None = None,
) -> SimPath:
    """One exact path under the real-world measure.

    With lambda_bar = 0 this coincides in law with simulate_q (the two
    measures agree when the net risk-adjusted return vanishes).
    """
    path = simulate_p_paths(params, grid, 1, rng)[0]
    return SimPath(
        grid=grid,
        s_star=path,
        tau_bar=np.asarray(trendline(params, grid.points)),
        measure=Measure.P_REAL,
        lambda_bar=params.lambda_bar,
        seed=_seed_of(rng),
    )


def _euler_coefficients(params: MmmParams, t: float, level: np.ndarray):
    # full truncation: coefficients read the positive part, so a path
    # that crosses zero has zero diffusion and is pushed back by drift
    clipped = np.maximum(level, 0.0)
    e_tau = np.exp(trendline(params, t))
    drift = params.lambda_bar * params.a_bar * clipped + 4.0 * params.a_bar * e_tau
    diffusion = np.sqrt(4.0 * params.a_bar * e_tau * clipped)
    return drift, diffusion


def simulate_p_euler_paths(
    params: MmmParams,
    grid: TimeGrid,
    n_paths: int,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Strong Euler paths under the real-world measure (driver mode).

    Full-truncation discretization of
    dS = (lambda a S + 4 a e^tau) dt + sqrt(4 a e^tau S) dW.
    The Brownian increments are recoverable from consecutive path values
    wherever the diffusion coefficient is nonzero, which is what the
    density-process accumulation needs (its volatility vanishes exactly
    where the diffusion does).
    """
    gen = as_generator(rng)
    t = grid.points
    out = np.empty((n_paths, len(grid)))
    out[:, 0] = params.s_star_0
    level = np.full(n_paths, params.s_star_0)
    for k in range(len(grid) - 1):
        h = t[k + 1] - t[k]
        drift, diffusion = _euler_coefficients(params, t[k], level)
        level = level + drift * h + diffusion * (gen.standard_normal(n_paths) * np.sqrt(h))
        out[:, k + 1] = level
    return out


def simulate_p_euler(
    params: MmmParams,
    grid: TimeGrid,
    rng: np.random.Generator | int | None = None,
) -> SimPath:
    path = simulate_p_euler_paths(params, grid, 1, rng)[0]
    if np.any(path <= 0.0):
        raise TimeChangeError(
            "Euler path hit a nonpositive value; refine the grid"
        )
    return SimPath(
        grid=grid,
        s_star=path,
        tau_bar=np.asarray(trendline(params, grid.points)),
        measure=Measure.P_REAL,
        lambda_bar=params.lambda_bar,
        seed=_seed_of(rng),
        scheme=Scheme.EULER,
    )


# ---------------------------------------------------------------------------
# density process of the pricing measure

def _sigma_bn(params: MmmParams, t, level):
    clipped = np.maximum(level, 0.0)
    return params.lambda_bar * np.sqrt(
        params.a_bar * clipped / (4.0 * np.exp(trendline(params, t)))
    )


def radon_nikodym_bn(path: SimPath, params: MmmParams | None = None) -> np.ndarray:
    """Density process of the pricing measure along a driver path.

    Accumulates the stochastic exponential of -sigma dW using the
    Brownian increments recovered from the Euler recursion; starts at
    1 and stays strictly positive.  Only real-world paths from the
    strong scheme carry recoverable increments.
    """
    if path.measure is not Measure.P_REAL:
        raise MeasureMismatchError(
            f"density accumulation needs a real-world path, got {path.measure.value}"
        )
    if path.scheme is not Scheme.EULER:
        raise MeasureMismatchError(
            "exact transition paths do not expose Brownian increments; "
            "use the strong (Euler) driver mode"
        )
    if params is None:
        params = MmmParams(
            tau0=float(path.tau_bar[0] - path.grid.t0 * _slope_of(path)),
            a_bar=_slope_of(path),
            s_star_0=float(path.s_star[0]),
            lambda_bar=path.lambda_bar,
        )
    t = path.grid.points
    s = path.s_star
    log_lam = np.zeros(t.size)
    for k in range(t.size - 1):
        h = t[k + 1] - t[k]
        drift, diffusion = _euler_coefficients(params, t[k], s[k])
        if diffusion > 0.0:
            dw = (s[k + 1] - s[k] - drift * h) / diffusion
            sigma = _sigma_bn(params, t[k], s[k])
            log_lam[k + 1] = log_lam[k] - sigma * dw - 0.5 * sigma * sigma * h
        else:
            log_lam[k + 1] = log_lam[k]
    return np.exp(log_lam)


def _slope_of(path: SimPath) -> float:
    dt = path.grid.points[-1] - path.grid.points[0]
    return float((path.tau_bar[-1] - path.tau_bar[0]) / dt)


# ---------------------------------------------------------------------------
# diagnostics

def diagnose_measures(
    params: MmmParams,
    horizon: float,
    n_paths: int,
    rng: np.random.Generator | int | None = None,
    *,
    n_paths_inverse: int | None = None,
    steps_per_year: int = 252,
) -> MeasureDiagnostics:
    """Monte Carlo diagnostics for both candidate pricing measures.

    The density-process mean uses strong driver paths on a daily grid
    (the discrete stochastic exponential is mean-one step by step, so
    the estimate isolates Monte Carlo error).  The inverse-index mean
    uses single exact transitions to the horizon; it is tail-sensitive,
    so its path count can be raised independently.
    """
    if n_paths < MIN_DIAGNOSTIC_PATHS:
        raise TimeChangeError(
            f"diagnostics need at least {MIN_DIAGNOSTIC_PATHS} paths"
        )
    n_inv = n_paths_inverse if n_paths_inverse is not None else n_paths
    grid = TimeGrid.regular(0.0, horizon, max(1, round(horizon * steps_per_year)))
    seeds = _child_sequences(rng, 2)

    # real-world leg: E[Lambda_T] across chunked driver paths
    sizes = _chunk_sizes(n_paths)
    lam_seeds = seeds[0].spawn(len(sizes))

    def lambda_chunk(seed_seq, size):
        gen = np.random.default_rng(seed_seq)
        paths = simulate_p_euler_paths(params, grid, size, gen)
        lam_terminal = _lambda_terminal(params, grid, paths)
        return float(lam_terminal.sum()), float((lam_terminal**2).sum()), size

    lam_chunks = _map_chunks(lambda_chunk, lam_seeds, sizes)
    mean_lambda, stderr_lambda = _mean_stderr(lam_chunks)

    # pricing-measure leg: E[1/S_T] from single exact transitions
    u0 = float(np.exp(trendline(params, 0.0)))
    u_T = float(np.exp(trendline(params, horizon)))
    transition = besq.BesqTransition(params.s_star_0, u0, u_T)
    inv_sizes = _chunk_sizes(n_inv)
    inv_seeds = seeds[1].spawn(len(inv_sizes))

    def inverse_chunk(seed_seq, size):
        gen = np.random.default_rng(seed_seq)
        inv = 1.0 / besq.sample_transition(transition, gen, size=size)
        return float(inv.sum()), float((inv**2).sum()), size

    inv_chunks = _map_chunks(inverse_chunk, inv_seeds, inv_sizes)
    mean_inv, stderr_inv = _mean_stderr(inv_chunks)

    return MeasureDiagnostics(
        horizon=horizon,
        n_paths=n_paths,
        mean_lambda_bn=mean_lambda,
        mean_lambda_bn_stderr=stderr_lambda,
        mean_inv_sstar_q=mean_inv,
        mean_inv_sstar_q_stderr=stderr_inv,
        closed_form_inv=besq.inverse_moment(transition),
        supermartingale_gap=1.0 / params.s_star_0 - mean_inv,
    )


def _lambda_terminal(
    params: MmmParams, grid: TimeGrid, paths: np.ndarray
) -> np.ndarray:
    """Terminal density-process values for a matrix of driver paths."""
    t = grid.points
    log_lam = np.zeros(paths.shape[0])
    for k in range(t.size - 1):
        h = t[k + 1] - t[k]
        level = paths[:, k]
        drift, diffusion = _euler_coefficients(params, t[k], level)
        live = diffusion > 0.0
        dw = np.where(
            live, (paths[:, k + 1] - level - drift * h), 0.0
        ) / np.where(live, diffusion, 1.0)
        sigma = _sigma_bn(params, t[k], level)
        log_lam += -sigma * dw - 0.5 * sigma * sigma * h
    return np.exp(log_lam)
