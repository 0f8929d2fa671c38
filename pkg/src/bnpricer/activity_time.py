"""Activity time observation and trendline estimation.

The activity time is observed from an index series through the running
quadratic variation of its square root:

    tau_t = ln( [sqrt(S)]_{0,t} + exp(tau0) ),

where tau0 is the unknown initial activity time.  Fitting searches for
the tau0 whose observed activity-time path is closest to a straight
line in calendar time, then reads the trendline off the ordinary
least-squares fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import BnpError, IndexSeries, MmmParams, TimeGrid

MIN_OBSERVATIONS = 100

# tau0 search: coarse scan of exp(tau0) over [qv_T * 1e-6, qv_T * 1e3]
# (geometric, i.e. tau0 linear between the log endpoints), then
# golden-section refinement of the best bracket.
_SCAN_DECADES_BELOW = 6.0
_SCAN_DECADES_ABOVE = 3.0
_SCAN_POINTS = 200
_REFINE_TOL = 1e-9
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class EstimationError(BnpError):
    code = "activity_time.estimation"


@dataclass(frozen=True, eq=False)
class ActivityTime:
    """Observed activity time path with its fitted trendline.

    qv is the running quadratic variation of sqrt(S), tau the observed
    activity time computed with the fitted anchor tau0_est, and
    (a_bar_est, r_squared) come from the least-squares line of tau
    against calendar time.
    """

    grid: TimeGrid
    qv: np.ndarray
    tau: np.ndarray
    tau0_est: float
    a_bar_est: float
    r_squared: float

    def __post_init__(self) -> None:
        qv = np.asarray(self.qv, dtype=float)
        tau = np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "qv", qv)
        object.__setattr__(self, "tau", tau)
        if qv.size != len(self.grid) or tau.size != len(self.grid):
            raise EstimationError("qv/tau length does not match the grid")
        if qv[0] != 0.0 or np.any(np.diff(qv) < 0.0):
            raise EstimationError("qv must start at 0 and be nondecreasing")
        if not np.allclose(tau, observed_activity_time(qv, self.tau0_est), atol=1e-9):
            raise EstimationError("tau is not consistent with qv and tau0_est")
        if not self.a_bar_est > 0.0:
            raise EstimationError(
                f"fitted slope must be positive, got {self.a_bar_est}"
            )

    def trend_values(self) -> np.ndarray:
        """Fitted trendline evaluated on the grid."""
        intercept, slope = _ols_line(self.grid.points, self.tau)
        return intercept + slope * self.grid.points

    def to_params(self, s_star_0: float) -> MmmParams:
        """Trendline parameters with the intercept quoted at t = 0."""
        intercept, slope = _ols_line(self.grid.points, self.tau)
        return MmmParams(tau0=intercept, a_bar=slope, s_star_0=s_star_0)


def quadratic_variation(series: IndexSeries) -> np.ndarray:
    """Running quadratic variation of sqrt(level); qv_0 = 0.

    Every consecutive pair contributes one squared increment; gaps in
    the dates are not interpolated, so a multi-day gap enters as a
    single increment across the gap.
    """
    roots = np.sqrt(series.levels)
    return np.concatenate([[0.0], np.cumsum(np.diff(roots) ** 2)])


def observed_activity_time(qv, tau0: float) -> np.ndarray:
    """Pointwise ln(qv + exp(tau0)); starts at tau0, nondecreasing."""
    qv = np.asarray(qv, dtype=float)
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(qv), tau0)


def _ols_line(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    tc = t - t.mean()
    slope = float(tc @ (y - y.mean()) / (tc @ tc))
    return float(y.mean() - slope * t.mean()), slope


def _scan_objective(logqv: np.ndarray, tc: np.ndarray, stt: float, cand: np.ndarray):
    """Relative residual 1 - R^2 of the affine fit, per tau0 candidate."""
    tau = np.logaddexp(logqv[None, :], cand[:, None])
    dev = tau - tau.mean(axis=1, keepdims=True)
    tss = np.einsum("ij,ij->i", dev, dev)
    slope = (dev @ tc) / stt
    return (tss - slope * slope * stt) / tss


def _refine_objective(logqv: np.ndarray, t: np.ndarray, tau0: float) -> float:
    """Same objective from the explicit residual vector.

    tss - slope^2 stt cancels catastrophically once the fit is nearly
    exact, flooring the refinement around 1e-16; summed squared
    residuals stay accurate far below that.
    """
    tau = np.logaddexp(logqv, tau0)
    intercept, slope = _ols_line(t, tau)
    resid = tau - (intercept + slope * t)
    dev = tau - tau.mean()
    return float((resid @ resid) / (dev @ dev))


def fit_trendline(series: IndexSeries) -> ActivityTime:
    """Fit the affine trendline, searching over the initial activity time.

    The search objective is the relative residual sum of squares
    (equivalently 1 - R^2) of the least-squares line through the
    observed activity time.  Raw residuals are not usable here: as
    tau0 grows the observed path flattens toward a constant and its
    absolute residuals vanish regardless of fit quality, so only the
    scale-free criterion identifies the straightest path.  Ties in the
    coarse scan resolve to the smaller tau0.
    """
    if len(series) < MIN_OBSERVATIONS:
        raise EstimationError(
            f"need at least {MIN_OBSERVATIONS} observations, got {len(series)}"
        )
    qv = quadratic_variation(series)
    qv_total = qv[-1]
    if qv_total <= 0.0:
        raise EstimationError("series has zero total quadratic variation")

    t = series.times()
    tc = t - t.mean()
    stt = float(tc @ tc)
    with np.errstate(divide="ignore"):
        logqv = np.log(qv)

    lo = np.log(qv_total) - _SCAN_DECADES_BELOW * np.log(10.0)
    hi = np.log(qv_total) + _SCAN_DECADES_ABOVE * np.log(10.0)
    cand = np.linspace(lo, hi, _SCAN_POINTS)
    obj = _scan_objective(logqv, tc, stt, cand)
    best = int(np.argmin(obj))  # first minimum, i.e. smallest tau0 on ties

    def objective(tau0: float) -> float:
        return _refine_objective(logqv, t, tau0)

    a = cand[max(best - 1, 0)]
    b = cand[min(best + 1, _SCAN_POINTS - 1)]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while b - a > _REFINE_TOL:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = objective(x2)
    tau0_est = x1 if f1 <= f2 else x2
    if objective(tau0_est) > objective(float(cand[best])):
        tau0_est = float(cand[best])

    tau = observed_activity_time(qv, tau0_est)
    _, slope = _ols_line(t, tau)
    r_squared = 1.0 - objective(tau0_est)
    if not slope > 0.0:
        raise EstimationError(
            f"fitted slope {slope} is not positive; trendline model inapplicable"
        )
    return ActivityTime(
        grid=TimeGrid.from_points(t),
        qv=qv,
        tau=tau,
        tau0_est=float(tau0_est),
        a_bar_est=slope,
        r_squared=float(r_squared),
    )
