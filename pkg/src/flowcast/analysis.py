"""Classical series analysis: decomposition, stationarity, smoothing.

All operations are pure functions over 1-D float arrays. The additive
decomposition and the four smoothers (moving average, single/double
exponential, damped Holt-Winters) follow the textbook recursions exactly;
the stationarity check is an augmented Dickey-Fuller regression with a
constant term and approximate p-values from the MacKinnon (1994) response
surface, embedded below as static coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FlowcastError

__all__ = [
    "Decomposition",
    "AdfResult",
    "SmoothingParams",
    "DesResult",
    "HwResult",
    "decompose",
    "adf_test",
    "smooth_ma",
    "smooth_ses",
    "smooth_des",
    "smooth_hw",
    "difference",
]


# ---------------------------------------------------------------------------
# decomposition

@dataclass(frozen=True)
class Decomposition:
    """Additive split observed = trend + seasonal + residual.

    Trend and residual are NaN in the half-window margins where the
    centered moving average is undefined.
    """

    observed: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int


def decompose(values: Sequence[float], period: int) -> Decomposition:
    """Classical decomposition by centered moving average.

    Even periods use the standard half-weighted window of length
    ``period + 1``; the seasonal component is the per-phase mean of the
    detrended series, re-centered to zero mean.
    """
    x = np.asarray(values, dtype=float)
    if period < 2:
        raise FlowcastError("bad-parameter", "period must be >= 2")
    n = len(x)
    if n < 2 * period:
        raise FlowcastError(
            "insufficient-data", f"need >= {2 * period} points, got {n}"
        )

    if period % 2 == 0:
        filt = np.concatenate([[0.5], np.ones(period - 1), [0.5]]) / period
        margin = period // 2
    else:
        filt = np.full(period, 1.0 / period)
        margin = (period - 1) // 2

    trend = np.full(n, np.nan)
    trend[margin:n - margin] = np.convolve(x, filt, mode="valid")

    detrended = x - trend
    phase_means = np.empty(period)
    for phase in range(period):
        vals = detrended[phase::period]
        phase_means[phase] = np.mean(vals[~np.isnan(vals)])
    phase_means -= phase_means.mean()

    seasonal = phase_means[np.arange(n) % period]
    residual = x - trend - seasonal
    return Decomposition(observed=x, trend=trend, seasonal=seasonal,
                         residual=residual, period=period)


def difference(values: Sequence[float], order: int = 1) -> np.ndarray:
    """Plain differencing transform (exposed for the CLI)."""
    x = np.asarray(values, dtype=float)
    if order < 1:
        raise FlowcastError("bad-parameter", "order must be >= 1")
    if len(x) <= order:
        raise FlowcastError("insufficient-data", "series shorter than order")
    return np.diff(x, n=order)


# ---------------------------------------------------------------------------
# stationarity (ADF, constant-only specification)

# MacKinnon (1994) approximate asymptotic p-value response surface for the
# Dickey-Fuller tau distribution, constant-only case, one unit root.
# p = Phi(poly(tau)); the small-p polynomial applies below TAU_STAR.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_TAU_SMALLP = (2.1659, 1.4412, 0.038269)
_TAU_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def mackinnon_pvalue(statistic: float) -> float:
    """Approximate p-value for a constant-only ADF statistic."""
    t = float(statistic)
    if t > _TAU_MAX:
        return 1.0
    if t < _TAU_MIN:
        return 0.0
    coefs = _TAU_SMALLP if t <= _TAU_STAR else _TAU_LARGEP
    acc = 0.0
    for c in reversed(coefs):
        acc = acc * t + c
    return _norm_cdf(acc)


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    reject_at: dict = field(default_factory=dict)  # level -> bool


def _ols(X: np.ndarray, y: np.ndarray):
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise FlowcastError("degenerate-series", "singular ADF regression")
    resid = y - X @ beta
    return beta, resid


def adf_test(values: Sequence[float], max_lag: Optional[int] = None) -> AdfResult:
    """Augmented Dickey-Fuller test, constant-only specification.

    Fits dy_t = mu + rho*y_{t-1} + sum_j delta_j*dy_{t-j} + e_t; the
    statistic is rho_hat over its standard error. The lag count is chosen
    by minimizing AIC over 0..max_lag on a common sample; the default
    max_lag is the Schwert rule floor(12*(n/100)^0.25).
    """
    y = np.asarray(values, dtype=float).ravel()
    n = len(y)
    if max_lag is None:
        max_lag = int(math.floor(12.0 * (n / 100.0) ** 0.25))
        max_lag = max(0, min(max_lag, (n - 12) // 2))
    if max_lag < 0:
        raise FlowcastError("bad-parameter", "max_lag must be >= 0")
    if n < 10 + max_lag:
        raise FlowcastError(
            "insufficient-data", f"need >= {10 + max_lag} points, got {n}"
        )
    if np.ptp(y) == 0.0:
        raise FlowcastError("degenerate-series", "constant series")

    dy = np.diff(y)

    def design(k: int, start: int):
        # Rows i = start..len(dy)-1: dy[i] on [1, y[i], dy[i-1..i-k]].
        rows = len(dy) - start
        X = np.empty((rows, 2 + k))
        X[:, 0] = 1.0
        X[:, 1] = y[start:n - 1]
        for j in range(1, k + 1):
            X[:, 1 + j] = dy[start - j:len(dy) - j]
        return X, dy[start:]

    # Lag selection on the sample trimmed to the largest candidate, so the
    # information criteria are comparable. Candidates whose lag columns are
    # exactly collinear (possible on pathological series) are skipped.
    best_k, best_aic = None, math.inf
    for k in range(0, max_lag + 1):
        X, response = design(k, max_lag)
        try:
            _, resid = _ols(X, response)
        except FlowcastError:
            continue
        nobs = len(response)
        ssr = float(resid @ resid)
        if ssr <= 0.0:
            ssr = np.finfo(float).tiny
        aic = nobs * math.log(ssr / nobs) + 2.0 * (k + 2)
        if aic < best_aic:
            best_aic, best_k = aic, k
    if best_k is None:
        raise FlowcastError("degenerate-series", "no nonsingular lag candidate")

    # Refit at the chosen lag on the maximal sample.
    X, response = design(best_k, best_k)
    beta, resid = _ols(X, response)
    nobs, nparam = X.shape
    dof = nobs - nparam
    if dof <= 0:
        raise FlowcastError("degenerate-series", "no residual degrees of freedom")
    sigma2 = float(resid @ resid) / dof
    try:
        xtx_inv = np.linalg.inv(X.T @ X)
    except np.linalg.LinAlgError:
        raise FlowcastError("degenerate-series", "singular ADF regression") from None
    se_rho = math.sqrt(sigma2 * xtx_inv[1, 1])
    if not math.isfinite(se_rho):
        raise FlowcastError("degenerate-series", "zero-variance regression")
    if se_rho == 0.0:
        # perfect fit: the statistic diverges with the sign of rho_hat
        if beta[1] == 0.0:
            raise FlowcastError("degenerate-series", "zero rho with zero residuals")
        statistic = -math.inf if beta[1] < 0 else math.inf
    else:
        statistic = float(beta[1]) / se_rho
    p_value = mackinnon_pvalue(statistic)
    return AdfResult(
        statistic=statistic,
        p_value=p_value,
        lags_used=best_k,
        reject_at={level: p_value < level for level in (0.01, 0.05, 0.10)},
    )


# ---------------------------------------------------------------------------
# smoothing

def smooth_ma(values: Sequence[float], k: int) -> np.ndarray:
    """Trailing moving average of window k; the first k-1 outputs use the
    available prefix (expanding window)."""
    x = np.asarray(values, dtype=float)
    if k <= 0 or k > len(x):
        raise FlowcastError("bad-window", f"window {k} out of range for n={len(x)}")
    csum = np.cumsum(x)
    out = np.empty_like(x)
    head = min(k - 1, len(x))
    out[:head] = csum[:head] / np.arange(1, head + 1)
    out[k - 1:] = (csum[k - 1:] - np.concatenate([[0.0], csum[:-k]])) / k
    return out


def _check_open_unit(name: str, value: float) -> float:
    if not (0.0 < value < 1.0):
        raise FlowcastError("bad-parameter", f"{name} must be in (0,1), got {value}")
    return float(value)


def smooth_ses(values: Sequence[float], alpha: float) -> np.ndarray:
    """Single exponential smoothing: s_t = alpha*x_t + (1-alpha)*s_{t-1}."""
    _check_open_unit("alpha", alpha)
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        raise FlowcastError("empty-input", "empty series")
    out = np.empty_like(x)
    s = x[0]
    out[0] = s
    for t in range(1, len(x)):
        s = alpha * x[t] + (1.0 - alpha) * s
        out[t] = s
    return out


@dataclass(frozen=True)
class DesResult:
    """Double exponential smoothing output: level and trend sequences."""

    level: np.ndarray
    trend: np.ndarray

    def forecast(self, horizon: int) -> np.ndarray:
        """h-step-ahead projections s_n + h*b_n for h = 1..horizon."""
        h = np.arange(1, horizon + 1, dtype=float)
        return self.level[-1] + h * self.trend[-1]


def smooth_des(values: Sequence[float], alpha: float, beta: float) -> DesResult:
    """Double (level + trend) exponential smoothing.

    s_0 = x_0, b_0 = x_1 - x_0;
    s_t = alpha*x_t + (1-alpha)*(s_{t-1} + b_{t-1});
    b_t = beta*(s_t - s_{t-1}) + (1-beta)*b_{t-1}.
    """
    _check_open_unit("alpha", alpha)
    _check_open_unit("beta", beta)
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise FlowcastError("insufficient-data", "need >= 2 points")
    n = len(x)
    S = np.empty(n)
    B = np.empty(n)
    S[0] = x[0]
    B[0] = x[1] - x[0]
    for t in range(1, n):
        S[t] = alpha * x[t] + (1.0 - alpha) * (S[t - 1] + B[t - 1])
        B[t] = beta * (S[t] - S[t - 1]) + (1.0 - beta) * B[t - 1]
    return DesResult(level=S, trend=B)


@dataclass(frozen=True)
class SmoothingParams:
    """Damped Holt-Winters knobs; alpha/beta/gamma are open-interval (0,1),
    phi in (0,1], L is the season length in bins, m the forecast horizon."""

    alpha: float
    beta: float
    gamma: float
    L: int
    m: int
    phi: float = 1.0

    def __post_init__(self):
        _check_open_unit("alpha", self.alpha)
        _check_open_unit("beta", self.beta)
        _check_open_unit("gamma", self.gamma)
        if not (0.0 < self.phi <= 1.0):
            raise FlowcastError("bad-parameter", f"phi must be in (0,1], got {self.phi}")
        if self.L < 1:
            raise FlowcastError("bad-parameter", "L must be >= 1")
        if self.m < 1:
            raise FlowcastError("bad-parameter", "m must be >= 1")


@dataclass(frozen=True)
class HwResult:
    """Holt-Winters state and outputs.

    ``fitted[t]`` is the one-step-ahead prediction of x_t from the state at
    t-1 (fitted[0] is pinned to the observation); ``seasonal`` holds the
    final per-phase values, slot i belonging to phase i mod L.
    """

    level: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    fitted: np.ndarray
    forecast: np.ndarray


def smooth_hw(
    values: Sequence[float],
    params: SmoothingParams,
    seasonal: bool = True,
) -> HwResult:
    """Additive damped Holt-Winters smoothing and m-step forecast.

    Recursions, with phi the damping constant and C the per-phase seasonal:

        s_t = alpha*(x_t - C[t mod L]) + (1-alpha)*(s_{t-1} + phi*b_{t-1})
        b_t = beta*(s_t - s_{t-1}) + (1-beta)*phi*b_{t-1}
        C[t mod L] <- gamma*(x_t - s_t) + (1-gamma)*C[t mod L]

    Initial state: s_0 = x_0; b_0 = sum_i(x_{L+i} - x_i) / L^2;
    C[i] = x_i - mean(x_0..x_{L-1}). Forecasts are
    F_{n-1+h} = s_{n-1} + b_{n-1} * sum_{i=1..h} phi^i + C[(n-1+h) mod L].

    With ``seasonal=False`` the seasonal channel is pinned to zero; combined
    with L=1 and phi=1 this degenerates to double exponential smoothing.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    L = params.L
    if n < 2 * L:
        raise FlowcastError("insufficient-data", f"need >= {2 * L} points, got {n}")
    alpha, beta, gamma, phi = params.alpha, params.beta, params.gamma, params.phi

    if seasonal:
        seas = x[:L] - np.mean(x[:L])
    else:
        seas = np.zeros(L)

    S = np.empty(n)
    B = np.empty(n)
    fitted = np.empty(n)
    S[0] = x[0]
    B[0] = float(np.sum(x[L:2 * L] - x[:L])) / (L * L)
    fitted[0] = x[0]
    for t in range(1, n):
        prev_seas = seas[t % L]
        prev_level = S[t - 1]
        damped = phi * B[t - 1]
        fitted[t] = prev_level + damped + prev_seas
        S[t] = alpha * (x[t] - prev_seas) + (1.0 - alpha) * (prev_level + damped)
        B[t] = beta * (S[t] - prev_level) + (1.0 - beta) * phi * B[t - 1]
        if seasonal:
            seas[t % L] = gamma * (x[t] - S[t]) + (1.0 - gamma) * prev_seas

    horizon = params.m
    phi_sum = np.cumsum(phi ** np.arange(1, horizon + 1))
    fc = np.empty(horizon)
    for h in range(1, horizon + 1):
        fc[h - 1] = S[n - 1] + B[n - 1] * phi_sum[h - 1] + seas[(n - 1 + h) % L]
    return HwResult(level=S, trend=B, seasonal=seas, fitted=fitted, forecast=fc)
