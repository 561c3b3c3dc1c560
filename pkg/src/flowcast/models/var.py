"""Vector autoregression fit by per-equation least squares.

Order selection scores every candidate p on a common sample (all
candidates lose the first ``maxlags`` rows) so the information criteria
are comparable:

    AIC  = ln det(Sigma) + 2q/T
    BIC  = ln det(Sigma) + ln(T) q/T
    HQIC = ln det(Sigma) + 2 ln(ln T) q/T

with Sigma the MLE residual covariance, q the number of estimated mean
parameters k(1 + kp), and T the effective sample size. The winning order
is refit on the maximal usable sample.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import FlowcastError
from .base import Forecaster, pack_model, unpack_model

__all__ = ["VarModel", "var_fit", "var_forecast", "one_step_predictions", "VarForecaster"]

_CRITERIA = ("aic", "bic", "hqic")


@dataclass(frozen=True)
class VarModel:
    """Fitted VAR(p): intercepts c (k,), lag matrices A (p,k,k), residual
    covariance sigma (k,k, degrees-of-freedom adjusted)."""

    k: int
    p: int
    c: np.ndarray
    A: np.ndarray
    sigma: np.ndarray
    ic_used: str


def _as_matrix(data) -> np.ndarray:
    """Observations as rows: accepts a (T, k) array, one 1-D series, or a
    list/tuple of k aligned 1-D series."""
    if isinstance(data, (list, tuple)):
        cols = [np.asarray(c, dtype=float).ravel() for c in data]
        if len({len(c) for c in cols}) != 1:
            raise FlowcastError("bad-dimension", "series lengths differ")
        return np.column_stack(cols)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        return arr[:, None]
    if arr.ndim != 2:
        raise FlowcastError("bad-dimension", "expected 1-D or 2-D data")
    return arr


def _design(y: np.ndarray, p: int, start: int):
    """Regressor matrix [1, y_{t-1}, ..., y_{t-p}] for t = start..T-1."""
    T, k = y.shape
    rows = T - start
    X = np.empty((rows, 1 + k * p))
    X[:, 0] = 1.0
    for j in range(1, p + 1):
        X[:, 1 + (j - 1) * k: 1 + j * k] = y[start - j: T - j]
    return X, y[start:]


def _ols(X: np.ndarray, Y: np.ndarray):
    beta, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < X.shape[1]:
        raise FlowcastError("collinear-data", "singular design matrix")
    resid = Y - X @ beta
    return beta, resid


def var_fit(data, maxlags: int, ic: str = "hqic") -> VarModel:
    """Fit a VAR, selecting the lag order in 1..maxlags by ``ic``."""
    if ic not in _CRITERIA:
        raise FlowcastError("bad-parameter", f"ic must be one of {_CRITERIA}")
    if maxlags < 1:
        raise FlowcastError("bad-parameter", "maxlags must be >= 1")
    y = _as_matrix(data)
    T, k = y.shape
    if T <= maxlags * k + 10:
        raise FlowcastError(
            "insufficient-data", f"need > {maxlags * k + 10} observations, got {T}"
        )

    best_p, best_score = None, math.inf
    for p in range(1, maxlags + 1):
        X, Y = _design(y, p, maxlags)
        _, resid = _ols(X, Y)
        nobs = X.shape[0]
        sigma_mle = (resid.T @ resid) / nobs
        sign, logdet = np.linalg.slogdet(sigma_mle)
        if sign <= 0:
            raise FlowcastError("collinear-data", "singular residual covariance")
        q = k * (1 + k * p)
        if ic == "aic":
            score = logdet + 2.0 * q / nobs
        elif ic == "bic":
            score = logdet + math.log(nobs) * q / nobs
        else:
            score = logdet + 2.0 * math.log(math.log(nobs)) * q / nobs
        if score < best_score:
            best_score, best_p = score, p

    p = best_p
    X, Y = _design(y, p, p)
    beta, resid = _ols(X, Y)
    nobs = X.shape[0]
    dof = nobs - (1 + k * p)
    if dof <= 0:
        raise FlowcastError("insufficient-data", "no residual degrees of freedom")
    sigma = (resid.T @ resid) / dof

    c = beta[0].copy()
    A = np.empty((p, k, k))
    for j in range(1, p + 1):
        A[j - 1] = beta[1 + (j - 1) * k: 1 + j * k].T
    return VarModel(k=k, p=p, c=c, A=A, sigma=sigma, ic_used=ic)


def var_forecast(model: VarModel, history, steps: int) -> np.ndarray:
    """Iterated one-step forecasts, feeding predictions back for multi-step.

    ``history`` supplies at least the last p observations (rows oldest to
    newest, one column per series).
    """
    if steps < 1:
        raise FlowcastError("bad-parameter", "steps must be >= 1")
    h = _as_matrix(history)
    if h.shape[1] != model.k:
        raise FlowcastError("bad-dimension", f"history has {h.shape[1]} series, model has {model.k}")
    if h.shape[0] < model.p:
        raise FlowcastError(
            "insufficient-history", f"need >= {model.p} rows, got {h.shape[0]}"
        )
    window = list(h[-model.p:])
    out = np.empty((steps, model.k))
    for s in range(steps):
        acc = model.c.copy()
        for j in range(1, model.p + 1):
            acc += model.A[j - 1] @ window[-j]
        out[s] = acc
        window.append(acc)
        window.pop(0)
    return out


def one_step_predictions(model: VarModel, data, start: int) -> np.ndarray:
    """One-step-ahead predictions for t = start..T-1 using true lags."""
    y = _as_matrix(data)
    if start < model.p:
        raise FlowcastError("insufficient-history", "start before p observations exist")
    X, _ = _design(y, model.p, start)
    beta = np.empty((1 + model.k * model.p, model.k))
    beta[0] = model.c
    for j in range(1, model.p + 1):
        beta[1 + (j - 1) * model.k: 1 + j * model.k] = model.A[j - 1].T
    return X @ beta


class VarForecaster(Forecaster):
    """Forecaster-contract wrapper around var_fit / var_forecast."""

    kind = "var"

    def __init__(self, maxlags: int = 7, ic: str = "hqic"):
        super().__init__()
        self.maxlags = maxlags
        self.ic = ic
        self.model: VarModel | None = None
        self._train_tail: np.ndarray | None = None

    def fit(self, data) -> "VarForecaster":
        self.model = var_fit(data, self.maxlags, self.ic)
        y = _as_matrix(data)
        self._train_tail = y[-self.model.p:].copy()
        self._fitted = True
        return self

    def predict(self, steps: int, history=None) -> np.ndarray:
        """Forecast ``steps`` ahead from ``history`` (default: training tail)."""
        self._require_fitted()
        h = self._train_tail if history is None else history
        return var_forecast(self.model, h, steps)

    def to_bytes(self) -> bytes:
        self._require_fitted()
        m = self.model
        sections = [
            struct.pack("<II", m.k, m.p),
            m.ic_used.encode("ascii"),
            np.ascontiguousarray(m.c, dtype="<f8").tobytes(),
            np.ascontiguousarray(m.A, dtype="<f8").tobytes(),
            np.ascontiguousarray(m.sigma, dtype="<f8").tobytes(),
        ]
        return pack_model(self.kind, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VarForecaster":
        kind, _, sections = unpack_model(data)
        if kind != cls.kind:
            raise FlowcastError("bad-structure", f"expected var model, got {kind!r}")
        dims, ic_raw, c_raw, a_raw, s_raw = sections
        k, p = struct.unpack("<II", dims)
        model = VarModel(
            k=k,
            p=p,
            c=np.frombuffer(c_raw, dtype="<f8").copy(),
            A=np.frombuffer(a_raw, dtype="<f8").reshape(p, k, k).copy(),
            sigma=np.frombuffer(s_raw, dtype="<f8").reshape(k, k).copy(),
            ic_used=ic_raw.decode("ascii"),
        )
        inst = cls(maxlags=p, ic=model.ic_used)
        inst.model = model
        inst._fitted = True
        return inst
