"""Forecaster-contract wrapper around damped Holt-Winters smoothing."""

from __future__ import annotations

import struct

import numpy as np

from ..analysis import HwResult, SmoothingParams, smooth_hw
from ..errors import FlowcastError
from .base import Forecaster, pack_model, unpack_model

__all__ = ["HwForecaster"]


class HwForecaster(Forecaster):
    kind = "hw"

    def __init__(self, params: SmoothingParams, seasonal: bool = True):
        super().__init__()
        self.params = params
        self.seasonal = seasonal
        self.result: HwResult | None = None
        self._n = 0

    def fit(self, series) -> "HwForecaster":
        x = np.asarray(series, dtype=float)
        self.result = smooth_hw(x, self.params, seasonal=self.seasonal)
        self._n = len(x)
        self._fitted = True
        return self

    def predict(self, steps: int | None = None) -> np.ndarray:
        """Forecast from the end-of-series state (default horizon: params.m)."""
        self._require_fitted()
        p = self.params
        if steps is None:
            steps = p.m
        level = self.result.level[-1]
        trend = self.result.trend[-1]
        seas = self.result.seasonal
        phi_sum = np.cumsum(p.phi ** np.arange(1, steps + 1))
        out = np.empty(steps)
        for h in range(1, steps + 1):
            out[h - 1] = level + trend * phi_sum[h - 1] + seas[(self._n - 1 + h) % p.L]
        return out

    def to_bytes(self) -> bytes:
        self._require_fitted()
        p = self.params
        state = np.concatenate(
            [[self.result.level[-1], self.result.trend[-1]], self.result.seasonal]
        )
        sections = [
            struct.pack("<ddddIIIB", p.alpha, p.beta, p.gamma, p.phi,
                        p.L, p.m, self._n, 1 if self.seasonal else 0),
            np.ascontiguousarray(state, dtype="<f8").tobytes(),
        ]
        return pack_model(self.kind, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> "HwForecaster":
        kind, _, sections = unpack_model(data)
        if kind != cls.kind:
            raise FlowcastError("bad-structure", f"expected hw model, got {kind!r}")
        header, state_raw = sections
        alpha, beta, gamma, phi, L, m, n, seasonal_flag = struct.unpack("<ddddIIIB", header)
        params = SmoothingParams(alpha=alpha, beta=beta, gamma=gamma,
                                 L=L, m=m, phi=phi)
        state = np.frombuffer(state_raw, dtype="<f8").copy()
        inst = cls(params, seasonal=bool(seasonal_flag))
        inst.result = HwResult(
            level=state[:1], trend=state[1:2], seasonal=state[2:],
            fitted=np.empty(0), forecast=np.empty(0),
        )
        inst._n = n
        inst._fitted = True
        return inst
