"""Forecast accuracy metrics and nonparametric model ranking.

``point_metrics`` computes six error measures with pinned zero-handling
rules (traces contain zero-count bins, so the rules must be explicit and
the skip counts visible). ``scott_knott`` clusters treatments into rank
groups, splitting where the expected mean deviation is largest and only
when Cliff's delta says the halves differ by more than a small effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import FlowcastError

__all__ = [
    "MetricReport",
    "RankGroup",
    "point_metrics",
    "cliffs_delta",
    "scott_knott",
    "model_size",
    "SMALL_EFFECT",
]

# |delta| below this is a negligible ("small") effect: Hess & Kromrey (2004).
SMALL_EFFECT = 0.147


@dataclass(frozen=True)
class MetricReport:
    """Point-forecast error summary; percentage metrics are in percent.

    ``mape_skipped`` counts zero-actual terms excluded from MAPE/MDAPE;
    ``gmrae_skipped`` counts zero-denominator terms excluded from GMRAE.
    """

    mae: float
    rmse: float
    mape: float
    smape: float
    mdape: float
    gmrae: float
    n: int
    mape_skipped: int = 0
    gmrae_skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "mae": self.mae, "rmse": self.rmse, "mape": self.mape,
            "smape": self.smape, "mdape": self.mdape, "gmrae": self.gmrae,
            "n": self.n, "mape_skipped": self.mape_skipped,
            "gmrae_skipped": self.gmrae_skipped,
        }


def point_metrics(actual, predicted, weights=None) -> MetricReport:
    """Compute MAE/RMSE/MAPE/SMAPE/MDAPE/GMRAE for aligned value arrays.

    * MAE is uniformly weighted unless ``weights`` (summing to 1) is given.
    * MAPE and MDAPE skip zero-actual terms; the skip count is reported.
    * SMAPE terms with a zero denominator (both values 0) count as 0.
    * GMRAE compares against the naive previous-actual forecast, skipping
      terms whose naive error is zero.
    """
    y = np.asarray(actual, dtype=float)
    yhat = np.asarray(predicted, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise FlowcastError("bad-dimension", "actual/predicted must be aligned 1-D")
    n = len(y)
    if n == 0:
        raise FlowcastError("empty-input", "no observations")

    err = np.abs(yhat - y)
    if weights is None:
        mae = float(np.mean(err))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise FlowcastError("bad-dimension", "weights must align with actuals")
        mae = float(np.sum(w * err))
    rmse = float(np.sqrt(np.mean((yhat - y) ** 2)))

    nonzero = y != 0
    pct = 100.0 * err[nonzero] / np.abs(y[nonzero])
    mape_skipped = int(n - nonzero.sum())
    mape = float(np.mean(pct)) if len(pct) else 0.0
    mdape = float(np.median(pct)) if len(pct) else 0.0

    denom = np.abs(y) + np.abs(yhat)
    smape_terms = np.zeros(n)
    live = denom != 0
    smape_terms[live] = 2.0 * err[live] / denom[live]
    smape = float(100.0 * np.mean(smape_terms))

    gmrae, gmrae_skipped = _gmrae(y, yhat)

    return MetricReport(mae=mae, rmse=rmse, mape=mape, smape=smape,
                        mdape=mdape, gmrae=gmrae, n=n,
                        mape_skipped=mape_skipped, gmrae_skipped=gmrae_skipped)


def _gmrae(y: np.ndarray, yhat: np.ndarray):
    if len(y) < 2:
        return 0.0, 0
    naive_err = np.abs(y[:-1] - y[1:])
    model_err = np.abs(yhat[1:] - y[1:])
    live = naive_err != 0
    skipped = int(len(naive_err) - live.sum())
    ratios = model_err[live] / naive_err[live]
    if len(ratios) == 0:
        return 0.0, skipped
    if np.any(ratios == 0.0):
        return 0.0, skipped
    return float(np.exp(np.mean(np.log(ratios)))), skipped


def cliffs_delta(l1: Sequence[float], l2: Sequence[float]) -> float:
    """(#(x > y) - #(x < y)) / (|l1| * |l2|) over all cross pairs."""
    a = np.asarray(l1, dtype=float)
    b = np.asarray(l2, dtype=float)
    if a.size == 0 or b.size == 0:
        raise FlowcastError("empty-input", "both lists must be non-empty")
    gt = int((a[:, None] > b[None, :]).sum())
    lt = int((a[:, None] < b[None, :]).sum())
    return (gt - lt) / (a.size * b.size)


@dataclass(frozen=True)
class RankGroup:
    """Treatments that are statistically indistinguishable; rank 1 is best
    (lowest objective)."""

    rank: int
    members: tuple
    samples: dict


def scott_knott(treatments: Mapping[str, Sequence[float]]) -> list:
    """Cluster treatments into rank groups over their objective samples.

    Treatments are sorted by sample mean; the recursion picks the split
    maximizing the expected mean deviation

        E = (|l1| * |mean(l1) - mean(l)| + |l2| * |mean(l2) - mean(l)|) / |l|

    over pooled samples and keeps it only when |Cliff's delta| between the
    pooled halves reaches :data:`SMALL_EFFECT`; otherwise the block stays
    one group.
    """
    items = []
    for name, samples in treatments.items():
        arr = np.asarray(samples, dtype=float)
        if arr.size < 2:
            raise FlowcastError("insufficient-data",
                                f"treatment {name!r} needs >= 2 samples")
        items.append((name, arr))
    if not items:
        raise FlowcastError("empty-input", "no treatments")

    # Ascending mean, name as the deterministic tie-break.
    items.sort(key=lambda kv: (float(np.mean(kv[1])), kv[0]))

    blocks: list = []

    def recurse(block):
        if len(block) == 1:
            blocks.append(block)
            return
        pooled = np.concatenate([s for _, s in block])
        pooled_mean = float(np.mean(pooled))
        best_i, best_e = None, -math.inf
        for i in range(1, len(block)):
            l1 = np.concatenate([s for _, s in block[:i]])
            l2 = np.concatenate([s for _, s in block[i:]])
            e = (len(l1) * abs(float(np.mean(l1)) - pooled_mean)
                 + len(l2) * abs(float(np.mean(l2)) - pooled_mean)) / len(pooled)
            if e > best_e:
                best_e, best_i = e, i
        l1 = np.concatenate([s for _, s in block[:best_i]])
        l2 = np.concatenate([s for _, s in block[best_i:]])
        if abs(cliffs_delta(l1, l2)) >= SMALL_EFFECT:
            recurse(block[:best_i])
            recurse(block[best_i:])
        else:
            blocks.append(block)

    recurse(items)

    groups = []
    for rank, block in enumerate(blocks, start=1):
        groups.append(RankGroup(
            rank=rank,
            members=tuple(name for name, _ in block),
            samples={name: s.tolist() for name, s in block},
        ))
    return groups


def model_size(model) -> int:
    """Measured size of the canonical serialization, in bytes."""
    if hasattr(model, "size_bytes"):
        return model.size_bytes()
    if hasattr(model, "to_bytes"):
        return len(model.to_bytes())
    raise FlowcastError("bad-parameter", "object has no canonical serialization")
