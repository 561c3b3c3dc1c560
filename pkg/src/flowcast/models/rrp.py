"""Recursive random projection regression.

Rows are split recursively: pick a random row, walk to the farthest row
from it (east pivot), then the farthest row from that (west pivot), project
every row onto the east-west axis by the cosine-rule distance
(a^2 + c^2 - b^2) / 2c, sort by projection, and split at the midpoint.
Leaves hold the median of the target column; prediction walks a query down
the tree by the nearer pivot and reports the leaf median.

Distances are accumulated scalar-by-scalar in index order so that a fixed
seed yields bit-identical trees everywhere.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import FlowcastError
from ..rng import make_rng
from .base import Forecaster, pack_model, unpack_model

__all__ = ["RrpLeaf", "RrpNode", "RrpTree", "rrp_fit", "rrp_predict", "RrpForecaster"]


@dataclass(frozen=True)
class RrpLeaf:
    median: float


@dataclass(frozen=True)
class RrpNode:
    east_pivot: np.ndarray
    west_pivot: np.ndarray
    east: Union["RrpNode", RrpLeaf]
    west: Union["RrpNode", RrpLeaf]


@dataclass(frozen=True)
class RrpTree:
    root: Union[RrpNode, RrpLeaf]
    n_cols: int
    stop_depth: int
    target_index: int
    seed: int


def _distance(p1, p2) -> float:
    s = 0.0
    for a, b in zip(p1, p2):
        d = a - b
        s += d * d
    return math.sqrt(s)


def _find_farthest(pivot, candidates):
    max_distance = 0.0
    farthest = pivot
    for candidate in candidates:
        d = _distance(pivot, candidate)
        if d > max_distance:
            max_distance = d
            farthest = candidate
    return farthest


def _split(candidates: np.ndarray, rng):
    pivot = candidates[int(rng.integers(0, len(candidates)))]
    east_pivot = _find_farthest(pivot, candidates)
    west_pivot = _find_farthest(east_pivot, candidates)
    c = _distance(east_pivot, west_pivot)

    mid = len(candidates) // 2
    if c == 0.0:
        return east_pivot, west_pivot, candidates[:mid], candidates[mid:]

    proj = np.empty(len(candidates))
    for i, candidate in enumerate(candidates):
        a = _distance(candidate, west_pivot)
        b = _distance(candidate, east_pivot)
        proj[i] = (a * a + c * c - b * b) / (2 * c)
    order = np.argsort(proj, kind="stable")
    ordered = candidates[order]
    return east_pivot, west_pivot, ordered[:mid], ordered[mid:]


def _build(candidates: np.ndarray, stop: int, target_index: int, rng):
    if len(candidates) <= stop:
        return RrpLeaf(median=float(np.median(candidates[:, target_index])))
    east_pivot, west_pivot, east_items, west_items = _split(candidates, rng)
    return RrpNode(
        east_pivot=east_pivot.copy(),
        west_pivot=west_pivot.copy(),
        east=_build(east_items, stop, target_index, rng),
        west=_build(west_items, stop, target_index, rng),
    )


def rrp_fit(data, stop_depth: int, target_index: int, seed: int) -> RrpTree:
    """Build the projection tree over ``data`` rows (target column included).

    ``stop_depth`` is the leaf-size threshold: recursion stops once a node
    holds that many rows or fewer.
    """
    rows = np.asarray(data, dtype=float)
    if rows.ndim != 2 or rows.size == 0:
        raise FlowcastError("empty-input", "need a non-empty row matrix")
    if not (0 <= target_index < rows.shape[1]):
        raise FlowcastError("bad-dimension", f"target index {target_index} out of range")
    if stop_depth < 1:
        raise FlowcastError("bad-parameter", "stop_depth must be >= 1")
    rng = make_rng(seed)
    root = _build(rows, stop_depth, target_index, rng)
    return RrpTree(root=root, n_cols=rows.shape[1], stop_depth=stop_depth,
                   target_index=target_index, seed=seed)


def rrp_predict(tree: RrpTree, row) -> float:
    """Walk ``row`` down to its leaf by the nearer pivot; return the median."""
    point = np.asarray(row, dtype=float).ravel()
    if len(point) != tree.n_cols:
        raise FlowcastError(
            "bad-dimension", f"row has {len(point)} columns, tree expects {tree.n_cols}"
        )
    node = tree.root
    while isinstance(node, RrpNode):
        if _distance(point, node.east_pivot) < _distance(point, node.west_pivot):
            node = node.east
        else:
            node = node.west
    return node.median


def _serialize_node(node, out: list):
    if isinstance(node, RrpLeaf):
        out.append(b"\x00" + struct.pack("<d", node.median))
    else:
        out.append(b"\x01"
                   + np.ascontiguousarray(node.east_pivot, dtype="<f8").tobytes()
                   + np.ascontiguousarray(node.west_pivot, dtype="<f8").tobytes())
        _serialize_node(node.east, out)
        _serialize_node(node.west, out)


def _deserialize_node(blob: bytes, pos: int, n_cols: int):
    marker = blob[pos]
    pos += 1
    if marker == 0:
        (median,) = struct.unpack_from("<d", blob, pos)
        return RrpLeaf(median=median), pos + 8
    span = 8 * n_cols
    east_pivot = np.frombuffer(blob, dtype="<f8", count=n_cols, offset=pos).copy()
    west_pivot = np.frombuffer(blob, dtype="<f8", count=n_cols, offset=pos + span).copy()
    pos += 2 * span
    east, pos = _deserialize_node(blob, pos, n_cols)
    west, pos = _deserialize_node(blob, pos, n_cols)
    return RrpNode(east_pivot, west_pivot, east, west), pos


class RrpForecaster(Forecaster):
    """Forecaster-contract wrapper around rrp_fit / rrp_predict."""

    kind = "rrp"

    def __init__(self, stop_depth: int = 4, target_index: int = -1, seed: int = 0):
        super().__init__()
        self.stop_depth = stop_depth
        self.target_index = target_index
        self.seed = seed
        self.tree: RrpTree | None = None

    def fit(self, data) -> "RrpForecaster":
        rows = np.asarray(data, dtype=float)
        target = self.target_index
        if target < 0:
            target += rows.shape[1]
        self.tree = rrp_fit(rows, self.stop_depth, target, self.seed)
        self._fitted = True
        return self

    def predict(self, row) -> float:
        self._require_fitted()
        return rrp_predict(self.tree, row)

    def to_bytes(self) -> bytes:
        self._require_fitted()
        t = self.tree
        blob: list = []
        _serialize_node(t.root, blob)
        sections = [
            struct.pack("<IIIq", t.n_cols, t.stop_depth, t.target_index, t.seed),
            b"".join(blob),
        ]
        return pack_model(self.kind, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RrpForecaster":
        kind, _, sections = unpack_model(data)
        if kind != cls.kind:
            raise FlowcastError("bad-structure", f"expected rrp model, got {kind!r}")
        header, blob = sections
        n_cols, stop_depth, target_index, seed = struct.unpack("<IIIq", header)
        root, _ = _deserialize_node(blob, 0, n_cols)
        inst = cls(stop_depth=stop_depth, target_index=target_index, seed=seed)
        inst.tree = RrpTree(root=root, n_cols=n_cols, stop_depth=stop_depth,
                            target_index=target_index, seed=seed)
        inst._fitted = True
        return inst
