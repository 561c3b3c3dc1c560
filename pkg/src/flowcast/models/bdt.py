"""Bit-level binary decision tree regressor.

Keys are fixed-width bit strings (bit 0 = most significant). Internal
nodes test a single bit; no root-to-leaf path tests the same bit twice,
which is what makes one-rule-per-leaf ternary compilation possible.

Training is greedy top-down variance reduction on the raw targets; leaves
carry the index of the quantile bucket (``n_labels`` uniform-mass buckets
over the training targets) containing the leaf's target median. A bucket
representative (median of the training targets that fell in it) maps
labels back to numeric predictions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import FlowcastError
from ..rng import make_rng
from .base import Forecaster, pack_model, unpack_model

__all__ = [
    "BdtLeaf",
    "BdtNode",
    "BitDecisionTree",
    "bdt_fit",
    "bdt_predict",
    "predict_all",
    "tree_to_text",
    "tree_from_text",
    "random_tree",
    "BdtForecaster",
]


@dataclass(frozen=True)
class BdtLeaf:
    label: int


@dataclass(frozen=True)
class BdtNode:
    bit: int
    zero: Union["BdtNode", BdtLeaf]
    one: Union["BdtNode", BdtLeaf]


@dataclass(frozen=True)
class BitDecisionTree:
    key_width: int
    root: Union[BdtNode, BdtLeaf]
    max_depth: int
    min_leaf: int
    n_labels: int
    bucket_edges: Optional[np.ndarray] = None
    representatives: Optional[np.ndarray] = None

    def depth(self) -> int:
        def walk(node):
            if isinstance(node, BdtLeaf):
                return 0
            return 1 + max(walk(node.zero), walk(node.one))
        return walk(self.root)

    def leaf_count(self) -> int:
        def walk(node):
            if isinstance(node, BdtLeaf):
                return 1
            return walk(node.zero) + walk(node.one)
        return walk(self.root)


def _bit_of(keys: np.ndarray, bit: int, width: int) -> np.ndarray:
    return (keys >> np.uint64(width - 1 - bit)) & np.uint64(1)


def bdt_fit(
    keys,
    targets,
    max_depth: int,
    min_leaf: int,
    n_labels: int,
    key_width: int,
) -> BitDecisionTree:
    """Greedily grow a tree splitting on single bit positions.

    At each node the candidate splits are the bits not yet tested on the
    path whose children would both hold at least ``min_leaf`` rows; the bit
    with the largest variance reduction wins (ties go to the lowest bit
    index). Growth stops at ``max_depth``, at ``min_leaf``, or when the
    node's targets have zero variance.
    """
    keys_arr = np.asarray(keys, dtype=np.uint64)
    y = np.asarray(targets, dtype=float)
    if keys_arr.size == 0:
        raise FlowcastError("empty-input", "no training keys")
    if keys_arr.shape != y.shape or keys_arr.ndim != 1:
        raise FlowcastError("bad-dimension", "keys and targets must be aligned 1-D")
    if key_width < 1 or key_width > 63:
        raise FlowcastError("bad-parameter", "key_width must be in 1..63")
    if np.any(keys_arr >> np.uint64(key_width)):
        raise FlowcastError("bad-parameter", f"key exceeds width {key_width}")
    if n_labels < 2:
        raise FlowcastError("bad-parameter", "n_labels must be >= 2")
    if min_leaf < 1:
        raise FlowcastError("bad-parameter", "min_leaf must be >= 1")
    if max_depth < 0:
        raise FlowcastError("bad-parameter", "max_depth must be >= 0")

    edges = np.quantile(y, [i / n_labels for i in range(1, n_labels)])

    def to_label(value: float) -> int:
        return int(np.searchsorted(edges, value, side="right"))

    reps = np.empty(n_labels)
    global_median = float(np.median(y))
    all_labels = np.searchsorted(edges, y, side="right")
    for b in range(n_labels):
        mask = all_labels == b
        reps[b] = float(np.median(y[mask])) if mask.any() else global_median

    bit_cache = {b: _bit_of(keys_arr, b, key_width).astype(bool) for b in range(key_width)}

    def grow(idx: np.ndarray, depth: int, used: frozenset):
        sub = y[idx]
        if depth >= max_depth or np.var(sub) == 0.0:
            return BdtLeaf(label=to_label(float(np.median(sub))))
        best_bit, best_score = -1, -np.inf
        for b in range(key_width):
            if b in used:
                continue
            ones = bit_cache[b][idx]
            n1 = int(ones.sum())
            n0 = len(idx) - n1
            if n0 < min_leaf or n1 < min_leaf:
                continue
            score = -(n0 * np.var(sub[~ones]) + n1 * np.var(sub[ones]))
            if score > best_score:
                best_score, best_bit = score, b
        if best_bit < 0:
            return BdtLeaf(label=to_label(float(np.median(sub))))
        ones = bit_cache[best_bit][idx]
        child_used = used | {best_bit}
        return BdtNode(
            bit=best_bit,
            zero=grow(idx[~ones], depth + 1, child_used),
            one=grow(idx[ones], depth + 1, child_used),
        )

    root = grow(np.arange(len(keys_arr)), 0, frozenset())
    return BitDecisionTree(
        key_width=key_width, root=root, max_depth=max_depth, min_leaf=min_leaf,
        n_labels=n_labels, bucket_edges=edges, representatives=reps,
    )


def bdt_predict(tree: BitDecisionTree, key: int) -> int:
    """Root-to-leaf descent on the tested bits; returns the leaf label."""
    if key < 0 or key >> tree.key_width:
        raise FlowcastError("bad-dimension", f"key does not fit width {tree.key_width}")
    node = tree.root
    w = tree.key_width
    while isinstance(node, BdtNode):
        node = node.one if (key >> (w - 1 - node.bit)) & 1 else node.zero
    return node.label


def predict_all(tree: BitDecisionTree, keys: np.ndarray) -> np.ndarray:
    """Vectorized :func:`bdt_predict` over an array of keys."""
    keys_arr = np.asarray(keys, dtype=np.uint64)
    if keys_arr.size and int(keys_arr.max()) >> tree.key_width:
        raise FlowcastError("bad-dimension", f"key does not fit width {tree.key_width}")
    out = np.empty(len(keys_arr), dtype=np.int64)

    def walk(node, idx):
        if isinstance(node, BdtLeaf):
            out[idx] = node.label
            return
        ones = _bit_of(keys_arr[idx], node.bit, tree.key_width).astype(bool)
        walk(node.zero, idx[~ones])
        walk(node.one, idx[ones])

    walk(tree.root, np.arange(len(keys_arr)))
    return out


def tree_to_text(tree: BitDecisionTree) -> str:
    """One-node-per-line text form: ``N <id> bit=<b> L=<id> R=<id>`` for
    internal nodes, ``L <id> label=<k>`` for leaves; ids are preorder."""
    lines = [f"BDT v1 width={tree.key_width}"]
    counter = [0]

    def number(node):
        nid = counter[0]
        counter[0] += 1
        if isinstance(node, BdtLeaf):
            lines.append(f"L {nid} label={node.label}")
            return nid
        slot = len(lines)
        lines.append("")
        left = number(node.zero)
        right = number(node.one)
        lines[slot] = f"N {nid} bit={node.bit} L={left} R={right}"
        return nid

    number(tree.root)
    return "\n".join(lines) + "\n"


def tree_from_text(text: str) -> BitDecisionTree:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("BDT v1 width="):
        raise FlowcastError("bad-structure", "missing BDT header line")
    width = int(lines[0].split("width=")[1])

    nodes: dict = {}
    links: dict = {}
    for line in lines[1:]:
        parts = line.split()
        try:
            if parts[0] == "L":
                nid = int(parts[1])
                nodes[nid] = BdtLeaf(label=int(parts[2].split("=")[1]))
            elif parts[0] == "N":
                nid = int(parts[1])
                bit = int(parts[2].split("=")[1])
                links[nid] = (bit,
                              int(parts[3].split("=")[1]),
                              int(parts[4].split("=")[1]))
            else:
                raise ValueError
        except (IndexError, ValueError):
            raise FlowcastError("bad-structure", f"bad tree line {line!r}") from None

    def build(nid: int):
        if nid in nodes:
            return nodes[nid]
        if nid not in links:
            raise FlowcastError("bad-structure", f"dangling node id {nid}")
        bit, left, right = links[nid]
        return BdtNode(bit=bit, zero=build(left), one=build(right))

    root = build(0)
    # max_depth/n_labels are training knobs, not structure; recover loosely.
    labels = _collect_labels(root)
    probe = BitDecisionTree(key_width=width, root=root, max_depth=0,
                            min_leaf=1, n_labels=max(labels) + 1)
    return BitDecisionTree(
        key_width=width, root=root, max_depth=probe.depth(), min_leaf=1,
        n_labels=max(labels) + 1, bucket_edges=None, representatives=None,
    )


def _collect_labels(node) -> list:
    if isinstance(node, BdtLeaf):
        return [node.label]
    return _collect_labels(node.zero) + _collect_labels(node.one)


def random_tree(
    key_width: int,
    max_depth: int,
    n_labels: int,
    seed: int,
    branch_prob: float = 0.75,
) -> BitDecisionTree:
    """Seeded random tree structure (for verification drivers and demos).

    Paths never repeat a bit; depth never exceeds ``max_depth``; leaf
    labels are uniform over 0..n_labels-1.
    """
    if max_depth > key_width:
        raise FlowcastError("bad-parameter", "max_depth cannot exceed key_width")
    rng = make_rng(seed)

    def gen(depth: int, avail: list):
        if depth >= max_depth or not avail or rng.random() >= branch_prob:
            return BdtLeaf(label=int(rng.integers(0, n_labels)))
        bit = avail[int(rng.integers(0, len(avail)))]
        rest = [b for b in avail if b != bit]
        return BdtNode(bit=bit, zero=gen(depth + 1, rest), one=gen(depth + 1, rest))

    root = gen(0, list(range(key_width)))
    return BitDecisionTree(key_width=key_width, root=root, max_depth=max_depth,
                           min_leaf=1, n_labels=n_labels)


def _serialize_node(node, out: list):
    if isinstance(node, BdtLeaf):
        out.append(b"\x00" + struct.pack("<I", node.label))
    else:
        out.append(b"\x01" + struct.pack("<H", node.bit))
        _serialize_node(node.zero, out)
        _serialize_node(node.one, out)


def _deserialize_node(blob: bytes, pos: int):
    marker = blob[pos]
    pos += 1
    if marker == 0:
        (label,) = struct.unpack_from("<I", blob, pos)
        return BdtLeaf(label=label), pos + 4
    (bit,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    zero, pos = _deserialize_node(blob, pos)
    one, pos = _deserialize_node(blob, pos)
    return BdtNode(bit=bit, zero=zero, one=one), pos


class BdtForecaster(Forecaster):
    """Forecaster-contract wrapper; predicts labels, decodes to values."""

    kind = "bdt"

    def __init__(self, max_depth: int = 8, min_leaf: int = 1,
                 n_labels: int = 16, key_width: int = 16):
        super().__init__()
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_labels = n_labels
        self.key_width = key_width
        self.tree: BitDecisionTree | None = None

    def fit(self, keys, targets) -> "BdtForecaster":
        self.tree = bdt_fit(keys, targets, self.max_depth, self.min_leaf,
                            self.n_labels, self.key_width)
        self._fitted = True
        return self

    def predict(self, key: int) -> int:
        self._require_fitted()
        return bdt_predict(self.tree, key)

    def predict_value(self, key: int) -> float:
        """Numeric prediction: the representative of the predicted bucket."""
        self._require_fitted()
        if self.tree.representatives is None:
            raise FlowcastError("unfitted", "tree has no bucket representatives")
        return float(self.tree.representatives[self.predict(key)])

    def to_bytes(self) -> bytes:
        self._require_fitted()
        t = self.tree
        blob: list = []
        _serialize_node(t.root, blob)
        edges = t.bucket_edges if t.bucket_edges is not None else np.empty(0)
        reps = t.representatives if t.representatives is not None else np.empty(0)
        sections = [
            struct.pack("<IIII", t.key_width, t.max_depth, t.min_leaf, t.n_labels),
            b"".join(blob),
            np.ascontiguousarray(edges, dtype="<f8").tobytes(),
            np.ascontiguousarray(reps, dtype="<f8").tobytes(),
        ]
        return pack_model(self.kind, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BdtForecaster":
        kind, _, sections = unpack_model(data)
        if kind != cls.kind:
            raise FlowcastError("bad-structure", f"expected bdt model, got {kind!r}")
        header, blob, edges_raw, reps_raw = sections
        key_width, max_depth, min_leaf, n_labels = struct.unpack("<IIII", header)
        root, _ = _deserialize_node(blob, 0)
        edges = np.frombuffer(edges_raw, dtype="<f8").copy()
        reps = np.frombuffer(reps_raw, dtype="<f8").copy()
        inst = cls(max_depth=max_depth, min_leaf=min_leaf,
                   n_labels=n_labels, key_width=key_width)
        inst.tree = BitDecisionTree(
            key_width=key_width, root=root, max_depth=max_depth, min_leaf=min_leaf,
            n_labels=n_labels,
            bucket_edges=edges if len(edges) else None,
            representatives=reps if len(reps) else None,
        )
        inst._fitted = True
        return inst
