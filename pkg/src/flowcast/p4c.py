"""Compile bit-level decision trees into prioritized ternary match tables.

A ternary rule matches a key when ``(key AND mask) == value``; unmasked
bits are don't-care. Compilation emits one rule per leaf: the mask marks
the bits tested on the root-to-leaf path and the value carries the branch
outcomes, so the compiled rule set is non-overlapping and exhaustive and
priorities are immaterial (they are still assigned, by leaf order, for
targets that demand unique priorities).

The software table simulator (`lookup`) and the equivalence checker close
the loop: for every key, looking up the compiled table must equal walking
the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FlowcastError
from .models.bdt import BdtLeaf, BdtNode, BitDecisionTree, predict_all
from .rng import make_rng

__all__ = [
    "TernaryRule",
    "TernaryRuleTable",
    "CapacityReport",
    "EquivalenceReport",
    "KeyField",
    "KeyLayout",
    "compile_tree",
    "lookup",
    "lookup_all",
    "check_constraints",
    "verify_equivalence",
    "exact_rule",
    "lpm_rule",
    "write_table",
    "read_table",
]

EXHAUSTIVE_WIDTH_LIMIT = 24


@dataclass(frozen=True)
class TernaryRule:
    """(value, mask, label) with a priority; lower number wins."""

    value: int
    mask: int
    label: int
    priority: int

    def __post_init__(self):
        if self.value & ~self.mask:
            raise FlowcastError("bad-parameter",
                                "don't-care bits must be zero in the value")


@dataclass(frozen=True)
class TernaryRuleTable:
    """Priority-ordered rule list over a fixed-width key."""

    key_width: int
    rules: Tuple[TernaryRule, ...]
    default_label: int

    def __post_init__(self):
        limit = 1 << self.key_width
        prios = [r.priority for r in self.rules]
        if len(set(prios)) != len(prios):
            raise FlowcastError("bad-parameter", "priorities must be unique")
        for r in self.rules:
            if not (0 <= r.value < limit and 0 <= r.mask < limit):
                raise FlowcastError("bad-parameter",
                                    f"rule does not fit width {self.key_width}")
        object.__setattr__(self, "rules",
                           tuple(sorted(self.rules, key=lambda r: r.priority)))


@dataclass(frozen=True)
class CapacityReport:
    entries: int
    entry_bits: int
    total_bits: int
    capacity_bits: int
    fits: bool


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    keys_checked: int
    counterexample: Optional[int] = None
    tree_label: Optional[int] = None
    table_label: Optional[int] = None


def compile_tree(tree: BitDecisionTree) -> TernaryRuleTable:
    """One ternary rule per leaf; rule count equals leaf count.

    Bit 0 of the key is the most significant bit, matching the tree's bit
    indexing.
    """
    width = tree.key_width
    rules = []

    def walk(node, value: int, mask: int):
        if isinstance(node, BdtLeaf):
            rules.append(TernaryRule(value=value, mask=mask, label=node.label,
                                     priority=len(rules)))
            return
        bit = 1 << (width - 1 - node.bit)
        if mask & bit:
            raise FlowcastError("bad-parameter", "path tests a bit twice")
        walk(node.zero, value, mask | bit)
        walk(node.one, value | bit, mask | bit)

    walk(tree.root, 0, 0)
    return TernaryRuleTable(key_width=width, rules=tuple(rules),
                            default_label=rules[0].label)


def lookup(table: TernaryRuleTable, key: int) -> int:
    """Label of the highest-priority matching rule, or the default."""
    if key < 0 or key >> table.key_width:
        raise FlowcastError("bad-dimension",
                            f"key does not fit width {table.key_width}")
    for rule in table.rules:
        if (key & rule.mask) == rule.value:
            return rule.label
    return table.default_label


def lookup_all(table: TernaryRuleTable, keys) -> np.ndarray:
    """Vectorized :func:`lookup` over an array of keys."""
    keys_arr = np.asarray(keys, dtype=np.uint64)
    if keys_arr.size and int(keys_arr.max()) >> table.key_width:
        raise FlowcastError("bad-dimension",
                            f"key does not fit width {table.key_width}")
    out = np.full(len(keys_arr), table.default_label, dtype=np.int64)
    # Lowest priority first so higher-priority assignments overwrite.
    for rule in reversed(table.rules):
        match = (keys_arr & np.uint64(rule.mask)) == np.uint64(rule.value)
        out[match] = rule.label
    return out


def check_constraints(table: TernaryRuleTable, capacity_bits: int,
                      label_bits: int = 8) -> CapacityReport:
    """TCAM budget arithmetic: each entry stores value + mask + label."""
    if capacity_bits <= 0:
        raise FlowcastError("bad-parameter", "capacity_bits must be positive")
    entries = len(table.rules)
    entry_bits = 2 * table.key_width + label_bits
    total_bits = entries * entry_bits
    return CapacityReport(entries=entries, entry_bits=entry_bits,
                          total_bits=total_bits, capacity_bits=capacity_bits,
                          fits=total_bits <= capacity_bits)


def verify_equivalence(
    tree: BitDecisionTree,
    table: TernaryRuleTable,
    exhaustive: bool = True,
    n_samples: int = 10000,
    seed: int = 0,
) -> EquivalenceReport:
    """Check lookup(table, k) == tree prediction for all (or sampled) keys."""
    if tree.key_width != table.key_width:
        raise FlowcastError("bad-dimension", "tree and table widths differ")
    width = tree.key_width
    if exhaustive:
        if width > EXHAUSTIVE_WIDTH_LIMIT:
            raise FlowcastError(
                "bad-parameter",
                f"exhaustive mode needs width <= {EXHAUSTIVE_WIDTH_LIMIT}",
            )
        keys = np.arange(1 << width, dtype=np.uint64)
    else:
        rng = make_rng(seed)
        keys = rng.integers(0, 1 << width, size=n_samples, dtype=np.uint64)

    tree_labels = predict_all(tree, keys)
    table_labels = lookup_all(table, keys)
    mismatch = np.nonzero(tree_labels != table_labels)[0]
    if len(mismatch) == 0:
        return EquivalenceReport(equivalent=True, keys_checked=len(keys))
    first = int(mismatch[0])
    return EquivalenceReport(
        equivalent=False,
        keys_checked=len(keys),
        counterexample=int(keys[first]),
        tree_label=int(tree_labels[first]),
        table_label=int(table_labels[first]),
    )


def exact_rule(value: int, label: int, key_width: int, priority: int = 0) -> TernaryRule:
    """Exact match: full mask."""
    mask = (1 << key_width) - 1
    if value & ~mask:
        raise FlowcastError("bad-parameter", f"value does not fit width {key_width}")
    return TernaryRule(value=value, mask=mask, label=label, priority=priority)


def lpm_rule(prefix: int, prefix_len: int, label: int, key_width: int,
             priority: int = 0) -> TernaryRule:
    """Longest-prefix match: ``prefix_len`` leading ones then zeros.

    ``prefix`` holds the prefix bits left-aligned in the key.
    """
    if not (0 <= prefix_len <= key_width):
        raise FlowcastError("bad-parameter", "prefix_len out of range")
    ones = (1 << prefix_len) - 1
    mask = ones << (key_width - prefix_len)
    if prefix & ~mask:
        raise FlowcastError("bad-parameter", "prefix has bits outside the mask")
    return TernaryRule(value=prefix, mask=mask, label=label, priority=priority)


# ---------------------------------------------------------------------------
# key layout: which fields occupy which bit positions

@dataclass(frozen=True)
class KeyField:
    name: str
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise FlowcastError("bad-parameter", "field width must be >= 1")


@dataclass(frozen=True)
class KeyLayout:
    """Ordered fields concatenated most-significant first into one key.

    The compiler itself is layout-agnostic; the layout only defines how
    feature values are packed into keys.
    """

    fields: Tuple[KeyField, ...]

    @property
    def total_width(self) -> int:
        return sum(f.width for f in self.fields)

    def encode(self, values: Sequence[int]) -> int:
        if len(values) != len(self.fields):
            raise FlowcastError("bad-dimension",
                                f"expected {len(self.fields)} field values")
        key = 0
        for f, v in zip(self.fields, values):
            v = int(v)
            if not (0 <= v < (1 << f.width)):
                raise FlowcastError("bad-parameter",
                                    f"value {v} does not fit field {f.name}")
            key = (key << f.width) | v
        return key

    def decode(self, key: int) -> list:
        out = []
        for f in reversed(self.fields):
            out.append(key & ((1 << f.width) - 1))
            key >>= f.width
        return list(reversed(out))


# ---------------------------------------------------------------------------
# table file format (TERNTBL v1)

def _hex_digits(width: int) -> int:
    return (width + 3) // 4


def write_table(table: TernaryRuleTable, out: IO) -> None:
    """Bit-exact text export, one rule per line, MSB first."""
    out.write(f"TERNTBL v1 width={table.key_width} default={table.default_label}\n")
    digits = _hex_digits(table.key_width)
    for r in table.rules:
        out.write(f"P {r.priority} V {r.value:0{digits}x} "
                  f"M {r.mask:0{digits}x} A {r.label}\n")


def read_table(src: IO) -> TernaryRuleTable:
    header = src.readline().strip()
    parts = header.split()
    if (len(parts) != 4 or parts[0] != "TERNTBL" or parts[1] != "v1"
            or not parts[2].startswith("width=") or not parts[3].startswith("default=")):
        raise FlowcastError("bad-structure", f"bad table header {header!r}")
    width = int(parts[2][6:])
    default = int(parts[3][8:])
    rules = []
    for line in src:
        line = line.strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 8 or toks[0] != "P" or toks[2] != "V" or toks[4] != "M" or toks[6] != "A":
            raise FlowcastError("bad-structure", f"bad rule line {line!r}")
        rules.append(TernaryRule(
            priority=int(toks[1]),
            value=int(toks[3], 16),
            mask=int(toks[5], 16),
            label=int(toks[7]),
        ))
    return TernaryRuleTable(key_width=width, rules=tuple(rules),
                            default_label=default)
