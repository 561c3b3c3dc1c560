"""From a trained bit-level tree to a deployable ternary match table.

Every leaf becomes one (value, mask, label) rule: the mask marks the bits
the root-to-leaf path tested, the value carries the branch outcomes. The
software simulator then proves, key by key, that the table answers exactly
like the tree -- and shows what a corrupted entry looks like.
"""

import io

import numpy as np

from flowcast import p4c
from flowcast.models.bdt import bdt_fit, bdt_predict, tree_to_text
from flowcast.rng import make_rng

# --- train a small tree: predict load bucket from two 6-bit lag features ----
rng = make_rng(505)
lag1 = rng.integers(0, 64, 400)
lag2 = np.clip(lag1 + rng.integers(-8, 9, 400), 0, 63)
keys = (lag1.astype(np.uint64) << np.uint64(6)) | lag2.astype(np.uint64)
targets = (lag1 * 2 + lag2).astype(float) + 5 * rng.standard_normal(400)

tree = bdt_fit(keys, targets, max_depth=6, min_leaf=4, n_labels=8, key_width=12)
print(f"trained tree: depth={tree.depth()} leaves={tree.leaf_count()} "
      f"over 12-bit keys (two 6-bit lag fields)")
print("\ntext form consumed by the compiler (first lines):")
print("\n".join(tree_to_text(tree).splitlines()[:5]))

# --- compile ---------------------------------------------------------------
table = p4c.compile_tree(tree)
print(f"\ncompiled {len(table.rules)} rules (= leaf count); first three:")
buf = io.StringIO()
p4c.write_table(table, buf)
for line in buf.getvalue().splitlines()[:4]:
    print(" ", line)

# --- verify ------------------------------------------------------------------
verdict = p4c.verify_equivalence(tree, table, exhaustive=True)
print(f"\nexhaustive equivalence over all {verdict.keys_checked} keys: "
      f"{verdict.equivalent}")

one_key = int(keys[0])
print(f"spot check key {one_key:#05x}: tree={bdt_predict(tree, one_key)} "
      f"table={p4c.lookup(table, one_key)}")

# --- capacity ----------------------------------------------------------------
cap = p4c.check_constraints(table, capacity_bits=8192, label_bits=8)
print(f"\nTCAM budget: {cap.entries} entries x {cap.entry_bits} bits = "
      f"{cap.total_bits} bits; fits in 8192? {cap.fits}")

# --- what a bad install looks like -------------------------------------------
victim = next(i for i, r in enumerate(table.rules) if r.mask)
bad_rule = p4c.TernaryRule(value=table.rules[victim].value,
                           mask=table.rules[victim].mask,
                           label=(table.rules[victim].label + 1) % 8,
                           priority=table.rules[victim].priority)
rules = list(table.rules)
rules[victim] = bad_rule
corrupted = p4c.TernaryRuleTable(key_width=12, rules=tuple(rules),
                                 default_label=table.default_label)
bad = p4c.verify_equivalence(tree, corrupted, exhaustive=True)
print(f"\nafter corrupting one rule's label: equivalent={bad.equivalent}, "
      f"counterexample key={bad.counterexample:#05x} "
      f"(tree says {bad.tree_label}, table says {bad.table_label})")
