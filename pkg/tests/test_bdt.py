"""Bit-level decision tree: training, prediction, text format."""

import numpy as np
import pytest

from flowcast.errors import FlowcastError
from flowcast.models.bdt import (
    BdtForecaster,
    BdtLeaf,
    BdtNode,
    BitDecisionTree,
    bdt_fit,
    bdt_predict,
    predict_all,
    random_tree,
    tree_from_text,
    tree_to_text,
)
from flowcast.rng import make_rng


def xor_targets(width=4, a=1, b=3):
    keys = list(range(1 << width))
    return keys, [float(((k >> (width - 1 - a)) & 1) ^ ((k >> (width - 1 - b)) & 1))
                  for k in keys]


class TestBdtFit:
    def test_constant_targets_single_leaf(self):
        tree = bdt_fit([0, 1, 2, 3], [5.0] * 4, max_depth=4, min_leaf=1,
                       n_labels=4, key_width=2)
        assert tree.depth() == 0
        assert tree.leaf_count() == 1

    def test_single_bit_perfect_split(self):
        tree = bdt_fit([0, 1], [10.0, 20.0], max_depth=1, min_leaf=1,
                       n_labels=2, key_width=1)
        assert tree.depth() == 1
        assert bdt_predict(tree, 0) != bdt_predict(tree, 1)

    def test_xor_exact_on_all_keys(self):
        keys, targets = xor_targets()
        tree = bdt_fit(keys, targets, max_depth=4, min_leaf=1, n_labels=2,
                       key_width=4)
        want = [0 if t == 0.0 else 1 for t in targets]
        got = [bdt_predict(tree, k) for k in keys]
        assert got == want

    def test_training_error_nonincreasing_in_depth(self):
        rng = make_rng(31)
        keys = rng.integers(0, 1 << 8, 300)
        targets = rng.standard_normal(300) * 10 + (keys >> 4).astype(float)
        edges_err = []
        for depth in range(0, 9):
            tree = bdt_fit(keys, targets, max_depth=depth, min_leaf=1,
                           n_labels=8, key_width=8)
            labels = predict_all(tree, keys)
            target_labels = np.searchsorted(tree.bucket_edges, targets, side="right")
            edges_err.append(float(np.mean(np.abs(labels - target_labels))))
        for shallow, deep in zip(edges_err, edges_err[1:]):
            assert deep <= shallow + 1e-12

    def test_min_leaf_respected(self):
        rng = make_rng(32)
        keys = rng.integers(0, 1 << 6, 100)
        targets = rng.standard_normal(100)
        tree = bdt_fit(keys, targets, max_depth=6, min_leaf=10, n_labels=4,
                       key_width=6)

        def leaf_sizes(node, idx):
            if isinstance(node, BdtLeaf):
                return [len(idx)]
            bit = np.array([(int(k) >> (6 - 1 - node.bit)) & 1 for k in keys[idx]],
                           dtype=bool)
            return leaf_sizes(node.zero, idx[~bit]) + leaf_sizes(node.one, idx[bit])

        sizes = leaf_sizes(tree.root, np.arange(len(keys)))
        assert min(sizes) >= 10

    def test_path_never_reuses_a_bit(self):
        tree = bdt_fit(*xor_targets(), max_depth=4, min_leaf=1, n_labels=2,
                       key_width=4)

        def walk(node, used):
            if isinstance(node, BdtLeaf):
                return
            assert node.bit not in used
            walk(node.zero, used | {node.bit})
            walk(node.one, used | {node.bit})

        walk(tree.root, set())

    def test_empty_input(self):
        with pytest.raises(FlowcastError) as err:
            bdt_fit([], [], max_depth=2, min_leaf=1, n_labels=2, key_width=4)
        assert err.value.code == "empty-input"

    def test_key_exceeding_width(self):
        with pytest.raises(FlowcastError) as err:
            bdt_fit([9], [1.0], max_depth=2, min_leaf=1, n_labels=2, key_width=3)
        assert err.value.code == "bad-parameter"


class TestBdtPredict:
    def test_depth_zero_same_label_everywhere(self):
        tree = BitDecisionTree(key_width=4, root=BdtLeaf(3), max_depth=0,
                               min_leaf=1, n_labels=4)
        assert {bdt_predict(tree, k) for k in range(16)} == {3}

    def test_depth_one_msb(self):
        tree = BitDecisionTree(
            key_width=4, root=BdtNode(bit=0, zero=BdtLeaf(1), one=BdtLeaf(2)),
            max_depth=1, min_leaf=1, n_labels=3)
        assert bdt_predict(tree, 0b1000) == 2
        assert bdt_predict(tree, 0b0111) == 1

    def test_width_mismatch(self):
        tree = BitDecisionTree(key_width=4, root=BdtLeaf(0), max_depth=0,
                               min_leaf=1, n_labels=2)
        with pytest.raises(FlowcastError) as err:
            bdt_predict(tree, 16)
        assert err.value.code == "bad-dimension"

    def test_predict_all_matches_scalar(self):
        tree = random_tree(10, 6, 8, seed=77)
        keys = np.arange(1 << 10, dtype=np.uint64)
        vec = predict_all(tree, keys)
        sample = make_rng(1).integers(0, 1 << 10, 200)
        for k in sample:
            assert vec[int(k)] == bdt_predict(tree, int(k))


class TestRandomTree:
    def test_structure_limits(self):
        for seed in range(50):
            tree = random_tree(12, 8, 16, seed=seed)
            assert tree.depth() <= 8

            def walk(node, used):
                if isinstance(node, BdtLeaf):
                    assert 0 <= node.label < 16
                    return
                assert node.bit not in used
                assert 0 <= node.bit < 12
                walk(node.zero, used | {node.bit})
                walk(node.one, used | {node.bit})

            walk(tree.root, set())

    def test_seed_determinism(self):
        t1 = random_tree(8, 5, 4, seed=9)
        t2 = random_tree(8, 5, 4, seed=9)
        assert tree_to_text(t1) == tree_to_text(t2)


class TestTextFormat:
    def test_roundtrip(self):
        tree = random_tree(9, 6, 5, seed=21)
        text = tree_to_text(tree)
        back = tree_from_text(text)
        keys = np.arange(1 << 9, dtype=np.uint64)
        assert predict_all(back, keys).tolist() == predict_all(tree, keys).tolist()
        assert tree_to_text(back) == text

    def test_line_shapes(self):
        tree = BitDecisionTree(
            key_width=4, root=BdtNode(bit=2, zero=BdtLeaf(0), one=BdtLeaf(1)),
            max_depth=1, min_leaf=1, n_labels=2)
        lines = tree_to_text(tree).splitlines()
        assert lines[0] == "BDT v1 width=4"
        assert lines[1] == "N 0 bit=2 L=1 R=2"
        assert lines[2] == "L 1 label=0"
        assert lines[3] == "L 2 label=1"

    def test_bad_header(self):
        with pytest.raises(FlowcastError) as err:
            tree_from_text("nope\n")
        assert err.value.code == "bad-structure"


class TestBdtForecaster:
    def test_fit_predict_value(self):
        rng = make_rng(41)
        keys = rng.integers(0, 1 << 8, 200)
        targets = (keys >> 4).astype(float) * 10
        f = BdtForecaster(max_depth=8, min_leaf=1, n_labels=16, key_width=8)
        f.fit(keys, targets)
        v = f.predict_value(int(keys[0]))
        assert targets.min() <= v <= targets.max()

    def test_serialization_roundtrip(self):
        rng = make_rng(42)
        keys = rng.integers(0, 1 << 8, 150)
        targets = rng.standard_normal(150)
        f = BdtForecaster(max_depth=5, min_leaf=2, n_labels=8, key_width=8)
        f.fit(keys, targets)
        blob = f.to_bytes()
        back = BdtForecaster.from_bytes(blob)
        assert back.to_bytes() == blob
        for k in keys[:20]:
            assert back.predict(int(k)) == f.predict(int(k))
            assert back.predict_value(int(k)) == f.predict_value(int(k))

    def test_unfitted(self):
        f = BdtForecaster()
        with pytest.raises(FlowcastError) as err:
            f.predict(0)
        assert err.value.code == "unfitted"
