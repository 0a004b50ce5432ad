import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paulibridge.bridge import (
    Bridge,
    CutOutOfRange,
    EmptyOperator,
    IndexOutOfRange,
    compile,
    decomposition_from_json,
    decomposition_to_json,
    reconstruct,
    set_bridge,
    structural_hash,
)
from paulibridge.pauli import PauliString, PauliSum, parse_pauli_sum

from conftest import random_pauli_sum


class TestWorkedExample:
    def test_mid_cut_dictionaries(self, h2_subset):
        d = compile(h2_subset, 2)
        assert d.left.labels == ("II", "IZ", "XX", "YX", "ZI", "ZZ")
        assert d.right.labels == ("II", "XY", "YY", "ZI", "ZZ")
        assert len(d.bridge.entries) == 9
        a = d.left.index(PauliString.from_label("YX"))
        b = d.right.index(PauliString.from_label("XY"))
        assert d.bridge.entries[(a, b)] == pytest.approx(0.045322, abs=1e-12)

    def test_first_cut_matrix(self, h2_subset):
        # expected matrix derived by splitting each fixture term at the
        # first site and accumulating coefficients per (prefix, suffix)
        d = compile(h2_subset, 1)
        assert d.left.labels == ("I", "X", "Y", "Z")
        assert d.right.labels == ("III", "IZI", "IZZ", "XXY", "XYY", "ZII", "ZZI")
        want = np.array(
            [
                [-0.098864, -0.222786, 0.174348, 0.0, 0.0, 0.0, 0.165867],
                [0.0, 0.0, 0.0, 0.0, -0.045322, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.045322, 0.0, 0.0, 0.0],
                [0.171198, 0.120545, 0.0, 0.0, 0.0, 0.168622, 0.0],
            ]
        )
        assert np.max(np.abs(d.bridge.to_matrix() - want)) < 1e-12

    def test_fragment_count_bound(self, h2_subset):
        d = compile(h2_subset, 2)
        assert len(d.left) <= min(h2_subset.n_terms, 4**2)
        assert len(d.right) <= min(h2_subset.n_terms, 4**2)


class TestRoundTrips:
    def test_reconstruct_compile_identity(self, h2_subset):
        got = reconstruct(compile(h2_subset, 2))
        assert got.as_dict() == h2_subset.as_dict()

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_reconstruct_compile_random(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        n = data.draw(st.integers(2, 6))
        op = random_pauli_sum(rng, n, data.draw(st.integers(1, 12)), complex_coeffs=True)
        cut = data.draw(st.integers(1, n - 1))
        assert reconstruct(compile(op, cut)).as_dict() == op.as_dict()

    def test_compile_reconstruct_identity(self, h2_subset):
        d = compile(h2_subset, 2)
        d2 = compile(reconstruct(d), 2)
        assert d2.left == d.left and d2.right == d.right
        assert d2.bridge.entries == d.bridge.entries

    def test_json_roundtrip(self, h2_subset):
        d = compile(h2_subset, 2)
        text = decomposition_to_json(d)
        d2 = decomposition_from_json(text)
        assert d2 == d
        assert decomposition_to_json(d2) == text

    def test_compile_deterministic_bytes(self, h2_text, h2_subset):
        a = decomposition_to_json(compile(parse_pauli_sum(h2_text), 2))
        b = decomposition_to_json(compile(parse_pauli_sum(h2_text), 2))
        assert a == b


class TestSetBridge:
    def test_coefficients_replaced(self, h2_subset):
        d = compile(h2_subset, 2)
        new_entries = {pair: 1.0 + 0j for pair in d.bridge.entries}
        d2 = set_bridge(d, new_entries)
        got = reconstruct(d2)
        assert all(t.coeff == 1.0 for t in got.terms)
        assert got.n_terms == 9

    def test_structural_hash_invariant(self, h2_subset):
        d = compile(h2_subset, 2)
        d2 = set_bridge(d, {pair: 2.5j * c for pair, c in d.bridge.entries.items()})
        assert structural_hash(d2) == structural_hash(d)

    def test_new_pair_allowed_hash_fixed(self, h2_subset):
        d = compile(h2_subset, 2)
        extra = dict(d.bridge.entries)
        extra[(0, 1)] = 0.5 + 0j  # II (x) XY was not an original term
        d2 = set_bridge(d, extra)
        assert structural_hash(d2) == structural_hash(d)
        assert reconstruct(d2).n_terms == 10

    def test_zero_entries_kept(self, h2_subset):
        d = compile(h2_subset, 2)
        zeroed = {pair: 0j for pair in d.bridge.entries}
        d2 = set_bridge(d, zeroed)
        assert len(d2.bridge.entries) == 9
        assert d2.bridge.active_pairs == ()
        assert len(d2.bridge.cancelled_pairs) == 9
        assert reconstruct(d2).n_terms == 0

    def test_index_out_of_range(self, h2_subset):
        d = compile(h2_subset, 2)
        with pytest.raises(IndexOutOfRange):
            set_bridge(d, {(0, 99): 1.0})

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_hash_invariance_random(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        n = data.draw(st.integers(2, 5))
        op = random_pauli_sum(rng, n, data.draw(st.integers(1, 10)))
        cut = data.draw(st.integers(1, n - 1))
        d = compile(op, cut)
        scale = data.draw(st.floats(-3, 3, allow_nan=False))
        d2 = set_bridge(d, {pair: scale * c for pair, c in d.bridge.entries.items()})
        assert structural_hash(d2) == structural_hash(d)


class TestGraphs:
    def test_left_graph_is_prefix_trie(self, h2_subset):
        d = compile(h2_subset, 2)
        labels = [f.label for f in d.left.fragments]
        for i, layer in enumerate(d.graph_left.layers):
            assert layer == tuple(sorted({lab[:i] for lab in labels}))
        # trie property: each non-root vertex has exactly one incoming edge
        for gap, layer in zip(d.graph_left.edges, d.graph_left.layers[1:]):
            targets = [e[2] for e in gap]
            assert sorted(targets) == sorted(set(targets))
            assert set(targets) == set(layer)

    def test_right_graph_strips_leading_symbol(self, h2_subset):
        d = compile(h2_subset, 2)
        labels = [f.label for f in d.right.fragments]
        for i, layer in enumerate(d.graph_right.layers):
            assert layer == tuple(sorted({lab[i:] for lab in labels}))
        # each vertex has exactly one outgoing edge, so fragment-to-sink
        # paths are unique
        for gap, layer in zip(d.graph_right.edges, d.graph_right.layers):
            sources = [e[0] for e in gap]
            assert sorted(sources) == sorted(set(sources))
            assert set(sources) == set(layer)

    def test_unique_path_reaches_each_fragment(self, h2_subset):
        d = compile(h2_subset, 2)
        for frag in d.left.labels:
            vertex = ""
            for i, symbol in enumerate(frag):
                matches = [e for e in d.graph_left.edges[i] if e[0] == vertex and e[1] == symbol]
                assert len(matches) == 1
                vertex = matches[0][2]
            assert vertex == frag

    def test_layer_sizes_monotone_amortized(self, h2_subset):
        d = compile(h2_subset, 2)
        assert d.graph_left.layers[0] == ("",)
        assert d.graph_right.layers[-1] == ("",)


class TestErrors:
    def test_cut_out_of_range(self, h2_subset):
        with pytest.raises(CutOutOfRange):
            compile(h2_subset, 0)
        with pytest.raises(CutOutOfRange):
            compile(h2_subset, 4)

    def test_empty_operator(self):
        with pytest.raises(EmptyOperator):
            compile(PauliSum(3, []), 1)

    def test_single_term_cut(self):
        op = parse_pauli_sum("2.0 XZ\n")
        d = compile(op, 1)
        assert d.left.labels == ("X",)
        assert d.right.labels == ("Z",)
        assert d.bridge.entries == {(0, 0): 2.0 + 0j}
