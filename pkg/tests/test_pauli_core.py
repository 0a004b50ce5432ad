import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paulibridge.pauli import (
    DimensionMismatch,
    EmptyInput,
    InconsistentLength,
    LengthMismatch,
    MalformedLine,
    NotNormalized,
    PauliString,
    PauliSum,
    TooLarge,
    apply_string,
    classify,
    concat,
    dense_string,
    expectation,
    multiply,
    parse_pauli_sum,
    pauli_product,
    serialize_pauli_sum,
    to_dense,
)

from conftest import random_pauli_sum, random_state

PHASES = {1 + 0j, -1 + 0j, 1j, -1j}


def all_strings(n):
    return [PauliString.from_label("".join(w)) for w in itertools.product("IXYZ", repeat=n)]


labels = st.integers(1, 5).flatmap(
    lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)
)


class TestProductAgainstDense:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exhaustive_homomorphism(self, n):
        strings = all_strings(n)
        for a in strings:
            for b in strings:
                phase, c = pauli_product(a, b)
                assert phase in PHASES
                lhs = dense_string(a) @ dense_string(b)
                rhs = phase * dense_string(c)
                assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_single_site_example(self):
        phase, c = pauli_product(PauliString.from_label("X"), PauliString.from_label("Y"))
        assert phase == 1j
        assert c.label == "Z"

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pauli_product(PauliString.from_label("X"), PauliString.from_label("XY"))


class TestStringBasics:
    def test_weight(self):
        assert PauliString.from_label("XIZY").weight == 3
        assert PauliString.identity(4).weight == 0

    @given(labels, labels)
    def test_weight_subadditive(self, la, lb):
        if len(la) != len(lb):
            return
        a, b = PauliString.from_label(la), PauliString.from_label(lb)
        _, c = pauli_product(a, b)
        assert c.weight <= a.weight + b.weight

    def test_classify(self):
        assert classify(PauliString.from_label("IZZI")) == "diagonal"
        assert classify(PauliString.from_label("IXZI")) == "offdiagonal"
        assert classify(PauliString.identity(3)) == "diagonal"

    def test_lexicographic_order(self):
        strings = all_strings(2)
        by_value = sorted(strings)
        by_label = sorted(strings, key=lambda s: s.label)
        assert [s.label for s in by_value] == [s.label for s in by_label]

    @given(labels, st.data())
    def test_split_concat_roundtrip(self, label, data):
        s = PauliString.from_label(label)
        if s.n_sites < 2:
            return
        cut = data.draw(st.integers(1, s.n_sites - 1))
        left, right = s.split(cut)
        assert concat(left, right) == s
        assert left.label == label[:cut]
        assert right.label == label[cut:]

    def test_needs_at_least_one_site(self):
        with pytest.raises(ValueError):
            PauliString.from_label("")


class TestDense:
    def test_kron_ordering(self):
        # site 0 is the most significant qubit
        zi = to_dense(PauliSum(2, [(1.0, PauliString.from_label("ZI"))]))
        assert np.allclose(zi, np.diag([1, 1, -1, -1]))
        iz = to_dense(PauliSum(2, [(1.0, PauliString.from_label("IZ"))]))
        assert np.allclose(iz, np.diag([1, -1, 1, -1]))

    def test_too_large(self):
        op = PauliSum(13, [(1.0, PauliString.identity(13))])
        with pytest.raises(TooLarge):
            to_dense(op)

    def test_dense_limit_override(self):
        op = PauliSum(3, [(1.0, PauliString.identity(3))])
        with pytest.raises(TooLarge):
            to_dense(op, dense_limit=2)

    @pytest.mark.parametrize("n", [1, 2])
    def test_apply_string_matches_dense(self, n):
        rng = np.random.default_rng(11)
        vec = random_state(rng, n)
        for s in all_strings(n):
            assert np.allclose(apply_string(s, vec), dense_string(s) @ vec, atol=1e-13)

    def test_apply_string_random_four_sites(self):
        rng = np.random.default_rng(12)
        vec = random_state(rng, 4)
        for _ in range(50):
            codes = rng.integers(0, 4, size=4)
            s = PauliString.from_codes(int(c) for c in codes)
            assert np.allclose(apply_string(s, vec), dense_string(s) @ vec, atol=1e-13)


class TestExpectation:
    def test_matches_dense_quadratic_form(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            op = random_pauli_sum(rng, 3, 6, complex_coeffs=True)
            vec = random_state(rng, 3)
            want = np.vdot(vec, to_dense(op) @ vec)
            assert abs(expectation(op, vec) - want) < 1e-12

    def test_rejects_unnormalized(self):
        op = PauliSum(2, [(1.0, PauliString.identity(2))])
        with pytest.raises(NotNormalized):
            expectation(op, np.array([1.0, 1.0, 0.0, 0.0]))

    def test_rejects_wrong_dimension(self):
        op = PauliSum(2, [(1.0, PauliString.identity(2))])
        with pytest.raises(DimensionMismatch):
            expectation(op, np.array([1.0, 0.0]))


class TestMultiply:
    def test_against_dense(self):
        rng = np.random.default_rng(7)
        a = random_pauli_sum(rng, 3, 4, complex_coeffs=True)
        b = random_pauli_sum(rng, 3, 5, complex_coeffs=True)
        assert np.allclose(to_dense(multiply(a, b)), to_dense(a) @ to_dense(b), atol=1e-12)


class TestTextFormat:
    def test_parse_two_terms(self):
        op = parse_pauli_sum("-0.098864 IIII\n+0.171198 ZIII\n")
        assert op.n_terms == 2
        assert op.terms[0].coeff == -0.098864
        assert op.terms[0].string.label == "IIII"
        assert op.terms[1].coeff == 0.171198

    def test_merge_to_zero_drops_term(self):
        op = parse_pauli_sum("1.0 II\n-1.0 II\n")
        assert op.n_terms == 0
        assert op.n_sites == 2

    def test_merge_accumulates(self):
        op = parse_pauli_sum("0.5 XZ\n0.25 XZ\n")
        assert op.n_terms == 1
        assert op.terms[0].coeff == 0.75
        assert op.terms[0].string.label == "XZ"

    def test_first_occurrence_order(self):
        op = parse_pauli_sum("1.0 ZZ\n2.0 XX\n3.0 ZZ\n")
        assert [t.string.label for t in op.terms] == ["ZZ", "XX"]

    def test_comments_and_blank_lines(self):
        op = parse_pauli_sum("# header\n\n1.0 XY  # trailing\n")
        assert op.n_terms == 1

    def test_complex_coefficients(self):
        op = parse_pauli_sum("0.5-0.25i XY\n1i ZZ\n")
        assert op.terms[0].coeff == 0.5 - 0.25j
        assert op.terms[1].coeff == 1j

    def test_malformed_line_position(self):
        with pytest.raises(MalformedLine) as err:
            parse_pauli_sum("1.0 XX\nbogus ZZ\n")
        assert err.value.line == 2
        assert err.value.column == 1

    def test_malformed_bad_symbol(self):
        with pytest.raises(MalformedLine) as err:
            parse_pauli_sum("1.0 XQ\n")
        assert err.value.line == 1
        assert err.value.column == 5

    def test_malformed_token_count(self):
        with pytest.raises(MalformedLine):
            parse_pauli_sum("1.0 XX YY\n")

    def test_inconsistent_length(self):
        with pytest.raises(InconsistentLength):
            parse_pauli_sum("1.0 XX\n1.0 XXX\n")

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            parse_pauli_sum("# only a comment\n\n")

    def test_h2_fixture_parses(self, h2_subset):
        assert h2_subset.n_sites == 4
        assert h2_subset.n_terms == 9

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_serialize_parse_roundtrip(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        n = data.draw(st.integers(1, 6))
        k = data.draw(st.integers(1, 8))
        op = random_pauli_sum(rng, n, k, complex_coeffs=data.draw(st.booleans()))
        assert parse_pauli_sum(serialize_pauli_sum(op)) == op

    def test_roundtrip_exact_decimals(self, h2_text, h2_subset):
        assert parse_pauli_sum(serialize_pauli_sum(h2_subset)) == h2_subset
