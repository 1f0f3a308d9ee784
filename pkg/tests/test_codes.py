"""Identity sequences: construction, shifts, and exact correlation structure."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risid.codes import (
    BinarySequence,
    build_codebook,
    circular_shift,
    codebook_from_text,
    codebook_to_text,
    cross_corr_pmf,
    distinct_shift_fraction,
    hadamard_matrix,
    partial_cross_corr,
    rank_code_subsets,
    set_quality,
    uniform_offset_law,
)
from conftest import brute_force_pmf


class TestHadamard:
    def test_base_case(self):
        assert hadamard_matrix(1).tolist() == [[1]]

    def test_order_two(self):
        assert hadamard_matrix(2).tolist() == [[1, 1], [1, -1]]

    def test_order_four_row_two(self):
        h = hadamard_matrix(4)
        assert h[2].tolist() == [1, 1, -1, -1]
        assert np.array_equal(h @ h.T, 4 * np.eye(4, dtype=np.int64))

    @pytest.mark.parametrize("m", [1, 2, 4, 8, 16, 32, 64])
    def test_orthogonality_exact(self, m):
        h = hadamard_matrix(m)
        assert np.array_equal(h @ h.T, m * np.eye(m, dtype=np.int64))
        assert np.all(h[0] == 1)

    @pytest.mark.parametrize("m", [0, 3, 6, 12, -4])
    def test_rejects_non_powers(self, m):
        with pytest.raises(ValueError):
            hadamard_matrix(m)


class TestCodebook:
    def test_all_usable_rows_orthogonal(self):
        book = build_codebook(16, list(range(1, 16)))
        assert len(book) == 15
        for a in book.entries:
            for b in book.entries:
                expect = 16 if a is b else 0
                assert int(np.dot(a.symbols, b.symbols)) == expect

    def test_rejects_constant_row(self):
        with pytest.raises(ValueError, match="all-ones"):
            build_codebook(16, [0, 1])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="distinct"):
            build_codebook(16, [3, 3])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="range"):
            build_codebook(16, [16])

    def test_excluded_rows_complement(self):
        book = build_codebook(8, [1, 5])
        assert book.excluded_rows == (0, 2, 3, 4, 6, 7)

    def test_two_subsets_differ_in_shifted_cross_correlation(self):
        h = hadamard_matrix(32)
        good = [BinarySequence(id=r, symbols=h[r], row=r) for r in (1, 2, 4, 8, 9)]
        bad = [BinarySequence(id=r, symbols=h[r], row=r) for r in (1, 2, 3, 4, 5)]
        assert set_quality(good, 8) < set_quality(bad, 8)

    def test_text_round_trip(self):
        book = build_codebook(16, [1, 2, 4])
        text = codebook_to_text(book)
        back = codebook_from_text(text)
        assert back.m == 16 and back.rows == (1, 2, 4)
        for a, b in zip(book.entries, back.entries):
            assert np.array_equal(a.symbols, b.symbols)

    def test_text_rejects_corrupted_symbols(self):
        book = build_codebook(8, [1])
        text = codebook_to_text(book).replace("code 1: + -", "code 1: - -")
        with pytest.raises(ValueError, match="do not match"):
            codebook_from_text(text)


class TestCircularShift:
    def test_full_rotation_is_identity(self, seq16):
        s = seq16[5]
        assert np.array_equal(circular_shift(s, 16).symbols, s.symbols)

    def test_single_rotation(self):
        s = BinarySequence(id=1, symbols=[1, -1, 1, -1])
        assert circular_shift(s, 1).symbols.tolist() == [-1, 1, -1, 1]

    @given(c=st.integers(min_value=1, max_value=16), row=st.integers(1, 15))
    @settings(max_examples=40, deadline=None)
    def test_shift_group_property(self, c, row, seq16):
        s = seq16[row]
        back = circular_shift(circular_shift(s, c), 16 - c)
        assert np.array_equal(back.symbols, s.symbols)

    def test_composed_m_times_identity(self, seq16):
        s = seq16[9]
        for _ in range(16):
            s = circular_shift(s, 1)
        assert np.array_equal(s.symbols, seq16[9].symbols)

    def test_matches_index_convention(self, seq16):
        # element m of the shifted sequence is element ((c+m-1) mod M)+1 of the input
        s = seq16[11]
        for c in (1, 5, 16):
            out = circular_shift(s, c)
            for m in range(1, 17):
                assert out.symbols[m - 1] == s.symbols[(c + m - 1) % 16]


class TestPartialCrossCorr:
    def test_aligned_full_window_peak(self, seq16):
        for row in (1, 8, 15):
            s = seq16[row]
            laid = circular_shift(s, 5)  # received with its own offset
            assert partial_cross_corr(s, laid, 5, 3, 3) == 16

    def test_orthogonal_zero_shift(self, seq16):
        assert partial_cross_corr(seq16[1], seq16[2], 16, 3, 3) == 0

    def test_empty_window_returns_zero(self, seq16):
        assert partial_cross_corr(seq16[1], seq16[2], 4, 19, 3) == 0

    def test_window_bound(self, seq16):
        m = 16
        for v1 in (1, 2, 3):
            for k in range(0, 7):
                win = m - abs(k - v1) if k >= v1 else m - (v1 - k)
                for c in (1, 7, 16):
                    a = partial_cross_corr(seq16[4], seq16[9], c, k, v1)
                    assert abs(a) <= min(m, max(win, 0))

    def test_m4_table_against_direct_summation(self):
        h = hadamard_matrix(4)
        s1 = BinarySequence(id=1, symbols=h[1], row=1)
        s2 = BinarySequence(id=2, symbols=h[2], row=2)
        v1 = 1
        for cd in range(1, 5):
            laid = circular_shift(s2, cd)
            for c in range(1, 5):
                for k in range(0, 3):
                    sl = np.roll(s1.symbols, -c)
                    t = k - v1
                    acc = 0
                    for m2 in range(1, 5):
                        if t < 0 and m2 <= v1 - k:
                            continue
                        if t > 0 and m2 > 4 - t:
                            continue
                        acc += int(sl[m2 - 1]) * int(laid.symbols[m2 + t - 1])
                    assert partial_cross_corr(s1, laid, c, k, v1) == acc

    def test_rejects_bad_v1(self, seq16):
        with pytest.raises(ValueError):
            partial_cross_corr(seq16[1], seq16[2], 1, 0, 16)


class TestCrossCorrPmf:
    def test_same_code_point_mass_at_peak(self, seq16):
        pmf = cross_corr_pmf(seq16[3], seq16[3], 4)
        assert pmf.support == (256,)
        assert pmf.probs == (Fraction(1),)
        assert pmf.a_tilde == 16

    def test_matches_brute_force_enumeration(self, seq16):
        pmf = cross_corr_pmf(seq16[1], seq16[2], 4)
        oracle, a_oracle = brute_force_pmf(seq16[1], seq16[2], 4)
        assert pmf.a_tilde == a_oracle
        assert list(pmf.support) == list(oracle)
        for p, (a, q) in zip(pmf.probs, oracle.items()):
            assert float(p) == pytest.approx(q, abs=1e-15)

    def test_probabilities_sum_to_one_exactly(self, seq16):
        pmf = cross_corr_pmf(seq16[8], seq16[9], 4)
        assert sum(pmf.probs) == 1

    def test_permuted_order_re_derivation_identical(self, seq16):
        base = cross_corr_pmf(seq16[4], seq16[9], 4)
        # re-enumerate with the loop order permuted: v1 outer loop reversed,
        # assembled from degenerate laws
        weights = {}
        a_tilde = 0
        for v1 in reversed(range(1, 5)):
            part = cross_corr_pmf(seq16[4], seq16[9], {v1: Fraction(1)}, v_total=4)
            a_tilde = max(a_tilde, part.a_tilde)
            for a, p in zip(part.support, part.probs):
                weights[a] = weights.get(a, Fraction(0)) + p * Fraction(1, 4)
        assert a_tilde == base.a_tilde
        assert tuple(sorted(weights)) == base.support
        assert tuple(weights[a] for a in base.support) == base.probs

    def test_support_values_are_perfect_squares(self, seq16):
        pmf = cross_corr_pmf(seq16[10], seq16[13], 4)
        for a in pmf.support:
            assert int(round(a**0.5)) ** 2 == a
        assert pmf.a_tilde**2 >= max(pmf.support)


class TestSetQuality:
    def test_duplicated_code_is_worst_case(self, seq16):
        twin = BinarySequence(id=99, symbols=seq16[5].symbols, row=5)
        assert set_quality([seq16[5], twin], 4) == 16

    def test_requires_two_codes(self, seq16):
        with pytest.raises(ValueError):
            set_quality([seq16[1]], 4)

    def test_subset_ranking_m16(self):
        ranked = rank_code_subsets(16, 5, 4)
        best_q, best_rows = ranked[0]
        worst_q, worst_rows = ranked[-1]
        assert best_q == 5 and best_rows == (1, 2, 4, 8, 9)
        assert worst_q == 16 and worst_rows == (11, 12, 13, 14, 15)
        # canonical worst by (quality, lexicographic) among max-quality ties
        worst_ties = sorted(rows for q, rows in ranked if q == worst_q)
        assert worst_ties[0] == (1, 2, 3, 4, 5)


class TestDistinctShiftFraction:
    def test_alternating_row_collapses(self, seq16):
        assert distinct_shift_fraction(seq16[1]) == pytest.approx(1 / 16)

    @pytest.mark.parametrize("row", [8, 9, 12, 15])
    def test_high_rows_reach_half(self, row, seq16):
        assert distinct_shift_fraction(seq16[row]) == pytest.approx(0.5)

    @given(row=st.integers(1, 15))
    @settings(max_examples=15, deadline=None)
    def test_bounded_by_half(self, row, seq16):
        assert 0 < distinct_shift_fraction(seq16[row]) <= 0.5


def test_uniform_offset_law_normalized():
    law = uniform_offset_law(4)
    assert sum(law.values()) == 1 and set(law) == {1, 2, 3, 4}
