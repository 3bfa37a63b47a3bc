import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhpert.kato import (
    InvalidOrderError,
    enumerate_alpha_sequences,
    evaluate_terms,
    read_term_table,
    reduce_to_kato_terms,
    rs_energy_corrections,
    write_term_table,
)

# published counts of reduced terms per order under the mirror-merged
# multiset convention
KNOWN_COUNTS = {2: 1, 3: 2, 4: 4, 5: 10, 6: 22, 7: 53, 8: 119, 9: 278, 10: 627}


class TestAlphaSequences:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_cardinality(self, n):
        assert len(enumerate_alpha_sequences(n)) == math.comb(2 * n - 1, n)

    def test_each_sums_correctly(self):
        for alpha in enumerate_alpha_sequences(5):
            assert len(alpha) == 6
            assert sum(alpha) == 4
            assert all(a >= 0 for a in alpha)

    def test_rejects_nonpositive_order(self):
        with pytest.raises(InvalidOrderError):
            enumerate_alpha_sequences(0)


class TestReduction:
    @pytest.mark.parametrize("n,count", sorted(KNOWN_COUNTS.items()))
    def test_term_counts(self, n, count):
        assert len(reduce_to_kato_terms(n)) == count

    def test_weights_are_nonzero_rationals(self):
        for t in reduce_to_kato_terms(6):
            assert isinstance(t.weight, Fraction)
            assert t.weight != 0
            assert t.order == 6

    def test_second_order_term(self):
        (term,) = reduce_to_kato_terms(2)
        assert term.inner_alphas == (1,)
        assert term.weight == 1


def _random_problem(rng, dim=8):
    v = rng.standard_normal((dim, dim))
    v = (v + v.T) / 2.0
    h0 = np.sort(rng.standard_normal(dim)) * 3.0
    # enforce a safe gap around the reference level
    h0 = h0 + np.arange(dim) * 1.0
    return h0, v


class TestAgainstRecursion:
    def test_matches_rayleigh_schroedinger(self):
        rng = np.random.default_rng(7)
        for trial in range(5):
            h0, v = _random_problem(rng)
            m = int(trial % 3)
            rs = rs_energy_corrections(h0, v, m, max_order=6)
            for n in range(2, 7):
                kato = evaluate_terms(reduce_to_kato_terms(n), h0, v, m)
                scale = max(1.0, abs(rs[n - 1]))
                assert abs(kato - rs[n - 1]) / scale < 1e-10

    def test_complex_hermitian(self):
        rng = np.random.default_rng(11)
        v = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        v = (v + v.conj().T) / 2.0
        h0 = np.arange(6, dtype=float) * 1.7
        rs = rs_energy_corrections(h0, v, 0, max_order=5)
        for n in range(2, 6):
            kato = evaluate_terms(reduce_to_kato_terms(n), h0, v, 0)
            assert kato == pytest.approx(rs[n - 1], rel=1e-10, abs=1e-12)


class TestDiskFormat:
    def test_roundtrip(self, tmp_path):
        terms = reduce_to_kato_terms(7)
        path = str(tmp_path / "terms.txt")
        write_term_table(path, 7, terms)
        assert read_term_table(path) == terms

    def test_cache_dir_hit(self, tmp_path):
        a = reduce_to_kato_terms(5, cache_dir=str(tmp_path))
        assert (tmp_path / "kato_terms_n5.txt").exists()
        b = read_term_table(str(tmp_path / "kato_terms_n5.txt"))
        assert a == b


@given(st.integers(min_value=2, max_value=8))
@settings(max_examples=7, deadline=None)
def test_total_weight_matches_bracket_structure(n):
    # resolvent exponents always total n-1, and the projector count equals
    # the factor count minus one
    for t in reduce_to_kato_terms(n):
        assert sum(t.inner_alphas) == n - 1
        assert len(t.factors) == len(t.projector_pattern) + 1
