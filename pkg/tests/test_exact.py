import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainmask.core import ChainModel, score_of
from chainmask.exact import (brute_force_map, dp_map, dp_map_unbudgeted,
                             enumerate_masks, viterbi_unbudgeted_batch)


def model(s, r, k):
    return ChainModel(np.asarray(s, dtype=float), np.asarray(r, dtype=float), k)


def dyadic_model(rng, n, k=None):
    """Random model whose scores are multiples of 1/16 (exact float ties)."""
    s = rng.integers(-48, 49, n) / 16.0
    r = rng.integers(0, 33, max(n - 1, 0)) / 16.0
    if k is None:
        k = int(rng.integers(0, n + 1))
    return ChainModel(s, r, k)


class TestBruteForce:
    def test_three_token_example(self):
        sol = brute_force_map(model([1, -1, 2], [0.5, 0.5], 2))
        assert str(sol.mask) == "101" and sol.score == 3.0

    def test_all_negative_selects_nothing(self):
        sol = brute_force_map(model([-1, -1], [0.0], 2))
        assert str(sol.mask) == "00" and sol.score == 0.0

    def test_pair_bonus_selected(self):
        sol = brute_force_map(model([2, 2], [1.0], 2))
        assert str(sol.mask) == "11" and sol.score == 5.0

    def test_size_guard(self):
        n = 23
        with pytest.raises(ValueError):
            brute_force_map(model(np.zeros(n), np.zeros(n - 1), n))

    def test_enumerate_masks_shape(self):
        masks = enumerate_masks(3)
        assert masks.shape == (8, 3)
        assert (masks[5] == [1, 0, 1]).all()


class TestDpMap:
    def test_matches_brute_on_spec_examples(self):
        for s, r, k in [([1, -1, 2], [0.5, 0.5], 2),
                        ([-1, -1], [0.0], 2),
                        ([2, 2], [1.0], 2)]:
            b = brute_force_map(model(s, r, k))
            d = dp_map(model(s, r, k))
            assert str(d.mask) == str(b.mask) and d.score == b.score

    def test_empty_model(self):
        sol = dp_map(model([], [], 0))
        assert len(sol.mask.bits) == 0 and sol.score == 0.0

    def test_tie_break_earliest_token(self):
        sol = dp_map(model([3, 3, 3], [2, 2], 1))
        assert str(sol.mask) == "100" and sol.score == 3.0
        assert str(brute_force_map(model([3, 3, 3], [2, 2], 1)).mask) == "100"

    def test_zero_budget(self):
        sol = dp_map(model([5, 5], [1.0], 0))
        assert str(sol.mask) == "00" and sol.score == 0.0

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_oracle_equivalence(self, n, seed):
        rng = np.random.default_rng(seed)
        m = dyadic_model(rng, n)
        b, d = brute_force_map(m), dp_map(m)
        assert d.score == b.score
        assert (d.mask.bits == b.mask.bits).all()

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_monotone_in_budget(self, n, seed):
        rng = np.random.default_rng(seed)
        s = rng.uniform(-3, 3, n)
        r = rng.uniform(0, 2, max(n - 1, 0))
        prev = -np.inf
        for k in range(n + 1):
            score = dp_map(ChainModel(s, r, k)).score
            assert score >= prev
            prev = score

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_zero_bonus_picks_top_k(self, n, seed):
        rng = np.random.default_rng(seed)
        s = rng.uniform(0.1, 3.0, n)
        k = int(rng.integers(1, n + 1))
        sol = dp_map(ChainModel(s, np.zeros(max(n - 1, 0)), k))
        top = np.sort(np.argsort(-s)[:k])
        assert (np.flatnonzero(sol.mask.bits) == top).all()

    def test_score_is_rescored_bits(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m = ChainModel(rng.uniform(-3, 3, 9), rng.uniform(0, 2, 8), 5)
            sol = dp_map(m)
            assert sol.score == score_of(m, sol.mask.bits)


class TestUnbudgeted:
    def test_shift_zero_example(self):
        sol = dp_map_unbudgeted(model([1, -1, 2], [0.5, 0.5], 3))
        assert str(sol.mask) == "101" and sol.score == 3.0

    def test_large_shift_empty(self):
        sol = dp_map_unbudgeted(model([1, -1, 2], [0.5, 0.5], 3),
                                unary_shift=10.0)
        assert str(sol.mask) == "000" and sol.score == 0.0

    def test_bonus_outweighs_shift(self):
        sol = dp_map_unbudgeted(model([1, 1], [1.0], 2), unary_shift=1.4)
        assert str(sol.mask) == "11"
        assert sol.score == pytest.approx(0.2)

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_agrees_with_full_budget_dp(self, n, seed):
        rng = np.random.default_rng(seed)
        m = dyadic_model(rng, n, k=n)
        assert dp_map_unbudgeted(m).score == dp_map(m).score

    @given(st.integers(1, 9), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_batch_viterbi_matches_brute(self, n, b, seed):
        rng = np.random.default_rng(seed)
        unary = rng.integers(-48, 49, (b, n)) / 16.0
        edge = rng.integers(0, 33, max(n - 1, 0)) / 16.0
        bits, scores = viterbi_unbudgeted_batch(unary, edge)
        for row in range(b):
            m = ChainModel(unary[row], edge, n)
            ref = brute_force_map(m)
            assert (bits[row] == ref.mask.bits).all()
            assert scores[row] == pytest.approx(ref.score, abs=1e-12)
