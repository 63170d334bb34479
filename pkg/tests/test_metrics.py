import numpy as np
import pytest
from hypothesis import given, strategies as st

from chainmask.metrics import (EvalReport, micro_f1, rationale_overlap)


class TestMicroF1:
    def test_perfect(self):
        assert micro_f1(["A", "B"], ["A", "B"]) == 1.0

    def test_all_wrong(self):
        assert micro_f1(["A", "A"], ["B", "C"]) == 0.0

    def test_equals_accuracy_single_label(self):
        preds = ["A", "B", "C", "C"]
        gold = ["A", "B", "C", "A"]
        assert micro_f1(preds, gold) == pytest.approx(0.75)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            micro_f1(["A"], ["A", "B"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            micro_f1([], [])

    def test_exclude_label(self):
        # NA-NA pairs leave the pools; NA predictions on real gold count
        # as misses only.
        preds = ["NA", "A", "NA", "B"]
        gold = ["NA", "A", "B", "B"]
        # tp=2, fp=0, fn=1 -> P=1, R=2/3, F1=0.8
        assert micro_f1(preds, gold, exclude_label="NA") == pytest.approx(0.8)

    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 20))
        labels = ["A", "B", "C"]
        preds = [labels[i] for i in rng.integers(0, 3, n)]
        gold = [labels[i] for i in rng.integers(0, 3, n)]
        perm = rng.permutation(n)
        assert micro_f1(preds, gold) == pytest.approx(
            micro_f1([preds[i] for i in perm], [gold[i] for i in perm]))


class TestRationaleOverlap:
    def test_exact_match(self):
        assert rationale_overlap([0, 1, 1, 0], (1, 2)) == (1.0, 1.0)

    def test_superset_double_size(self):
        p, r = rationale_overlap([1, 1, 1, 1], (1, 2))
        assert (p, r) == (0.5, 1.0)

    def test_disjoint(self):
        assert rationale_overlap([1, 0, 0, 0], (2, 3)) == (0.0, 0.0)

    def test_nothing_selected_conventions(self):
        p, r = rationale_overlap([0, 0, 0], (0, 1))
        assert (p, r) == (0.0, 0.0)
        p, r = rationale_overlap([0, 0, 0], None)
        assert (p, r) == (1.0, 1.0)

    def test_out_of_bounds_span(self):
        with pytest.raises(ValueError):
            rationale_overlap([0, 1], (1, 2))

    @given(st.integers(0, 2**32 - 1))
    def test_adding_correct_token_monotone(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 12))
        lo = int(rng.integers(0, n - 1))
        hi = int(rng.integers(lo, n))
        hi = min(hi, n - 1)
        bits = rng.integers(0, 2, n)
        missing = [i for i in range(lo, hi + 1) if not bits[i]]
        if not missing:
            return
        p0, r0 = rationale_overlap(bits, (lo, hi))
        bits2 = bits.copy()
        bits2[missing[0]] = 1
        p1, r1 = rationale_overlap(bits2, (lo, hi))
        assert p1 >= p0 - 1e-12 and r1 >= r0 - 1e-12


class TestEvalReport:
    def test_serialization(self):
        rep = EvalReport(micro_f1=0.5, mean_sparsity_rate=0.25,
                         mean_segment_count=1.5)
        d = rep.to_dict()
        assert "rationale_precision" not in d
        assert "micro_f1 = 0.500000" in rep.to_text()
