import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molbench.metrics import auroc, confusion_counts, mcc, mcc_from_labels
from oracles import auroc_oracle, mcc_oracle


class TestMcc:
    def test_perfect_and_inverted(self):
        assert mcc(10, 0, 10, 0) == 1.0
        assert mcc(0, 10, 0, 10) == -1.0

    def test_zero_factor_convention(self):
        assert mcc(5, 5, 0, 0) == 0.0
        assert mcc(0, 0, 5, 5) == 0.0
        assert mcc(5, 0, 0, 5) == 0.0

    def test_known_value(self):
        # tp=6 fp=1 tn=3 fn=2: (18-2)/sqrt(7*8*4*5)
        assert mcc(6, 1, 3, 2) == pytest.approx(16 / math.sqrt(1120),
                                                abs=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            mcc(-1, 0, 1, 0)
        with pytest.raises(ValueError):
            mcc(0, 0, 0, 0)

    @settings(max_examples=1000, deadline=None)
    @given(st.tuples(st.integers(0, 500), st.integers(0, 500),
                     st.integers(0, 500), st.integers(0, 500)))
    def test_matches_exact_rational_oracle(self, counts):
        tp, fp, tn, fn = counts
        if tp + fp + tn + fn == 0:
            return
        assert abs(mcc(tp, fp, tn, fn) - mcc_oracle(tp, fp, tn, fn)) <= 1e-12

    def test_huge_counts_stay_exact(self):
        # the integer path must not overflow or lose precision
        big = 10**9
        assert mcc(big, 0, big, 0) == 1.0
        assert abs(mcc(big, 1, big, 1)) <= 1.0


class TestConfusion:
    def test_counts(self):
        tp, fp, tn, fn = confusion_counts([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
        assert (tp, fp, tn, fn) == (2, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion_counts([1, 0], [1])

    def test_from_labels_round_trip(self):
        y_true = [1, 1, 0, 0, 1, 0]
        y_pred = [1, 0, 0, 1, 1, 0]
        assert mcc_from_labels(y_true, y_pred) == mcc(
            *confusion_counts(y_true, y_pred))


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auroc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_all_tied_is_half(self):
        assert auroc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auroc([0.1, 0.2], [1, 1])

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 1),
                              st.integers(-5, 5)),
                    min_size=2, max_size=30))
    def test_matches_pairwise_oracle(self, rows):
        labels = [l for l, _ in rows]
        # quantized scores so ties actually occur
        scores = [s / 2.0 for _, s in rows]
        if len(set(labels)) < 2:
            return
        assert auroc(scores, labels) == pytest.approx(
            auroc_oracle(scores, labels), abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        scores = rng.normal(size=40)
        labels = (rng.random(40) < 0.4).astype(int)
        labels[:2] = [0, 1]
        a = auroc(scores, labels)
        b = auroc(np.exp(scores), labels)
        assert a == pytest.approx(b, abs=1e-12)
