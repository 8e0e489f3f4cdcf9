"""Set types, exact Jaccard oracles, and the text interchange format."""

import io

import numpy as np
import pytest

from wjacc.sets import (
    EstimateResult,
    UnweightedSet,
    WeightedSet,
    l1_norm,
    read_weighted_set,
    unweighted_jaccard,
    weighted_jaccard,
    write_weighted_set,
)

RNG = np.random.default_rng(42)


def random_weighted(n, rng, scale=5.0):
    return WeightedSet({f"e{i:03d}": float(v) for i, v in enumerate(rng.exponential(scale, n) + 1e-6)})


class TestWeightedSet:
    def test_rejects_bad_weights(self):
        for bad in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                WeightedSet({"a": bad})

    def test_rejects_duplicates_across_key_types(self):
        with pytest.raises(ValueError):
            WeightedSet([("a", 1.0), (b"a", 2.0)])

    def test_sorted_iteration_and_lookup(self):
        w = WeightedSet({"b": 2.0, "a": 1.0, "c": 3.0})
        assert list(w) == [b"a", b"b", b"c"]
        assert w["b"] == 2.0
        assert w.get("zz") == 0.0
        assert "a" in w and "zz" not in w
        assert l1_norm(w) == pytest.approx(6.0)

    def test_equality_ignores_insertion_order(self):
        assert WeightedSet({"a": 1.0, "b": 2.0}) == WeightedSet({"b": 2.0, "a": 1.0})

    def test_pointwise_min_max(self):
        w1 = WeightedSet({"a": 2.0, "b": 1.0})
        w2 = WeightedSet({"b": 3.0, "c": 1.0})
        assert w1.pointwise_min(w2) == WeightedSet({"b": 1.0})
        assert w1.pointwise_max(w2) == WeightedSet({"a": 2.0, "b": 3.0, "c": 1.0})

    def test_arrays_align_with_ids(self):
        w = WeightedSet({"b": 2.0, "a": 1.0})
        assert w.weights.tolist() == [1.0, 2.0]
        assert w.lanes.shape == (2,)


class TestWeightedJaccard:
    def test_worked_example(self):
        w1 = WeightedSet({"a": 2.0, "b": 1.0})
        w2 = WeightedSet({"b": 3.0, "c": 1.0})
        assert weighted_jaccard(w1, w2) == pytest.approx(1.0 / 6.0)

    def test_identity_and_empty_conventions(self):
        w = random_weighted(20, np.random.default_rng(0))
        assert weighted_jaccard(w, w) == pytest.approx(1.0)
        empty = WeightedSet({})
        assert weighted_jaccard(empty, empty) == 1.0
        assert weighted_jaccard(w, empty) == 0.0

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            w1 = random_weighted(rng.integers(1, 40), rng)
            w2 = random_weighted(rng.integers(1, 40), rng)
            j12 = weighted_jaccard(w1, w2)
            assert j12 == pytest.approx(weighted_jaccard(w2, w1))
            assert 0.0 <= j12 <= 1.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        w1 = random_weighted(30, rng)
        w2 = random_weighted(30, rng)
        for c in (0.25, 3.0, 1e6):
            assert weighted_jaccard(w1.scaled(c), w2.scaled(c)) == pytest.approx(
                weighted_jaccard(w1, w2), rel=1e-12
            )

    def test_bounded_by_norm_ratio(self):
        """Similarity can never exceed the smaller-to-larger norm ratio."""
        rng = np.random.default_rng(9)
        for _ in range(25):
            w1 = random_weighted(rng.integers(2, 30), rng)
            w2 = random_weighted(rng.integers(2, 30), rng)
            ratio = min(w1.l1, w2.l1) / max(w1.l1, w2.l1)
            assert weighted_jaccard(w1, w2) <= ratio + 1e-12


class TestUnweightedSet:
    def test_from_items_validates_prefix(self):
        s = UnweightedSet.from_items([("a", 1), ("a", 2), ("b", 1)])
        assert s.count("a") == 2 and s.count("b") == 1
        with pytest.raises(ValueError):
            UnweightedSet.from_items([("a", 2)])
        with pytest.raises(ValueError):
            UnweightedSet.from_items([("a", 1), ("a", 1)])
        with pytest.raises(ValueError):
            UnweightedSet.from_items([("a", 0)])

    def test_membership_and_iteration(self):
        s = UnweightedSet({"a": 2, "b": 1})
        assert len(s) == 3
        assert (b"a", 2) in s and (b"a", 3) not in s
        assert list(s.items()) == [(b"a", 1), (b"a", 2), (b"b", 1)]

    def test_zero_counts_dropped(self):
        assert UnweightedSet({"a": 0, "b": 1}) == UnweightedSet({"b": 1})

    def test_intersection_union_are_count_min_max(self):
        s1 = UnweightedSet({"a": 3, "b": 1})
        s2 = UnweightedSet({"a": 1, "c": 2})
        assert s1.intersection(s2) == UnweightedSet({"a": 1})
        assert s1.union(s2) == UnweightedSet({"a": 3, "b": 1, "c": 2})

    def test_jaccard_matches_weighted_oracle_on_counts(self):
        """Item-set Jaccard is weighted Jaccard of the count vectors."""
        rng = np.random.default_rng(10)
        for _ in range(20):
            c1 = {f"e{i}": int(v) for i, v in enumerate(rng.integers(0, 6, 15)) if v}
            c2 = {f"e{i}": int(v) for i, v in enumerate(rng.integers(0, 6, 15)) if v}
            if not c1 or not c2:
                continue
            s = unweighted_jaccard(UnweightedSet(c1), UnweightedSet(c2))
            w = weighted_jaccard(WeightedSet({k: float(v) for k, v in c1.items()}),
                                 WeightedSet({k: float(v) for k, v in c2.items()}))
            assert s == pytest.approx(w, rel=1e-12)


class TestEstimateResult:
    def test_exclusive_variants(self):
        ok = EstimateResult.similarity(0.5, 2)
        assert not ok.is_below_threshold
        below = EstimateResult.below(0.5)
        assert below.is_below_threshold and below.threshold == 0.5
        with pytest.raises(ValueError):
            EstimateResult(0.5, 2, 0.5)
        with pytest.raises(ValueError):
            EstimateResult(None, None, None)
        with pytest.raises(ValueError):
            EstimateResult(0.5, None, None)


class TestTextFormat:
    def test_round_trip(self):
        w = WeightedSet({"token one": 1.5, "b": 2.0, "ünicode": 0.125})
        buf = io.StringIO()
        write_weighted_set(w, buf)
        buf.seek(0)
        assert read_weighted_set(buf) == w

    def test_blank_lines_skipped(self):
        w = read_weighted_set(io.StringIO("a\t1.0\n\n  \nb\t2\n"))
        assert w == WeightedSet({"a": 1.0, "b": 2.0})

    def test_errors_carry_line_numbers(self):
        with pytest.raises(ValueError, match="line 2"):
            read_weighted_set(io.StringIO("a\t1.0\nbroken\n"))
        with pytest.raises(ValueError, match="line 3"):
            read_weighted_set(io.StringIO("a\t1.0\nb\t2.0\na\t3.0\n"))
        with pytest.raises(ValueError, match="line 1"):
            read_weighted_set(io.StringIO("a\t-2\n"))
        with pytest.raises(ValueError, match="line 1"):
            read_weighted_set(io.StringIO("a\tnan\n"))

    def test_weight_precision_survives(self):
        w = WeightedSet({"a": 0.1 + 0.2})
        buf = io.StringIO()
        write_weighted_set(w, buf)
        buf.seek(0)
        assert read_weighted_set(buf)["a"] == 0.1 + 0.2
