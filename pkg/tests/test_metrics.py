"""Tests for accuracy and the assignment-based clustering score."""

import itertools

import numpy as np
import pytest

from altsom import (
    accuracy,
    clustering_error,
    contingency_table,
    optimal_assignment,
)


def brute_force_best_matching(costs: np.ndarray) -> float:
    """Exhaustive maximum trace-sum over all permutations."""
    n = costs.shape[0]
    return max(
        sum(costs[i, p[i]] for i in range(n))
        for p in itertools.permutations(range(n))
    )


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_all_abstentions_score_zero(self):
        assert accuracy([None, None], [1, 2]) == 0.0

    def test_three_of_four(self):
        assert accuracy([1, 2, 3, 0], [1, 2, 3, 9]) == 0.75

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([1], [1, 2])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestContingencyTable:
    def test_counts_sum_to_n(self):
        table = contingency_table([0, 0, 1, 2], ["a", "b", "b", "a"])
        assert table.counts.sum() == table.n == 4
        assert table.counts.shape == (3, 2)


class TestOptimalAssignment:
    def test_identity_on_diagonal_dominant(self):
        perm = optimal_assignment(np.array([[5.0, 0.0], [0.0, 5.0]]))
        assert list(perm) == [0, 1]

    def test_swap_beats_diagonal(self):
        costs = np.array([[0.0, 3.0], [3.0, 0.0]])
        perm = optimal_assignment(costs)
        assert list(perm) == [1, 0]
        assert costs[[0, 1], perm].sum() == 6.0

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            optimal_assignment(np.zeros((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            optimal_assignment(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_matches_brute_force_on_random_tables(self):
        rng = np.random.default_rng(61)
        for _ in range(200):
            costs = rng.integers(0, 50, size=(6, 6)).astype(float)
            perm = optimal_assignment(costs)
            value = costs[np.arange(6), perm].sum()
            assert value == brute_force_best_matching(costs)


class TestClusteringError:
    def test_bijective_relabeling_is_perfect(self):
        truth = [0, 1, 2, 0, 1, 2]
        assignments = ["x", "y", "z", "x", "y", "z"]
        assert clustering_error(assignments, truth) == 1.0

    def test_one_cluster_for_two_classes(self):
        assert clustering_error([7] * 10, [0] * 5 + [1] * 5) == 0.5

    def test_table_reference_value(self):
        # 3 clusters over 2 classes: best matching pairs the two largest
        assignments = [0, 0, 0, 1, 1, 2, 2, 2, 2, 2]
        truth = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]
        # cluster0 -> class0 (3) + cluster2 -> class1 (5) = 8 of 10
        assert clustering_error(assignments, truth) == 0.8

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(67)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            assignments = rng.integers(0, 5, n)
            truth = rng.integers(0, 4, n)
            base = clustering_error(list(assignments), list(truth))
            cluster_perm = rng.permutation(5)
            class_perm = rng.permutation(4)
            relabeled = clustering_error(
                [int(cluster_perm[a]) for a in assignments],
                [int(class_perm[t]) for t in truth],
            )
            assert relabeled == pytest.approx(base, abs=1e-12)

    def test_at_most_one_with_equality_iff_bijective(self):
        rng = np.random.default_rng(71)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            assignments = rng.integers(0, 4, n)
            truth = rng.integers(0, 4, n)
            score = clustering_error(list(assignments), list(truth))
            assert score <= 1.0 + 1e-12
            mapping = {}
            bijective = True
            for a, t in zip(assignments, truth):
                if mapping.setdefault(a, t) != t:
                    bijective = False
                    break
            if bijective:
                values = list(mapping.values())
                bijective = len(values) == len(set(values))
            assert (score == pytest.approx(1.0)) == bijective

    def test_matches_brute_force_for_small_tables(self):
        rng = np.random.default_rng(73)
        for _ in range(120):
            k_pred = int(rng.integers(1, 8))
            k_true = int(rng.integers(1, 8))
            n = int(rng.integers(1, 60))
            assignments = rng.integers(0, k_pred, n)
            truth = rng.integers(0, k_true, n)
            table = contingency_table(list(assignments), list(truth))
            k = max(table.counts.shape)
            padded = np.zeros((k, k))
            padded[: table.counts.shape[0], : table.counts.shape[1]] = table.counts
            expected = brute_force_best_matching(padded) / n
            assert clustering_error(list(assignments), list(truth)) == pytest.approx(expected)

    def test_single_class_identity(self):
        assert clustering_error([4, 4, 4], ["a", "a", "a"]) == 1.0
        assert accuracy(["a", "a", "a"], ["a", "a", "a"]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            clustering_error([1, 2], [1])
