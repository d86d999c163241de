"""Evaluation measures: classification accuracy and clustering agreement.

The clustering score matches predicted clusters one-to-one to true
classes so as to maximize the number of agreeing samples, then reports
the matched fraction (higher is better).  Cluster and class ids may be
arbitrary hashables; only the induced partitions matter.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class ContingencyTable:
    """Cluster-by-class co-occurrence counts over n samples."""

    counts: np.ndarray
    n: int


def contingency_table(assignments: Sequence, truth: Sequence) -> ContingencyTable:
    """Build the k_pred x k_true count matrix for two labelings."""
    if len(assignments) != len(truth):
        raise ValueError(
            f"length mismatch: {len(assignments)} assignments vs {len(truth)} truths")
    if len(truth) == 0:
        raise ValueError("need at least one sample")
    cluster_index = {c: i for i, c in enumerate(dict.fromkeys(assignments))}
    class_index = {c: i for i, c in enumerate(dict.fromkeys(truth))}
    counts = np.zeros((len(cluster_index), len(class_index)), dtype=np.int64)
    for a, t in zip(assignments, truth):
        counts[cluster_index[a], class_index[t]] += 1
    return ContingencyTable(counts=counts, n=len(truth))


def accuracy(predicted: Sequence, truth: Sequence) -> float:
    """Fraction of positions with a present, correct prediction.

    ``None`` predictions (abstentions) count as wrong.
    """
    if len(predicted) != len(truth):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths")
    if len(truth) == 0:
        raise ValueError("need at least one sample")
    hits = sum(1 for p, t in zip(predicted, truth) if p is not None and p == t)
    return hits / len(truth)


def optimal_assignment(costs: np.ndarray) -> np.ndarray:
    """Permutation p maximizing sum_i costs[i, p[i]] on a square matrix."""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {costs.shape}")
    if not np.all(np.isfinite(costs)):
        raise ValueError("cost matrix entries must be finite")
    _, cols = linear_sum_assignment(costs, maximize=True)
    return cols


def clustering_error(assignments: Sequence, truth: Sequence) -> float:
    """Matched fraction under the best one-to-one cluster-to-class map.

    The contingency table is zero-padded to square (surplus clusters or
    classes match nothing), an optimal assignment maximizes the total
    matched count, and the result is matched / n in [0, 1].
    """
    table = contingency_table(assignments, truth)
    k = max(table.counts.shape)
    padded = np.zeros((k, k), dtype=np.float64)
    padded[: table.counts.shape[0], : table.counts.shape[1]] = table.counts
    perm = optimal_assignment(padded)
    matched = padded[np.arange(k), perm].sum()
    return float(matched / table.n)
