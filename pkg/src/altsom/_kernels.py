"""Compiled inner loops for the per-presentation math.

Training presents patterns one at a time, so the hot path is dominated by
many tiny array operations; these kernels run them as single compiled
calls over rows of the map's storage matrices.  Every public operation in
:mod:`altsom.core` routes through the same kernel as the training loop,
so there is exactly one implementation of each formula.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def activations_into(centers, omegas, n, x, eps_act, out):
    """Radial-basis activation of rows 0..n-1 for pattern ``x``."""
    m = x.shape[0]
    for i in range(n):
        omega_sum = 0.0
        dist = 0.0
        for j in range(m):
            w = omegas[i, j]
            d = x[j] - centers[i, j]
            omega_sum += w
            dist += w * d * d
        out[i] = omega_sum / (omega_sum + np.sqrt(dist) + eps_act)


@njit(cache=True)
def update_relevance_rows(centers, omegas, deltas, delta_hats, rows, ts, x,
                          beta, slope, omega_tiny):
    """Distance-average and relevance refresh for the given rows.

    For each row: fold |x - c| into the moving average, divide by
    (1 - beta^t) for the bias-corrected estimate, then recompute the
    relevances through the logistic of the corrected distances:
    dimensions observed tighter than the row's mean approach relevance 1,
    looser ones approach 0, and all relevances are exactly 1 when the
    corrected distances coincide.  ``ts`` holds the already-incremented
    counters.
    """
    m = x.shape[0]
    for k in range(rows.shape[0]):
        r = rows[k]
        bias = 1.0 - beta ** ts[k]
        d_min = np.inf
        d_max = -np.inf
        d_sum = 0.0
        for j in range(m):
            diff = x[j] - centers[r, j]
            if diff < 0.0:
                diff = -diff
            d = beta * deltas[r, j] + (1.0 - beta) * diff
            deltas[r, j] = d
            dh = d / bias
            delta_hats[r, j] = dh
            d_sum += dh
            if dh < d_min:
                d_min = dh
            if dh > d_max:
                d_max = dh
        if d_min == d_max:
            for j in range(m):
                omegas[r, j] = 1.0
        else:
            mean = d_sum / m
            span = slope * (d_max - d_min)
            for j in range(m):
                w = 1.0 / (1.0 + np.exp((delta_hats[r, j] - mean) / span))
                omegas[r, j] = w if w > omega_tiny else omega_tiny


@njit(cache=True)
def move_center_rows(centers, rows, x, lrs):
    """Move each row's center toward ``x`` by its learning rate."""
    m = x.shape[0]
    for k in range(rows.shape[0]):
        r = rows[k]
        lr = lrs[k]
        for j in range(m):
            centers[r, j] += lr * (x[j] - centers[r, j])


@njit(cache=True)
def accepts(center, omega, delta_hat, x, var_floor):
    """Open-interval membership of ``x`` in the relaxed-variance box."""
    for j in range(x.shape[0]):
        dh = delta_hat[j]
        if dh < var_floor:
            dh = var_floor
        d = x[j] - center[j]
        if d < 0.0:
            d = -d
        if not d < dh / omega[j]:
            return False
    return True


@njit(cache=True)
def peer_mask_into(omegas, labels, n, row, minwd, out):
    """Mark rows with similar relevances and a compatible class."""
    m = omegas.shape[1]
    row_label = labels[row]
    for i in range(n):
        acc = 0.0
        for j in range(m):
            d = omegas[i, j] - omegas[row, j]
            acc += d if d >= 0.0 else -d
        compatible = labels[i] == row_label or labels[i] == -1 or row_label == -1
        out[i] = compatible and (acc / m) < minwd
    out[row] = False
