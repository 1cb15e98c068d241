"""Tie-aware ranking and Spearman rank correlation.

Spearman is defined as the Pearson correlation of average-tie ranks; the
popular ``1 - 6*sum(d^2)/(n*(n^2-1))`` shortcut is only valid without ties
and is deliberately not used here.
"""

from __future__ import annotations

import numpy as np


def rank_average(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they span."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("rank_average needs a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("rank_average: all values must be finite")
    order = np.argsort(arr, kind="mergesort")
    sorted_vals = arr[order]
    new_group = np.empty(arr.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = sorted_vals[1:] != sorted_vals[:-1]
    group_ids = np.cumsum(new_group) - 1
    counts = np.bincount(group_ids)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    mean_ranks = starts + (counts + 1) / 2.0
    ranks = np.empty(arr.size, dtype=np.float64)
    ranks[order] = mean_ranks[group_ids]
    return ranks


def spearman(a, b) -> float:
    """Spearman rank correlation in [-1, 1].

    Raises on length mismatch, length < 2, non-finite input, or a constant
    sequence (the correlation is undefined there).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 1 or a.size < 2:
        raise ValueError("spearman needs two 1-d sequences of length >= 2")
    ra = rank_average(a)
    rb = rank_average(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    denom_a = float(da @ da)
    denom_b = float(db @ db)
    if denom_a == 0.0 or denom_b == 0.0:
        raise ValueError("spearman undefined for a constant sequence")
    rho = float(da @ db) / np.sqrt(denom_a * denom_b)
    return float(min(1.0, max(-1.0, rho)))


__all__ = ["rank_average", "spearman"]
