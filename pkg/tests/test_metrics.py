"""Rank / correlation tests against brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from memfuse.metrics import rank_average, spearman


# ---------------------------------------------------------------------------
# oracles (deliberately dumb O(n^2) implementations)

def rank_oracle(values):
    values = list(values)
    ranks = []
    for v in values:
        below = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        ranks.append(below + (equal + 1) / 2.0)
    return np.asarray(ranks)


def spearman_oracle(a, b):
    ra, rb = rank_oracle(a), rank_oracle(b)
    return float(np.corrcoef(ra, rb)[0, 1])


def d2_shortcut(a, b):
    # valid only without ties
    ra, rb = rank_oracle(a), rank_oracle(b)
    n = len(ra)
    return 1.0 - 6.0 * float(np.sum((ra - rb) ** 2)) / (n * (n * n - 1))


# ---------------------------------------------------------------------------
# rank_average

def test_rank_strict_order():
    np.testing.assert_array_equal(rank_average([10, 20, 30]), [1.0, 2.0, 3.0])


def test_rank_average_ties():
    np.testing.assert_array_equal(rank_average([1, 1, 2]), [1.5, 1.5, 3.0])


def test_rank_all_tied():
    np.testing.assert_array_equal(rank_average([5, 5, 5, 5]), [2.5, 2.5, 2.5, 2.5])


def test_rank_matches_oracle_randomly():
    rng = np.random.default_rng(42)
    for _ in range(100):
        v = rng.integers(0, 10, size=30).astype(float)  # heavy ties
        np.testing.assert_allclose(rank_average(v), rank_oracle(v), rtol=0, atol=0)


def test_rank_sum_invariant():
    rng = np.random.default_rng(7)
    for _ in range(50):
        v = rng.integers(0, 5, size=25).astype(float)
        n = len(v)
        assert math.isclose(float(rank_average(v).sum()), n * (n + 1) / 2)


def test_rank_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        rank_average([])
    with pytest.raises(ValueError):
        rank_average([1.0, float("nan")])


# ---------------------------------------------------------------------------
# spearman

def test_spearman_known_value_with_tie():
    # hand computation: ranks a = [1, 2.5, 2.5, 4]; rho = 4.5 / sqrt(22.5)
    rho = spearman([1, 2, 2, 3], [1, 2, 3, 4])
    assert abs(rho - 4.5 / math.sqrt(22.5)) < 1e-15
    assert abs(rho - 0.9486832980505138) < 1e-15


def test_spearman_perfect_and_reversed():
    a = [0.1, 0.5, 0.7, 2.0, 3.5]
    assert spearman(a, a) == 1.0
    assert spearman(a, a[::-1]) == -1.0


def test_spearman_oracle_equivalence_200_pairs():
    rng = np.random.default_rng(2024)
    for i in range(200):
        a = rng.normal(size=50)
        b = 0.6 * a + 0.8 * rng.normal(size=50)
        if i % 2:  # plant ties in half the cases
            a = np.round(a, 1)
            b = np.round(b, 1)
        assert abs(spearman(a, b) - spearman_oracle(a, b)) < 1e-10


def test_spearman_tie_free_shortcut():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.permutation(40).astype(float)  # distinct by construction
        b = rng.normal(size=40)
        assert len(set(b.tolist())) == 40
        assert abs(spearman(a, b) - d2_shortcut(a, b)) < 1e-12


def test_spearman_errors():
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1.0], [2.0])
    with pytest.raises(ValueError):
        spearman([3, 3, 3], [1, 2, 3])  # constant sequence
    with pytest.raises(ValueError):
        spearman([1, 2, float("inf")], [1, 2, 3])


def test_spearman_scipy_crosscheck():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = rng.integers(0, 8, size=60).astype(float)
        b = rng.integers(0, 8, size=60).astype(float)
        if len(set(a.tolist())) < 2 or len(set(b.tolist())) < 2:
            continue
        expected = scipy_stats.spearmanr(a, b).statistic
        assert abs(spearman(a, b) - expected) < 1e-12


@given(
    arrays(np.float64, st.integers(5, 40), elements=st.floats(-100, 100)),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_spearman_symmetry_and_bounds(a, seed):
    if len(set(a.tolist())) < 2:
        return
    b = np.random.default_rng(seed).normal(size=a.size)
    r1, r2 = spearman(a, b), spearman(b, a)
    assert r1 == r2
    assert -1.0 <= r1 <= 1.0


@given(
    st.lists(st.integers(-500, 500), min_size=5, max_size=30).map(
        lambda xs: np.asarray(xs, dtype=np.float64)
    )
)
@settings(max_examples=60, deadline=None)
def test_spearman_monotone_transform_invariance(a):
    # integer-valued inputs keep both transforms injective in float64,
    # so the rank structure is preserved exactly
    if len(set(a.tolist())) < 2:
        return
    b = np.arange(a.size, dtype=float)
    base = spearman(a, b)
    assert abs(spearman(np.exp(a / 50.0), b) - base) < 1e-12
    assert abs(spearman(3.0 * a + 7.0, b) - base) < 1e-12
