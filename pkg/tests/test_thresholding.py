import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ntot.rip import exact_ric, lemma2_check
from ntot.thresholding import (OracleTooLarge, exact_optimal_threshold, hard_threshold,
                               support_of, top_k_support)


def test_hard_threshold_examples():
    assert np.array_equal(hard_threshold(np.array([3.0, -1, 0, 2]), 2), [3, 0, 0, 2])
    x = np.array([0.0, 1.5, 0, -2])
    assert np.array_equal(hard_threshold(x, 3), x)
    assert np.array_equal(hard_threshold(np.array([1.0, -1, 1]), 2), [1, -1, 0])


def test_top_k_examples():
    assert top_k_support(np.array([0.0, 5, 0, -7]), 1).tolist() == [3]
    assert top_k_support(np.zeros(4), 2).tolist() == [0, 1]
    assert top_k_support(np.array([2.0, 2.0]), 1).tolist() == [0]
    assert top_k_support(np.ones(3), 0).size == 0


finite = st.floats(-100, 100, allow_subnormal=False)


@given(arrays(np.float64, st.integers(1, 20), elements=st.sampled_from([-2.0, -1, 0, 1, 2, 3])
              | finite), st.data())
def test_hard_threshold_properties(x, data):
    k = data.draw(st.integers(0, x.size))
    h = hard_threshold(x, k)
    S = top_k_support(x, k)
    assert S.size == k and np.all(np.diff(S) > 0)
    assert np.count_nonzero(h) <= k
    assert np.array_equal(h[S], x[S])
    # every kept magnitude dominates every dropped one
    dropped = np.setdiff1d(np.arange(x.size), S)
    if k and dropped.size:
        assert np.abs(x[S]).min() >= np.abs(x[dropped]).max()
    assert np.array_equal(hard_threshold(h, k), h)
    # reference: sort by (-|x_i|, i)
    ref = sorted(range(x.size), key=lambda i: (-abs(x[i]), i))[:k]
    assert S.tolist() == sorted(ref)


def test_support_of():
    assert support_of(np.array([0, 1.0, 0, -3])).tolist() == [1, 3]


def test_exact_ot_examples():
    w, obj = exact_optimal_threshold(np.eye(2), np.array([1.0, 0]), np.array([1.0, 0]), 1)
    assert np.array_equal(w, [1, 0]) and obj == 0
    y = np.array([1.0, 2.0, 2.0])
    w, obj = exact_optimal_threshold(np.ones((3, 5)), np.zeros(5), y, 2)
    assert np.array_equal(w, [1, 1, 0, 0, 0]) and obj == pytest.approx(9.0)


def double_loop(A, u, y, k):
    assert k == 2
    n = u.size
    best, arg = np.inf, None
    for i in range(n):
        for j in range(i + 1, n):
            r = y - A[:, i] * u[i] - A[:, j] * u[j]
            if r @ r < best:
                best, arg = r @ r, (i, j)
    return best, arg


def test_exact_ot_matches_double_loop():
    r = np.random.default_rng(8)
    for _ in range(25):
        A = r.standard_normal((5, 8))
        u, y = r.standard_normal(8), r.standard_normal(5)
        w, obj = exact_optimal_threshold(A, u, y, 2)
        best, arg = double_loop(A, u, y, 2)
        assert tuple(np.flatnonzero(w)) == arg
        assert obj == pytest.approx(best, rel=1e-12, abs=1e-12)


def test_exact_ot_guard():
    with pytest.raises(OracleTooLarge):
        exact_optimal_threshold(np.ones((2, 40)), np.ones(40), np.ones(2), 10, guard=1000)


def test_exact_ot_k_zero():
    w, obj = exact_optimal_threshold(np.eye(2), np.ones(2), np.array([3.0, 4.0]), 0)
    assert not w.any() and obj == pytest.approx(25.0)


def test_lemma2_bound_on_enumerable_instances():
    r = np.random.default_rng(9)
    checked = 0
    while checked < 20:
        A = r.standard_normal((7, 9)) / np.sqrt(7)
        if exact_ric(A, 2).delta >= 1:
            continue
        x = np.zeros(9)
        x[r.integers(9)] = r.standard_normal()
        w_hat = (x != 0).astype(float)
        c = lemma2_check(A, x, 0.01 * r.standard_normal(7), x + 0.3 * r.standard_normal(9),
                         1, w_hat)
        assert not c.skipped and c.holds()
        checked += 1


def test_lemma2_skips_uncovered_support():
    x = np.array([1.0, 0, 0])
    c = lemma2_check(np.eye(3), x, np.zeros(3), x, 1, np.array([0.0, 1, 0]))
    assert c.skipped
