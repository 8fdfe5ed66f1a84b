"""Hard thresholding, top-k supports, and exhaustive optimal k-thresholding.

Supports are sorted ``intp`` arrays.  Equal magnitudes are resolved in
favour of the lower index everywhere, so reruns are bit-identical.
"""
from itertools import combinations
from math import comb

import numpy as np

__all__ = [
    "OracleTooLarge",
    "EXACT_OT_GUARD",
    "top_k_support",
    "hard_threshold",
    "support_of",
    "exact_optimal_threshold",
]

EXACT_OT_GUARD = 2_000_000
_CHUNK = 65_536


class OracleTooLarge(ValueError):
    """Raised when an exhaustive enumeration would exceed its guard."""


def top_k_support(x, k):
    x = np.asarray(x, dtype=np.float64)
    k = min(int(k), x.size)
    if k <= 0:
        return np.empty(0, dtype=np.intp)
    # stable sort on -|x| keeps the lower index first among ties
    order = np.argsort(-np.abs(x), kind="stable")
    return np.sort(order[:k]).astype(np.intp)


def hard_threshold(x, k):
    """Keep the ``k`` largest-magnitude entries of ``x``, zero the rest."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    S = top_k_support(x, k)
    out[S] = x[S]
    return out


def support_of(x):
    return np.flatnonzero(np.asarray(x)).astype(np.intp)


def exact_optimal_threshold(A, u, y, k, guard=EXACT_OT_GUARD):
    """Binary mask ``w`` with ``sum(w) == k`` minimizing ``||y - A(u*w)||^2``.

    Every support is enumerated in lexicographic order; the first minimizer
    wins ties.  Returns ``(w, objective)``.  Intended as an oracle for small
    instances only; ``C(n, k) > guard`` raises :class:`OracleTooLarge`.
    """
    A = np.asarray(A, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = A.shape[1]
    k = int(k)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if comb(n, k) > guard:
        raise OracleTooLarge(f"C({n}, {k}) = {comb(n, k)} exceeds guard {guard}")
    w = np.zeros(n)
    if k == 0:
        return w, float(y @ y)

    B = A * u  # columns scaled by u
    best_obj, best_supp = np.inf, None
    it = combinations(range(n), k)
    while True:
        block = np.fromiter((i for c in _take(it, _CHUNK) for i in c), dtype=np.intp)
        if block.size == 0:
            break
        supp = block.reshape(-1, k)
        R = y[:, None] - B[:, supp].sum(axis=2)
        obj = np.einsum("ij,ij->j", R, R)
        j = int(np.argmin(obj))
        if obj[j] < best_obj:
            best_obj, best_supp = obj[j], supp[j]
    w[best_supp] = 1.0
    r = y - A @ (u * w)
    return w, float(r @ r)


def _take(it, count):
    for _, c in zip(range(count), it):
        yield c
