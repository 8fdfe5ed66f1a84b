"""Relaxed optimal k-thresholding subproblem.

    minimize    ||y - A (u * w)||^2
    subject to  sum(w) == k,  0 <= w <= 1

solved by accelerated projected gradient (FISTA) with a function-value
restart, on top of an exact Euclidean projection onto the capped simplex.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg import NumericalFailure

__all__ = [
    "RelaxedOTProblem",
    "QPSolution",
    "project_capped_simplex",
    "solve_relaxed_ot",
]


def project_capped_simplex(v, k):
    """Euclidean projection of ``v`` onto ``{w : sum(w) = k, 0 <= w <= 1}``.

    The projection is ``clip(v - tau, 0, 1)`` for the unique ``tau`` with
    ``sum(...) == k``.  The clipped sum is piecewise linear in ``tau`` with
    breakpoints at ``v_i`` and ``v_i - 1``; it is evaluated at every
    breakpoint via prefix sums over sorted ``v`` and ``tau`` is read off by
    linear interpolation on the bracketing segment.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    if not 1 <= k <= n:
        raise ValueError(f"capped simplex is empty for k={k}, n={n}")
    if k == n:
        return np.ones(n)

    vs = np.sort(v)
    csum = np.concatenate(([0.0], np.cumsum(vs)))

    def clipped_sum(tau):
        lo = np.searchsorted(vs, tau, side="right")
        hi = np.searchsorted(vs, tau + 1.0, side="left")
        hi = np.maximum(hi, lo)
        return csum[hi] - csum[lo] - (hi - lo) * tau + (n - hi)

    bps = np.unique(np.concatenate((vs - 1.0, vs)))
    g = clipped_sum(bps)  # non-increasing in tau
    j = int(np.count_nonzero(g >= k)) - 1
    j = min(max(j, 0), bps.size - 2)
    g0, g1 = g[j], g[j + 1]
    if g0 == g1:
        tau = bps[j]
    else:
        tau = bps[j] + (g0 - k) / (g0 - g1) * (bps[j + 1] - bps[j])
    return np.clip(v - tau, 0.0, 1.0)


@dataclass(frozen=True)
class RelaxedOTProblem:
    A: np.ndarray
    u: np.ndarray
    y: np.ndarray
    k: int

    def __post_init__(self):
        m, n = np.shape(self.A)
        if np.shape(self.u) != (n,) or np.shape(self.y) != (m,):
            raise ValueError("inconsistent dimensions in relaxed OT problem")
        if not 1 <= self.k <= n:
            raise ValueError(f"k={self.k} outside [1, {n}]")


@dataclass
class QPSolution:
    w: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    history: list = field(default_factory=list, repr=False)


def _lipschitz(B, steps=100):
    # 2 * sigma_max(B)^2 by power iteration from a fixed generic start
    v = np.random.default_rng(0x5EED).standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    s2 = 0.0
    for _ in range(steps):
        Bv = B @ v
        s2 = Bv @ Bv
        w = B.T @ Bv
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    if s2 <= 0.0:
        s2 = np.sum(B * B)  # Frobenius bound; start vector fell in the null space
    return 2.0 * 1.01 * s2


def solve_relaxed_ot(p, tol=1e-8, max_iter=5000, warm_start=None, record=False):
    """Minimize the relaxed optimal-thresholding objective over the capped simplex.

    Parameters
    ----------
    p : RelaxedOTProblem
    tol : float
        Stop once the projected-gradient mapping ``||w - P(w - grad/L)||``
        is at most ``tol``.
    max_iter : int
    warm_start : array_like, optional
        Starting mask, projected to feasibility first.  Defaults to the
        uniform mask ``k/n``.
    record : bool
        Keep the accepted objective values in ``QPSolution.history``.

    Notes
    -----
    A candidate step that raises the objective triggers a momentum restart
    and a plain projected-gradient step from the current point, so the
    recorded objective sequence never increases.  If even the plain step
    fails to descend, the Lipschitz estimate is doubled.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A, u, y, k = p.A, p.u, p.y, p.k
    n = u.size
    w = np.full(n, k / n) if warm_start is None else np.asarray(warm_start, dtype=np.float64)
    w = project_capped_simplex(w, k)
    B = A * u
    if not np.any(B):
        return QPSolution(w, float(y @ y), 0, True, 0.0, [float(y @ y)] if record else [])

    L = _lipschitz(B)
    if not np.isfinite(L) or L <= 0:
        raise NumericalFailure("could not estimate the Lipschitz constant")

    r = y - B @ w
    f = r @ r
    g = -2.0 * (B.T @ r)
    g_prev, w_prev, beta = g, w, 0.0
    history = [f] if record else []
    t = 1.0
    kkt = np.inf
    it = 0
    while it < max_iter:
        pw = project_capped_simplex(w - g / L, k)
        kkt = np.linalg.norm(w - pw)
        if kkt <= tol:
            break
        it += 1
        # gradient is affine in w, so the extrapolated gradient is free
        z = w + beta * (w - w_prev)
        gz = g + beta * (g - g_prev)
        cand = project_capped_simplex(z - gz / L, k)
        rc = y - B @ cand
        fc = rc @ rc
        if fc > f:
            t, beta = 1.0, 0.0
            cand = pw
            rc = y - B @ cand
            fc = rc @ rc
            if fc > f:
                L *= 2.0
                continue
        gc = -2.0 * (B.T @ rc)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        t = t_new
        w_prev, g_prev = w, g
        w, r, f, g = cand, rc, fc, gc
        if record:
            history.append(f)
    if not np.isfinite(f):
        raise NumericalFailure("relaxed OT objective became non-finite")
    return QPSolution(w, float(f), it, bool(kkt <= tol), float(kkt), history)
