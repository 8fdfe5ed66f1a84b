"""Exact restricted isometry constants and recovery-guarantee certificates.

Everything here is exponential in the support size and meant for small
(desk-scale) matrices: it turns the convergence guarantees into numbers
that can be checked against actual solver runs.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, sqrt
from typing import Optional

import numpy as np

from .linalg import NewtonOperator, SpectralBounds, spectral_extremes
from .thresholding import OracleTooLarge, exact_optimal_threshold, support_of, top_k_support

__all__ = [
    "RIC_GUARD",
    "DELTA_BOUNDS",
    "RICResult",
    "TheoremCertificate",
    "InequalityCheck",
    "ContractionReport",
    "exact_ric",
    "default_parameters",
    "theorem1_certificate",
    "theorem2_certificate",
    "theorem3_certificate",
    "certificate",
    "replay_contraction",
    "tail_bound_check",
    "lemma1_check",
    "lemma2_check",
    "make_certified_instance",
]

RIC_GUARD = 200_000
# thm id -> (order multiple of k that is bounded, bound)
DELTA_BOUNDS = {1: (2, 0.5349), 2: (3, 0.2119), 3: (3, 0.2)}
_BATCH = 20_000


@dataclass(frozen=True)
class RICResult:
    order: int
    delta: float
    witness_support: tuple
    supports_enumerated: int


def exact_ric(A, q, guard=RIC_GUARD):
    """Restricted isometry constant of order ``q`` by full enumeration.

    ``delta_q`` is the max over all ``|S| = q`` of ``max(lmax - 1, 1 - lmin)``
    for the Gram block ``A_S^T A_S``; the first support (lexicographic)
    attaining it is kept as witness.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[1]
    q = min(int(q), n)
    if q <= 0:
        return RICResult(0, 0.0, (), 0)
    total = comb(n, q)
    if total > guard:
        raise OracleTooLarge(f"C({n}, {q}) = {total} exceeds RIC guard {guard}")
    G = A.T @ A
    best, witness = -np.inf, None
    it = combinations(range(n), q)
    while True:
        block = np.array([c for _, c in zip(range(_BATCH), it)], dtype=np.intp)
        if block.size == 0:
            break
        sub = G[block[:, :, None], block[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        dev = np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0])
        j = int(np.argmax(dev))
        if dev[j] > best:
            best, witness = dev[j], tuple(int(i) for i in block[j])
    return RICResult(q, float(max(best, 0.0)), witness, total)


def default_parameters(A, lam, sigma=None):
    """``eps = max(s1^2 + 1, lam - sm^2)``; guarantees ``eps > s1^2`` and
    ``lam <= eps + sm^2``."""
    sigma = sigma or spectral_extremes(A)
    return max(sigma.sigma_max ** 2 + 1.0, lam - sigma.sigma_min ** 2)


@dataclass(frozen=True)
class TheoremCertificate:
    theorem_id: int
    k: int
    eps: float
    lam: float
    delta_values: dict
    sigma: SpectralBounds
    eps_lower_bound: float
    lambda_interval: tuple
    rho: float
    tau: float
    delta_ok: bool
    eps_ok: bool
    lambda_ok: bool
    valid: bool

    def to_text(self):
        lo, hi = self.lambda_interval
        lines = [
            f"theorem={self.theorem_id}",
            f"k={self.k}",
            *(f"delta_{q}k={d:.17g}" for q, d in sorted(self.delta_values.items())),
            f"sigma_max={self.sigma.sigma_max:.17g}",
            f"sigma_min={self.sigma.sigma_min:.17g}",
            f"eps={self.eps:.17g}",
            f"lambda={self.lam:.17g}",
            f"eps_lower_bound={_fmt(self.eps_lower_bound)}",
            f"lambda_interval=({_fmt(lo)}, {_fmt(hi)}]",
            f"rho={_fmt(self.rho)}",
            f"tau={_fmt(self.tau)}",
            f"delta_condition={'ok' if self.delta_ok else 'violated'}"
            f" (delta_{DELTA_BOUNDS[self.theorem_id][0]}k < {DELTA_BOUNDS[self.theorem_id][1]})",
            f"eps_condition={'ok' if self.eps_ok else 'violated'}",
            f"lambda_condition={'ok' if self.lambda_ok else 'violated'}",
            f"valid={'true' if self.valid else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def _fmt(v):
    return f"{v:.17g}" if np.isfinite(v) else ("inf" if v > 0 else "-inf")


def _deltas(A, k, orders, deltas):
    out = dict(deltas or {})
    for q in orders:
        if q not in out:
            out[q] = exact_ric(A, q * k).delta
    return out


def _ranges(c, dbound, s1sq, smsq, eps):
    """eps lower bound and lambda interval shared by all three theorems.

    ``c`` is the theorem's constant (the reciprocal of the factor in front of
    ``delta + s1^2 - lam s1^2/(eps + s1^2)``) and ``dbound`` the delta
    entering it.
    """
    gap = c - dbound
    if gap > 0 and s1sq > 0:
        eps_lo = max(s1sq, ((s1sq - smsq) / gap - 1.0) * s1sq)
        lam_lo = eps + s1sq + (dbound - c) * (eps + s1sq) / s1sq
    else:
        eps_lo, lam_lo = np.inf, np.inf
    return eps_lo, (lam_lo, eps + smsq)


def _shrink(s1sq, eps, lam):
    # s1^2 - lam s1^2 / (eps + s1^2)
    return s1sq - lam * s1sq / (eps + s1sq)


def _finish(tid, k, eps, lam, d, sigma, eps_lo, interval, rho, tau):
    order, bound = DELTA_BOUNDS[tid]
    delta_ok = d[order] < bound
    eps_ok = eps > eps_lo
    lambda_ok = interval[0] < lam <= interval[1]
    valid = bool(delta_ok and eps_ok and lambda_ok and rho < 1.0)
    return TheoremCertificate(tid, k, float(eps), float(lam), d, sigma, float(eps_lo),
                              (float(interval[0]), float(interval[1])), float(rho),
                              float(tau), bool(delta_ok), bool(eps_ok), bool(lambda_ok), valid)


def theorem1_certificate(A, k, eps, lam, deltas=None, sigma=None):
    """Guarantee for exhaustive optimal thresholding (NTOT).

    Needs ``delta_2k < 0.5349``.  ``tau`` uses ``sigma_1`` (not its square)
    in the noise term, as derived in the proof.
    """
    sigma = sigma or spectral_extremes(A)
    d = _deltas(A, k, (1, 2), deltas)
    dk, d2k = d[1], d[2]
    s1, s1sq, smsq = sigma.sigma_max, sigma.sigma_max ** 2, sigma.sigma_min ** 2
    c = sqrt(max(1.0 - d2k, 0.0) / (1.0 + dk))
    eps_lo, interval = _ranges(c, d2k, s1sq, smsq, eps)
    if d2k < 1.0:
        rho = sqrt((1.0 + dk) / (1.0 - d2k)) * (d2k + _shrink(s1sq, eps, lam))
        tau = (lam * s1 * sqrt(1.0 + dk) / (eps + s1sq) + 2.0) / sqrt(1.0 - d2k)
    else:
        rho = tau = np.inf
    return _finish(1, k, eps, lam, d, sigma, eps_lo, interval, rho, tau)


def theorem2_certificate(A, k, eps, lam, deltas=None, sigma=None):
    """Guarantee for relaxed optimal thresholding (NTROT); ``delta_3k < 0.2119``."""
    sigma = sigma or spectral_extremes(A)
    d = _deltas(A, k, (1, 2, 3), deltas)
    dk, d2k, d3k = d[1], d[2], d[3]
    s1, s1sq, smsq = sigma.sigma_max, sigma.sigma_max ** 2, sigma.sigma_min ** 2
    if d3k < 1.0:
        c = 1.0 / (3.0 * sqrt((1.0 + d3k) / (1.0 - d3k)) + 1.0)
    else:
        c = 0.0
    eps_lo, interval = _ranges(c, d3k, s1sq, smsq, eps)
    sh = _shrink(s1sq, eps, lam)
    if d2k < 1.0:
        r = sqrt((1.0 + dk) / (1.0 - d2k))
        rho = r * (d2k + 2.0 * d3k + 3.0 * sh) + d3k + sh
        tau = (3.0 * lam * s1 * sqrt(1.0 + dk) / (eps + s1sq) + 2.0) / sqrt(1.0 - d2k) \
            + lam * s1 / (eps + s1sq)
    else:
        rho = tau = np.inf
    return _finish(2, k, eps, lam, d, sigma, eps_lo, interval, rho, tau)


def theorem3_certificate(A, k, eps, lam, deltas=None, sigma=None):
    """Guarantee for relaxed optimal thresholding with pursuit (NTROTP);
    ``delta_3k < 0.2``."""
    sigma = sigma or spectral_extremes(A)
    d = _deltas(A, k, (1, 2, 3), deltas)
    dk, d2k, d3k = d[1], d[2], d[3]
    s1, s1sq, smsq = sigma.sigma_max, sigma.sigma_max ** 2, sigma.sigma_min ** 2
    if d3k < 1.0:
        factor = 3.0 / (1.0 - d3k) + 1.0 / sqrt(1.0 - d3k * d3k)
        c = 1.0 / factor
    else:
        factor, c = np.inf, 0.0
    eps_lo, interval = _ranges(c, d3k, s1sq, smsq, eps)
    rho = factor * (d3k + _shrink(s1sq, eps, lam))
    if d2k < 1.0:
        tau = (sqrt(1.0 + dk) / (1.0 - d2k)
               + (3.0 * lam * s1 * sqrt(1.0 + dk) / (eps + s1sq) + 2.0)
               / ((1.0 - d2k) * sqrt(1.0 + d2k))
               + lam * s1 / ((eps + s1sq) * sqrt(1.0 - d2k * d2k)))
    else:
        tau = np.inf
    return _finish(3, k, eps, lam, d, sigma, eps_lo, interval, rho, tau)


_CERTS = {1: theorem1_certificate, 2: theorem2_certificate, 3: theorem3_certificate}
_THEOREM_OF = {"ntot": 1, "ntrot": 2, "ntrotp": 3}


def certificate(theorem_id, A, k, eps, lam, deltas=None, sigma=None):
    return _CERTS[theorem_id](A, k, eps, lam, deltas=deltas, sigma=sigma)


@dataclass
class ContractionReport:
    checked: int
    violations: int
    max_violation: float
    effective_noise: float
    errors: list = field(repr=False)
    geometric_checked: bool = False
    geometric_violations: int = 0

    @property
    def ok(self):
        return self.violations == 0 and self.geometric_violations == 0


def replay_contraction(result, problem, cert, slack=1e-8):
    """Check ``||x^{p+1} - x_S|| <= rho ||x^p - x_S|| + tau ||A x_Sbar + eta||``
    at every consecutive pair of iterates of ``result``.

    ``S`` is the top-k support of the ground truth.  When the effective noise
    is exactly zero the geometric bound ``||x^p - x|| <= rho^p ||x^0 - x||``
    is checked too.  Needs a run made with ``keep_iterates=True``.
    """
    if problem.x_true is None:
        raise ValueError("replay needs the ground truth x_true")
    if not cert.valid:
        raise ValueError("refusing to replay an invalid certificate")
    expected = _THEOREM_OF.get(result.variant)
    if expected is not None and expected != cert.theorem_id:
        raise ValueError(f"theorem {cert.theorem_id} does not cover {result.variant}")
    xs = [rec.x for rec in result.trace]
    if any(x is None for x in xs):
        raise ValueError("replay needs iterates; run with keep_iterates=True")
    x_true = np.asarray(problem.x_true, dtype=np.float64)
    S = top_k_support(x_true, problem.k)
    x_S = np.zeros_like(x_true)
    x_S[S] = x_true[S]
    # y = A x_S + eta'
    eff = float(np.linalg.norm(problem.y - problem.A @ x_S))
    errs = [float(np.linalg.norm(x - x_S)) for x in xs]
    worst, bad = -np.inf, 0
    for e0, e1 in zip(errs, errs[1:]):
        v = e1 - (cert.rho * e0 + cert.tau * eff)
        worst = max(worst, v)
        bad += v > slack
    report = ContractionReport(len(errs) - 1, int(bad), float(worst), eff, errs)
    if eff == 0.0:
        report.geometric_checked = True
        report.geometric_violations = int(sum(
            e > cert.rho ** p * errs[0] + slack for p, e in enumerate(errs)))
    return report


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    skipped: bool = False
    reason: str = ""

    def holds(self, slack=1e-9):
        return self.skipped or self.lhs <= self.rhs + slack


def tail_bound_check(A, eps, u, sigma=None):
    """``||(A^T A + eps I)^{-1} A^T u|| <= s1/(eps + s1^2) ||u||`` (needs eps >= s1^2)."""
    sigma = sigma or spectral_extremes(A)
    s1 = sigma.sigma_max
    if eps < s1 * s1:
        return InequalityCheck(np.nan, np.nan, True, "eps < sigma_max^2")
    lhs = float(np.linalg.norm(NewtonOperator(A, eps)(u)))
    return InequalityCheck(lhs, s1 / (eps + s1 * s1) * float(np.linalg.norm(u)))


def lemma1_check(A, eps, lam, u, Omega, t, delta_t=None, sigma=None):
    """Restricted bound on ``[(I - lam (A^T A + eps I)^{-1} A^T A) u]_Omega``.

    Skipped (flagged) when ``|Omega u supp(u)| > t``, ``eps <= s1^2`` or
    ``lam > eps + sm^2``.
    """
    sigma = sigma or spectral_extremes(A)
    s1sq, smsq = sigma.sigma_max ** 2, sigma.sigma_min ** 2
    Omega = np.asarray(Omega, dtype=np.intp)
    u = np.asarray(u, dtype=np.float64)
    if np.union1d(Omega, support_of(u)).size > t:
        return InequalityCheck(np.nan, np.nan, True, "|Omega u supp(u)| > t")
    if not eps > s1sq:
        return InequalityCheck(np.nan, np.nan, True, "eps <= sigma_max^2")
    if lam > eps + smsq:
        return InequalityCheck(np.nan, np.nan, True, "lam > eps + sigma_min^2")
    if delta_t is None:
        delta_t = exact_ric(A, t).delta
    v = u - lam * NewtonOperator(A, eps)(A @ u)
    lhs = float(np.linalg.norm(v[Omega]))
    rhs = (delta_t + _shrink(s1sq, eps, lam)) * float(np.linalg.norm(u))
    return InequalityCheck(lhs, rhs)


def lemma2_check(A, x_hat, eta, u, k, w_hat, delta_k=None, delta_2k=None):
    """Error of exhaustive optimal thresholding against a k-sparse ``x_hat``.

    ``w_hat`` is any binary k-sparse mask covering ``supp(x_hat)``; the
    measurements are ``A x_hat + eta``.
    """
    A = np.asarray(A, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    w_hat = np.asarray(w_hat, dtype=np.float64)
    if np.count_nonzero(x_hat) > k or np.count_nonzero(w_hat) > k:
        return InequalityCheck(np.nan, np.nan, True, "x_hat or w_hat not k-sparse")
    if not set(support_of(x_hat)) <= set(support_of(w_hat)):
        return InequalityCheck(np.nan, np.nan, True, "supp(x_hat) not covered by w_hat")
    if delta_k is None:
        delta_k = exact_ric(A, k).delta
    if delta_2k is None:
        delta_2k = exact_ric(A, 2 * k).delta
    if delta_2k >= 1.0:
        return InequalityCheck(np.nan, np.nan, True, "delta_2k >= 1")
    y = A @ x_hat + eta
    w, _ = exact_optimal_threshold(A, u, y, k)
    lhs = float(np.linalg.norm(u * w - x_hat))
    rhs = (sqrt((1.0 + delta_k) / (1.0 - delta_2k)) * float(np.linalg.norm((x_hat - u) * w_hat))
           + 2.0 / sqrt(1.0 - delta_2k) * float(np.linalg.norm(eta)))
    return InequalityCheck(lhs, rhs)


def _near_orthonormal(rng, m, n, jitter):
    # orthonormal rows whose null space is spanned by a nearly flat vector,
    # which keeps every column close to unit norm and delta_q small
    d = n - m
    N = np.ones((n, d)) + 0.1 * rng.standard_normal((n, d))
    N *= rng.choice([-1.0, 1.0], size=(n, 1))
    Q, _ = np.linalg.qr(np.hstack([N, rng.standard_normal((n, m))]))
    A = Q[:, d:].T.copy()
    return A + jitter * rng.standard_normal((m, n)) / np.sqrt(n)


_DEFAULT_SHAPE = {1: (9, 10), 2: (19, 20), 3: (19, 20)}


@dataclass(frozen=True)
class CertifiedInstance:
    A: np.ndarray
    eps: float
    lam: float
    cert: TheoremCertificate


def make_certified_instance(theorem_id, rng, shape=None, k=1, jitter=0.01,
                            max_tries=200) -> Optional[CertifiedInstance]:
    """Sample near-isometric matrices until ``theorem_id``'s conditions hold.

    ``eps`` is placed just above its lower bound and ``lam`` at the top of
    its admissible interval.  Returns ``None`` if nothing certifies within
    ``max_tries`` samples.
    """
    m, n = shape or _DEFAULT_SHAPE[theorem_id]
    orders = (1, 2) if theorem_id == 1 else (1, 2, 3)
    for _ in range(max_tries):
        A = _near_orthonormal(rng, m, n, jitter)
        sigma = spectral_extremes(A)
        d = {q: exact_ric(A, q * k).delta for q in orders}
        probe = certificate(theorem_id, A, k, sigma.sigma_max ** 2 + 1.0, 1.0, d, sigma)
        if not probe.delta_ok or not np.isfinite(probe.eps_lower_bound):
            continue
        eps = max(1.05 * probe.eps_lower_bound, sigma.sigma_max ** 2 + 0.5)
        lam = eps + sigma.sigma_min ** 2
        cert = certificate(theorem_id, A, k, eps, lam, d, sigma)
        if cert.valid:
            return CertifiedInstance(A, eps, lam, cert)
    return None
