"""Dense linear-algebra kernels shared by the solvers.

Matrices and vectors are plain float64 numpy arrays; ``as_matrix`` and
``as_vector`` are the validating constructors used at every public entry
point.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

__all__ = [
    "NumericalFailure",
    "SpectralBounds",
    "NewtonOperator",
    "as_matrix",
    "as_vector",
    "matvec",
    "spectral_extremes",
    "newton_direction",
    "least_squares_on_support",
]

# relative cutoff on pivoted-QR diagonal entries
RANK_RTOL = 1e-12


class NumericalFailure(ArithmeticError):
    """A factorization or iteration produced unusable numbers."""


def as_matrix(A):
    A = np.array(A, dtype=np.float64, order="C", copy=True)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    A.setflags(write=False)
    return A


def as_vector(x, n=None):
    x = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    if n is not None and x.shape[0] != n:
        raise ValueError(f"expected length {n}, got {x.shape[0]}")
    return x


def matvec(A, x):
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.shape[1],):
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has shape {x.shape}")
    return A @ x


@dataclass(frozen=True)
class SpectralBounds:
    sigma_max: float
    sigma_min: float
    tol: float

    def __post_init__(self):
        if not self.sigma_max >= self.sigma_min >= 0.0:
            raise ValueError(f"bad spectral bounds {self.sigma_max}, {self.sigma_min}")


def spectral_extremes(A):
    """Largest and smallest singular value of ``A``.

    Symmetric eigen-solve of the smaller Gram matrix (``A A^T`` when
    m <= n), so ``sigma_min`` is the smallest of the ``min(m, n)`` singular
    values.  ``tol`` is the larger Rayleigh residual ``||G v - mu v||`` of
    the two extreme eigenpairs.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        raise ValueError("empty matrix")
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    try:
        mu, V = np.linalg.eigh(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigen-solve of the Gram matrix failed: {exc}") from exc
    res = max(np.linalg.norm(G @ V[:, i] - mu[i] * V[:, i]) for i in (0, -1))
    smax = float(np.sqrt(max(mu[-1], 0.0)))
    smin = float(min(np.sqrt(max(mu[0], 0.0)), smax))
    return SpectralBounds(smax, smin, float(res))


class NewtonOperator:
    """Applies ``d = (A^T A + eps I)^{-1} A^T r`` through the m x m system.

    ``(A^T A + eps I)^{-1} A^T = A^T (A A^T + eps I)^{-1}``, so the n x n
    matrix is never formed.  The Cholesky factor is computed once and
    reused, which is the point of keeping an instance around for a whole
    solver run.
    """

    def __init__(self, A, eps):
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.A = np.asarray(A, dtype=np.float64)
        self.eps = float(eps)
        m = self.A.shape[0]
        try:
            self._cf = sla.cho_factor(self.A @ self.A.T + self.eps * np.eye(m),
                                      check_finite=False)
        except sla.LinAlgError as exc:
            raise NumericalFailure(f"Cholesky of A A^T + eps I failed: {exc}") from exc

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.A.shape[0],):
            raise ValueError(f"residual has shape {r.shape}, expected ({self.A.shape[0]},)")
        s = sla.cho_solve(self._cf, r, check_finite=False)
        return self.A.T @ s


def newton_direction(A, eps, r):
    return NewtonOperator(A, eps)(r)


def _min_norm_solve(R, qty, rank):
    # complete orthogonal decomposition of the leading rows [R11 R12]
    T = R[:rank, :]
    Z, L = np.linalg.qr(T.T)  # T = L^T Z^T
    c = sla.solve_triangular(L.T, qty[:rank], lower=True, check_finite=False)
    return Z @ c


def least_squares_on_support(A, y, S):
    """Minimize ``||y - A z||`` over ``z`` supported on ``S``.

    Uses a column-pivoted QR of ``A[:, S]``.  When the submatrix is
    numerically rank deficient (a diagonal entry of R at most
    ``RANK_RTOL`` times the largest) the minimum-norm minimizer is returned.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    S = np.asarray(S, dtype=np.intp).reshape(-1)
    z = np.zeros(n)
    if S.size == 0:
        return z
    if S.min() < 0 or S.max() >= n:
        raise ValueError("support index out of range")
    Q, R, perm = sla.qr(A[:, S], mode="economic", pivoting=True, check_finite=False)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > RANK_RTOL * d[0])) if d[0] > 0 else 0
    qty = Q.T @ y
    sol = np.zeros(S.size)
    if rank == S.size:
        sol[perm] = sla.solve_triangular(R, qty, check_finite=False)
    elif rank > 0:
        sol[perm] = _min_norm_solve(R, qty, rank)
    z[S] = sol
    return z
