"""Newton-type optimal k-thresholding solvers and greedy/thresholding baselines.

All variants share one driver (:func:`_drive`) that owns the trace, the
stopping rule and failure handling; each variant only supplies a step
function mapping ``x^p`` to ``x^{p+1}``.
"""
from dataclasses import dataclass, field, replace
from math import comb
from typing import Optional

import numpy as np

from . import rip
from .linalg import NewtonOperator, NumericalFailure, least_squares_on_support
from .qp import RelaxedOTProblem, solve_relaxed_ot
from .thresholding import (
    EXACT_OT_GUARD,
    OracleTooLarge,
    exact_optimal_threshold,
    hard_threshold,
    support_of,
    top_k_support,
)

__all__ = [
    "VARIANTS",
    "STOP_RULES",
    "ConfigurationError",
    "SolverConfig",
    "RecoveryProblem",
    "TraceRecord",
    "SolveResult",
    "stopping_check",
    "resolve_parameters",
    "solve",
    "run_ntot",
    "run_ntrot",
    "run_ntrotp",
    "run_iht",
    "run_nsiht",
    "run_nshtp",
    "run_omp",
    "run_sp",
]

VARIANTS = ("ntot", "ntrot", "ntrotp", "iht", "nsiht", "nshtp", "omp", "sp")
STOP_RULES = ("relative-error", "residual", "iteration-cap")
SP_STALL_TOL = 1e-12


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``eps=None`` means "derive from the matrix": ``eps = max(s1^2 + 1,
    lam - sm^2)`` with ``s1``/``sm`` the extreme singular values.
    """

    variant: str = "ntrotp"
    eps: Optional[float] = None
    lam: float = 5.0
    max_outer_iter: int = 50
    qp_tol: float = 1e-8
    qp_max_iter: int = 5000
    stop_rule: str = "residual"
    stop_tol: float = 1e-6
    x0: Optional[np.ndarray] = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.stop_rule not in STOP_RULES:
            raise ConfigurationError(f"unknown stop rule {self.stop_rule!r}")
        if self.eps is not None and not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        # lam == 0 is allowed: a degenerate but well-defined stepsize
        if not self.lam >= 0:
            raise ConfigurationError("lam must be non-negative")
        if self.max_outer_iter < 1:
            raise ConfigurationError("max_outer_iter must be >= 1")


@dataclass(frozen=True)
class RecoveryProblem:
    A: np.ndarray
    y: np.ndarray
    k: int
    x_true: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None

    def __post_init__(self):
        m, n = np.shape(self.A)
        if np.shape(self.y) != (m,):
            raise ValueError(f"y has shape {np.shape(self.y)}, expected ({m},)")
        if not 0 <= self.k <= n:
            raise ValueError(f"k={self.k} outside [0, {n}]")
        if self.x_true is not None and np.shape(self.x_true) != (n,):
            raise ValueError("x_true has the wrong length")
        if self.noise is not None and np.shape(self.noise) != (m,):
            raise ValueError("noise has the wrong length")


@dataclass
class TraceRecord:
    iteration: int
    residual: float
    relative_error: Optional[float] = None
    qp_iters: Optional[int] = None
    qp_converged: Optional[bool] = None
    # residual of the hard-thresholded iterate before the pursuit step
    pre_pursuit_residual: Optional[float] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SolveResult:
    x_hat: np.ndarray
    support: np.ndarray
    trace: list
    status: str
    variant: str
    eps: Optional[float] = None
    lam: Optional[float] = None
    message: str = ""

    @property
    def iterations(self):
        return self.trace[-1].iteration


def _relative_error(x, x_true):
    d = np.linalg.norm(x - x_true)
    nt = np.linalg.norm(x_true)
    return float(d / nt) if nt > 0 else float(d)


def stopping_check(record, problem, config):
    """Return ``None`` to continue, else the terminal status string."""
    rule = config.stop_rule
    if rule == "relative-error":
        if problem.x_true is None:
            raise ConfigurationError("relative-error stopping needs x_true")
        if record.relative_error <= config.stop_tol:
            return "converged"
    elif rule == "residual":
        if record.residual <= config.stop_tol * np.linalg.norm(problem.y):
            return "converged"
    if record.iteration >= config.max_outer_iter:
        return "iteration-cap"
    return None


def resolve_parameters(A, config):
    """Concrete ``(eps, lam)`` for ``A`` under ``config``."""
    eps = config.eps
    if eps is None:
        eps = rip.default_parameters(A, config.lam)
    return float(eps), float(config.lam)


def _record(p, x, problem, config, **extra):
    A, y = problem.A, problem.y
    rec = TraceRecord(p, float(np.linalg.norm(y - A @ x)), **extra)
    if problem.x_true is not None:
        rec.relative_error = _relative_error(x, problem.x_true)
    if config.keep_iterates:
        rec.x = x.copy()
    return rec


def _drive(problem, config, step, cap=None, eps=None, lam=None, ignore_stop_rule=False):
    n = problem.A.shape[1]
    if config.stop_rule == "relative-error" and problem.x_true is None:
        raise ConfigurationError("relative-error stopping needs x_true")
    x = np.zeros(n) if config.x0 is None else np.asarray(config.x0, dtype=np.float64).copy()
    if x.shape != (n,):
        raise ValueError("x0 has the wrong length")
    cfg = config
    if cap is not None:
        cfg = replace(config, max_outer_iter=cap)
    if ignore_stop_rule:
        cfg = replace(cfg, stop_rule="iteration-cap")

    trace = [_record(0, x, problem, cfg)]
    status, message = None, ""
    if problem.k == 0:
        x = np.zeros(n)
        trace.append(_record(1, x, problem, cfg))
        status = "converged"
    p = 0
    while status is None:
        p += 1
        try:
            x_new, info = step(x)
        except (NumericalFailure, np.linalg.LinAlgError) as exc:
            status, message = "numerical-failure", str(exc)
            break
        if not np.all(np.isfinite(x_new)):
            status, message = "numerical-failure", "iterate became non-finite"
            break
        stalled = info.pop("stalled", False)
        x = x_new
        rec = _record(p, x, problem, cfg, **info)
        trace.append(rec)
        status = stopping_check(rec, problem, cfg)
        if status is None and stalled:
            status = "converged"
    return SolveResult(x, support_of(x), trace, status, config.variant, eps, lam, message)


def _newton(problem, config):
    eps, lam = resolve_parameters(problem.A, config)
    return NewtonOperator(problem.A, eps), eps, lam


def _check_variant(config, name):
    if config.variant != name:
        raise ConfigurationError(f"config is for {config.variant!r}, not {name!r}")


def run_ntot(problem, config):
    """Newton step followed by exhaustive optimal k-thresholding.

    Only usable while ``C(n, k)`` stays under the enumeration guard.
    """
    _check_variant(config, "ntot")
    A, y, k = problem.A, problem.y, problem.k
    n = A.shape[1]
    if comb(n, k) > EXACT_OT_GUARD:
        raise OracleTooLarge(f"NTOT needs C({n}, {k}) <= {EXACT_OT_GUARD}")
    newton, eps, lam = _newton(problem, config)

    def step(x):
        u = x + lam * newton(y - A @ x)
        w, _ = exact_optimal_threshold(A, u, y, k)
        return u * w, {}

    return _drive(problem, config, step, eps=eps, lam=lam)


def _relaxed_step(problem, config, lam, newton):
    A, y, k = problem.A, problem.y, problem.k
    state = {"w": None}

    def relaxed(x):
        u = x + lam * newton(y - A @ x)
        sol = solve_relaxed_ot(RelaxedOTProblem(A, u, y, k), tol=config.qp_tol,
                               max_iter=config.qp_max_iter, warm_start=state["w"])
        state["w"] = sol.w
        return u * sol.w, {"qp_iters": sol.iterations, "qp_converged": sol.converged}

    return relaxed


def run_ntrot(problem, config):
    _check_variant(config, "ntrot")
    k = problem.k
    newton, eps, lam = _newton(problem, config)
    relaxed = _relaxed_step(problem, config, lam, newton)

    def step(x):
        v, info = relaxed(x)
        return hard_threshold(v, k), info

    return _drive(problem, config, step, eps=eps, lam=lam)


def run_ntrotp(problem, config):
    """Newton step, relaxed optimal thresholding, then a pursuit step on the
    top-k support of ``u * w``."""
    _check_variant(config, "ntrotp")
    A, y, k = problem.A, problem.y, problem.k
    newton, eps, lam = _newton(problem, config)
    relaxed = _relaxed_step(problem, config, lam, newton)

    def step(x):
        v, info = relaxed(x)
        S = top_k_support(v, k)
        pre = hard_threshold(v, k)
        info["pre_pursuit_residual"] = float(np.linalg.norm(y - A @ pre))
        return least_squares_on_support(A, y, S), info

    return _drive(problem, config, step, eps=eps, lam=lam)


def run_iht(problem, config):
    _check_variant(config, "iht")
    A, y, k = problem.A, problem.y, problem.k
    lam = float(config.lam)

    def step(x):
        return hard_threshold(x + lam * (A.T @ (y - A @ x)), k), {}

    return _drive(problem, config, step, lam=lam)


def run_nsiht(problem, config):
    _check_variant(config, "nsiht")
    A, y, k = problem.A, problem.y, problem.k
    newton, eps, lam = _newton(problem, config)

    def step(x):
        return hard_threshold(x + lam * newton(y - A @ x), k), {}

    return _drive(problem, config, step, eps=eps, lam=lam)


def run_nshtp(problem, config):
    """NSIHT support selection followed by least squares on that support."""
    _check_variant(config, "nshtp")
    A, y, k = problem.A, problem.y, problem.k
    newton, eps, lam = _newton(problem, config)

    def step(x):
        u = x + lam * newton(y - A @ x)
        pre = hard_threshold(u, k)
        info = {"pre_pursuit_residual": float(np.linalg.norm(y - A @ pre))}
        return least_squares_on_support(A, y, top_k_support(u, k)), info

    return _drive(problem, config, step, eps=eps, lam=lam)


def run_omp(problem, config):
    """Orthogonal matching pursuit; always exactly ``k`` iterations."""
    _check_variant(config, "omp")
    A, y, k = problem.A, problem.y, problem.k
    chosen = []

    def step(x):
        corr = np.abs(A.T @ (y - A @ x))
        corr[chosen] = -1.0  # never re-select a column
        chosen.append(int(np.argmax(corr)))
        return least_squares_on_support(A, y, np.sort(chosen)), {}

    return _drive(problem, config, step, cap=max(k, 1), ignore_stop_rule=True)


def run_sp(problem, config):
    """Subspace pursuit; also stops once the residual stops decreasing."""
    _check_variant(config, "sp")
    A, y, k = problem.A, problem.y, problem.k
    state = {"T": None}

    def step(x):
        if state["T"] is None:
            T = top_k_support(A.T @ y, k)
            state["T"] = T
            return least_squares_on_support(A, y, T), {}
        r = y - A @ x
        merged = np.union1d(state["T"], top_k_support(A.T @ r, k))
        z = least_squares_on_support(A, y, merged)
        T = top_k_support(z, k)
        x_new = least_squares_on_support(A, y, T)
        r_old, r_new = np.linalg.norm(r), np.linalg.norm(y - A @ x_new)
        if r_new >= r_old - SP_STALL_TOL:
            if r_new < r_old:
                state["T"] = T
                return x_new, {"stalled": True}
            return x, {"stalled": True}
        state["T"] = T
        return x_new, {}

    return _drive(problem, config, step)


_RUNNERS = {
    "ntot": run_ntot,
    "ntrot": run_ntrot,
    "ntrotp": run_ntrotp,
    "iht": run_iht,
    "nsiht": run_nsiht,
    "nshtp": run_nshtp,
    "omp": run_omp,
    "sp": run_sp,
}


def solve(problem, config):
    return _RUNNERS[config.variant](problem, config)
