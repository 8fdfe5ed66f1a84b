"""Seeded problem generation and the benchmark studies.

Random streams: numpy's PCG64 bit generator supplies uniform doubles,
normals come from the Box-Muller transform applied to those doubles, and
supports from a partial Fisher-Yates shuffle.  Everything downstream of a
seed is therefore a fixed function of that seed.

Trial ``i`` at grid point ``g`` uses ``base_seed ^ splitmix64((g << 32) | i)``,
so a trial's problem does not depend on execution order or worker count.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import spectral_extremes
from .rip import default_parameters
from .solvers import RecoveryProblem, SolverConfig, solve

__all__ = [
    "GENERATOR_ID",
    "SUCCESS_TOL",
    "PRESETS",
    "ProblemSpec",
    "TrialRecord",
    "SweepSpec",
    "splitmix64",
    "trial_seed",
    "standard_normal",
    "gen_problem",
    "run_trial",
    "residual_experiment",
    "epsilon_sweep",
    "lambda_sweep",
    "iterations_experiment",
    "success_experiment",
]

GENERATOR_ID = "pcg64+box-muller/fisher-yates"
SUCCESS_TOL = 1e-3
_MASK = (1 << 64) - 1
_NEWTON = ("ntot", "ntrot", "ntrotp", "nsiht", "nshtp")

# k/n grids are over [0.01, 0.35]; m/n grids follow the 50..300 of 500 shape
PRESETS = {
    "desk": {"m": 64, "n": 128, "trials": 20, "mn_n": 128, "mn_k": 13,
             "mn_from": 0.1, "mn_to": 0.6},
    "paper": {"m": 256, "n": 512, "trials": 50, "mn_n": 500, "mn_k": 50,
              "mn_from": 0.1, "mn_to": 0.6},
}


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def trial_seed(base_seed, point, trial):
    return (int(base_seed) ^ splitmix64(((point & 0xFFFFFFFF) << 32) | (trial & 0xFFFFFFFF))) & _MASK


def standard_normal(rng, size):
    """Box-Muller normals from ``rng.random()`` doubles."""
    half = (size + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    rad = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    z = np.empty(2 * half)
    z[0::2] = rad * np.cos(2.0 * np.pi * u2)
    z[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return z[:size]


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    n: int
    k: int
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.k <= self.n or not 1 <= self.m <= self.n:
            raise ValueError(f"bad problem shape m={self.m} n={self.n} k={self.k}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


def gen_problem(spec):
    """Gaussian matrix, uniformly placed Gaussian k-sparse signal, optional noise.

    The noise vector is always drawn (and only scaled by ``noise_scale``),
    so noisy and noiseless problems with the same seed share ``A`` and ``x*``.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    m, n, k = spec.m, spec.n, spec.k
    A = standard_normal(rng, m * n).reshape(m, n)
    idx = np.arange(n)
    for i in range(k):
        j = i + int(rng.random() * (n - i))
        idx[i], idx[j] = idx[j], idx[i]
    x = np.zeros(n)
    x[np.sort(idx[:k])] = standard_normal(rng, k)
    theta = standard_normal(rng, m)
    noise = spec.noise_scale * theta
    y = A @ x + noise if spec.noise_scale > 0 else A @ x
    return RecoveryProblem(A, y, k, x_true=x, noise=noise if spec.noise_scale > 0 else None)


@dataclass(frozen=True)
class TrialRecord:
    spec: ProblemSpec
    algorithm: str
    iterations_used: int
    success: bool
    final_residual: float
    final_relative_error: float
    status: str = ""
    # per-iteration (pre, post) pursuit residuals, kept for dominance checks
    pursuit_pairs: tuple = field(default=(), repr=False, compare=False)
    sparsity: int = 0
    y_norm: float = 0.0


def _config(algorithm, A, base):
    """Per-trial config: the variant set, ``eps`` resolved from ``A`` if unset."""
    cfg = replace(base, variant=algorithm)
    if algorithm in _NEWTON and cfg.eps is None:
        cfg = replace(cfg, eps=default_parameters(A, cfg.lam))
    return cfg


def run_trial(spec, algorithm, base_config):
    problem = gen_problem(spec)
    cfg = _config(algorithm, problem.A, base_config)
    res = solve(problem, cfg)
    last = res.trace[-1]
    pairs = tuple((r.pre_pursuit_residual, r.residual) for r in res.trace
                  if r.pre_pursuit_residual is not None)
    rel = last.relative_error
    return TrialRecord(spec, algorithm, last.iteration, bool(rel <= SUCCESS_TOL),
                       last.residual, rel, res.status, pairs, int(np.count_nonzero(res.x_hat)),
                       float(np.linalg.norm(problem.y)))


def _run_trial_task(args):
    return run_trial(*args)


def _map(tasks, workers):
    if workers is None or workers <= 1:
        return [_run_trial_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        # map preserves task order regardless of completion order
        return list(ex.map(_run_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


@dataclass(frozen=True)
class SweepSpec:
    """Grid sweep over ``k/n`` (fixed m, n) or ``m/n`` (fixed n, k)."""

    axis: str
    grid: tuple
    trials_per_point: int
    algorithms: tuple
    m: int = 64
    n: int = 128
    k: int = 13
    noise_scale: float = 0.0
    base_seed: int = 0
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.axis not in ("k_over_n", "m_over_n"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if len(self.grid) == 0:
            raise ValueError("empty grid")
        if self.trials_per_point < 1:
            raise ValueError("need at least one trial per point")

    def problem_spec(self, point, trial):
        ratio = self.grid[point]
        seed = trial_seed(self.base_seed, point, trial)
        if self.axis == "k_over_n":
            return ProblemSpec(self.m, self.n, max(1, int(round(ratio * self.n))),
                               self.noise_scale, seed)
        return ProblemSpec(max(1, int(round(ratio * self.n))), self.n, self.k,
                           self.noise_scale, seed)


def run_sweep(sweep, workers=None):
    """All trial records, ordered by (algorithm, grid point, trial)."""
    tasks = [(sweep.problem_spec(g, i), alg, sweep.config)
             for alg in sweep.algorithms
             for g in range(len(sweep.grid))
             for i in range(sweep.trials_per_point)]
    return _map(tasks, workers)


def _grouped(sweep, records):
    T = sweep.trials_per_point
    per_alg = len(sweep.grid) * T
    for a, alg in enumerate(sweep.algorithms):
        for g, ratio in enumerate(sweep.grid):
            start = a * per_alg + g * T
            yield alg, g, ratio, records[start:start + T]


def iterations_experiment(sweep, workers=None, records=None):
    """Average iterations per grid point; failed trials count as the cap.

    Uses the relative-error rule at 1e-3 with the sweep config's cap.
    """
    sweep = replace(sweep, config=replace(sweep.config, stop_rule="relative-error",
                                          stop_tol=SUCCESS_TOL))
    records = records if records is not None else run_sweep(sweep, workers)
    cap = sweep.config.max_outer_iter
    rows = []
    for alg, _, ratio, recs in _grouped(sweep, records):
        its = [r.iterations_used if r.success else cap for r in recs]
        rows.append({"algorithm": alg, "axis": sweep.axis, "axis_value": ratio,
                     "avg_iterations": float(np.mean(its))})
    return rows, records


def success_experiment(sweep, noise_scale=None, workers=None, records=None):
    """Success rate per (algorithm, grid point).

    Every iterative method runs the full cap (OMP runs ``k`` steps) and is
    judged on its final iterate.
    """
    if noise_scale is not None:
        sweep = replace(sweep, noise_scale=noise_scale)
    sweep = replace(sweep, config=replace(sweep.config, stop_rule="iteration-cap"))
    records = records if records is not None else run_sweep(sweep, workers)
    rows = []
    for alg, _, ratio, recs in _grouped(sweep, records):
        s = sum(r.success for r in recs)
        rows.append({"algorithm": alg, "axis": sweep.axis, "axis_value": ratio,
                     "trials": len(recs), "successes": int(s),
                     "success_rate": s / len(recs)})
    return rows, records


def epsilon_sweep(A, lam=10.0, factors=(1.0, 1.1, 1.5, 2.0)):
    """``(eps, lam)`` pairs with ``eps`` a multiple of ``s1^2 + 1``."""
    base = spectral_extremes(A).sigma_max ** 2 + 1.0
    return [(f * base, lam) for f in factors]


def lambda_sweep(A, lams=(1.0, 2.0, 5.0, 10.0)):
    eps = spectral_extremes(A).sigma_max ** 2 + 1.0
    return [(eps, lam) for lam in lams]


def residual_experiment(spec, algorithms, config=None, params=None):
    """Residual ``||y - A x^p||`` per (parameters, algorithm, iteration).

    ``params`` is a list of ``(eps, lam)`` pairs; ``None`` means the default
    rule with ``lam = config.lam``.  Rows carry the resolved ``epsilon`` and
    ``lambda`` (empty for methods that use neither).
    """
    config = config or SolverConfig(stop_rule="iteration-cap", max_outer_iter=30)
    problem = gen_problem(spec)
    if params is None:
        params = [(None, config.lam)]
    rows = []
    for eps, lam in params:
        for alg in algorithms:
            cfg = _config(alg, problem.A, replace(config, eps=eps, lam=lam))
            res = solve(problem, cfg)
            for rec in res.trace:
                rows.append({
                    "epsilon": res.eps,
                    "lambda": res.lam,
                    "algorithm": alg,
                    "iteration": rec.iteration,
                    "residual_l2": rec.residual,
                    "relative_error": rec.relative_error,
                    "qp_iters": rec.qp_iters,
                    "qp_converged": rec.qp_converged,
                })
    return rows
