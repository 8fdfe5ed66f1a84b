"""Newton-step optimal k-thresholding algorithms for sparse recovery."""
from .experiments import ProblemSpec, SweepSpec, gen_problem
from .linalg import NumericalFailure, spectral_extremes
from .qp import RelaxedOTProblem, project_capped_simplex, solve_relaxed_ot
from .rip import certificate, default_parameters, exact_ric, replay_contraction
from .solvers import ConfigurationError, RecoveryProblem, SolverConfig, solve
from .thresholding import exact_optimal_threshold, hard_threshold, top_k_support

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "NumericalFailure",
    "ProblemSpec",
    "RecoveryProblem",
    "RelaxedOTProblem",
    "SolverConfig",
    "SweepSpec",
    "certificate",
    "default_parameters",
    "exact_optimal_threshold",
    "exact_ric",
    "gen_problem",
    "hard_threshold",
    "project_capped_simplex",
    "replay_contraction",
    "solve",
    "solve_relaxed_ot",
    "spectral_extremes",
    "top_k_support",
]
