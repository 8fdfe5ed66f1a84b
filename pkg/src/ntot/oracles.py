"""Small-instance cross-checks of the library against brute force.

Each suite returns a ``SuiteResult`` with pass/fail counts.  The brute-force
references here are written independently of the code they check: plain
loops over combinations, dense grids, sorted keys.
"""
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .qp import RelaxedOTProblem, project_capped_simplex, solve_relaxed_ot
from .rip import (exact_ric, lemma1_check, lemma2_check, make_certified_instance,
                  replay_contraction, tail_bound_check)
from .linalg import spectral_extremes
from .solvers import RecoveryProblem, SolverConfig, solve
from .thresholding import exact_optimal_threshold, hard_threshold, top_k_support

__all__ = ["SuiteResult", "SUITES", "run_suite", "run_suites"]


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    details: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def ok(self):
        return self.checks > 0 and self.failures == 0

    def check(self, cond, what):
        self.checks += 1
        if not cond:
            self.failures += 1
            if len(self.details) < 20:
                self.details.append(what)

    def line(self):
        verdict = "PASS" if self.ok else "FAIL"
        extra = "".join(f" {k}={v:.4g}" for k, v in self.metrics.items())
        return (f"{self.name}: {verdict} {self.checks - self.failures}/{self.checks} passed"
                f" ({self.elapsed:.1f}s){extra}")


# -- relaxation vs exhaustive binary optimum ---------------------------------

def _brute_p1(A, u, y, k):
    best, arg = np.inf, None
    for S in itertools.combinations(range(u.size), k):
        S = list(S)
        r = y - A[:, S] @ u[S]
        v = r @ r
        if v < best:
            best, arg = v, S
    return best, arg


def p1_suite(rng, instances=200):
    """Relaxed optimum never exceeds the binary optimum; count rounding agreements."""
    res = SuiteResult("p1")
    agree = 0
    for i in range(instances):
        n = int(rng.integers(4, 13))
        k = int(rng.integers(1, 4))
        m = int(rng.integers(2, n))
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        x = np.zeros(n)
        x[rng.choice(n, k, replace=False)] = rng.standard_normal(k)
        # u looks like a Newton iterate: the truth plus a dense perturbation
        u = x + 0.3 * rng.standard_normal(n)
        y = A @ x + 0.01 * rng.standard_normal(m)
        best, S_star = _brute_p1(A, u, y, k)
        sol = solve_relaxed_ot(RelaxedOTProblem(A, u, y, k))
        res.check(sol.objective <= best + 1e-8,
                  f"instance {i}: relaxed {sol.objective:.3e} > binary {best:.3e}")
        agree += set(top_k_support(u * sol.w, k).tolist()) == set(S_star)
    res.metrics["rounding_agreement"] = agree / instances
    res.check(agree >= 0.1 * instances, f"rounding agreement {agree}/{instances} < 10%")
    return res


# -- capped simplex projection -----------------------------------------------

def _grid_points(n, k, step, center=None, radius=None):
    if center is None:
        axes = [np.arange(0.0, 1.0 + step / 2, step)] * (n - 1)
    else:
        axes = [np.clip(np.arange(c - radius, c + radius + step / 2, step), 0.0, 1.0)
                for c in center[:-1]]
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1)
    last = k - P.sum(axis=1)
    keep = (last >= 0.0) & (last <= 1.0)
    return np.hstack([P[keep], last[keep, None]])


def _grid_projection(v, k, step=1e-3):
    n = v.size
    if n == 1:
        return np.ones(1)
    coarse = 1e-2 if n >= 4 else step
    P = _grid_points(n, k, coarse)
    w = P[np.argmin(((P - v) ** 2).sum(axis=1))]
    if coarse > step:
        P = _grid_points(n, k, step, center=w, radius=2 * coarse)
        w = P[np.argmin(((P - v) ** 2).sum(axis=1))]
    return w


def projection_suite(rng, pairs=1000, grid_instances=24):
    res = SuiteResult("projection")
    for i in range(pairs):
        n = int(rng.integers(1, 30))
        k = int(rng.integers(1, n + 1))
        scale = 10.0 ** rng.uniform(-2, 2)
        a, b = scale * rng.standard_normal(n), scale * rng.standard_normal(n)
        pa, pb = project_capped_simplex(a, k), project_capped_simplex(b, k)
        feas = (abs(pa.sum() - k) <= 1e-9 * max(1, k)
                and pa.min() >= 0.0 and pa.max() <= 1.0)
        res.check(feas, f"pair {i}: infeasible projection")
        res.check(np.linalg.norm(project_capped_simplex(pa, k) - pa) <= 1e-12,
                  f"pair {i}: not idempotent")
        res.check(np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12,
                  f"pair {i}: expansive")
    for i in range(grid_instances):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, n + 1))
        v = rng.uniform(-0.5, 1.5, n)
        p = project_capped_simplex(v, k)
        g = _grid_projection(v, k)
        res.check(np.max(np.abs(p - g)) <= 2e-3, f"grid instance {i}: {p} vs {g}")
    return res


# -- inequality replays ------------------------------------------------------

def inequality_suite(rng, draws=1000, lemma2_instances=200, matrices=50):
    res = SuiteResult("inequalities")
    per = max(1, draws // matrices)
    for j in range(matrices):
        m, n = int(rng.integers(4, 8)), int(rng.integers(8, 11))
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        sigma = spectral_extremes(A)
        s1sq, smsq = sigma.sigma_max ** 2, sigma.sigma_min ** 2
        deltas = {t: exact_ric(A, t).delta for t in (1, 2, 3)}
        for d in range(per):
            eps = s1sq * rng.uniform(1.0 + 1e-6, 3.0)
            u = rng.standard_normal(m)
            c = tail_bound_check(A, eps, u, sigma)
            res.check(not c.skipped and c.holds(1e-9), f"tail m{j} d{d}: {c}")

            t = int(rng.integers(1, 4))
            T = rng.choice(n, t, replace=False)
            Omega = T[: int(rng.integers(1, t + 1))]
            x = np.zeros(n)
            on = T[rng.random(t) < 0.7]
            x[on] = rng.standard_normal(on.size)
            lam = rng.uniform(0.0, eps + smsq)
            c = lemma1_check(A, eps, lam, x, Omega, t, deltas[t], sigma)
            res.check(not c.skipped and c.holds(1e-9), f"lemma1 m{j} d{d}: {c}")

    done = 0
    while done < lemma2_instances:
        n = int(rng.integers(5, 11))
        k = int(rng.integers(1, 3))
        m = int(rng.integers(max(2 * k + 1, n - 4), n + 1))
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        dk, d2k = exact_ric(A, k).delta, exact_ric(A, 2 * k).delta
        if d2k >= 1.0:
            continue
        x = np.zeros(n)
        s = int(rng.integers(1, k + 1))
        supp = rng.choice(n, s, replace=False)
        x[supp] = rng.standard_normal(s)
        w_hat = np.zeros(n)
        extra = rng.choice(np.setdiff1d(np.arange(n), supp), k - s, replace=False)
        w_hat[np.concatenate([supp, extra]).astype(int)] = 1.0
        u = x + 0.5 * rng.standard_normal(n)
        eta = 0.05 * rng.standard_normal(m)
        c = lemma2_check(A, x, eta, u, k, w_hat, dk, d2k)
        res.check(not c.skipped and c.holds(1e-9), f"lemma2 instance {done}: {c}")
        done += 1
    return res


# -- contraction replays -----------------------------------------------------

_VARIANT_OF = {1: "ntot", 2: "ntrot", 3: "ntrotp"}


def contraction_suite(rng, instances=50, theorems=(1, 2, 3), iterations=8, collect=None):
    """Certified near-isometric instances; every step must obey the bound.

    Even-numbered instances are noiseless with a k-sparse truth (so the
    geometric bound is checked too); odd ones add noise and a small tail.
    ``collect``, if a list, receives ``(variant, SolveResult, k)`` tuples.
    """
    res = SuiteResult("contraction")
    for tid in theorems:
        for i in range(instances):
            inst = make_certified_instance(tid, rng)
            if inst is None:
                res.check(False, f"theorem {tid}: no certified instance found")
                continue
            A, k = inst.A, inst.cert.k
            m, n = A.shape
            x = np.zeros(n)
            x[rng.choice(n, k, replace=False)] = rng.choice([-1, 1], k) * rng.uniform(1, 2, k)
            y = A @ x
            if i % 2:
                x = x + 1e-3 * rng.standard_normal(n)
                y = A @ x + 1e-3 * rng.standard_normal(m)
            problem = RecoveryProblem(A, y, k, x_true=x)
            cfg = SolverConfig(variant=_VARIANT_OF[tid], eps=inst.eps, lam=inst.lam,
                               max_outer_iter=iterations, stop_rule="iteration-cap",
                               qp_tol=1e-12, qp_max_iter=20000, keep_iterates=True)
            out = solve(problem, cfg)
            if collect is not None:
                collect.append((cfg.variant, out, k))
            rep = replay_contraction(out, problem, inst.cert, slack=1e-8)
            res.check(rep.ok and out.status != "numerical-failure",
                      f"theorem {tid} instance {i}: {rep.violations} violations,"
                      f" geometric {rep.geometric_violations}, max {rep.max_violation:.2e}")
    return res


# -- thresholding tie rule ---------------------------------------------------

def _reference_threshold(x, k):
    order = sorted(range(x.size), key=lambda i: (-abs(x[i]), i))
    out = np.zeros_like(x)
    for i in order[:k]:
        out[i] = x[i]
    return out


def thresholding_suite(rng, draws=500, threshold=None):
    """``threshold(x, k)`` against a sort-by-(magnitude, index) reference.

    Draws use small integer values so ties are frequent.  ``threshold`` is
    injectable so a deliberately wrong rule can serve as a negative control.
    """
    threshold = threshold or hard_threshold
    res = SuiteResult("thresholding")
    for i in range(draws):
        n = int(rng.integers(1, 16))
        k = int(rng.integers(0, n + 1))
        x = rng.integers(-3, 4, n).astype(float)
        got = np.asarray(threshold(x, k))
        ref = _reference_threshold(x, k)
        res.check(np.array_equal(got, ref), f"draw {i}: x={x.tolist()} k={k}")
    # exhaustive oracle keeps the first minimizer in lexicographic order
    for i in range(draws // 10):
        n, k = int(rng.integers(3, 8)), int(rng.integers(1, 3))
        A = np.ones((2, n))
        u = np.ones(n)
        y = rng.standard_normal(2)
        w, _ = exact_optimal_threshold(A, u, y, k)
        res.check(np.array_equal(np.flatnonzero(w), np.arange(k)),
                  f"exhaustive tie {i}: picked {np.flatnonzero(w).tolist()}")
    return res


SUITES = {
    "p1": p1_suite,
    "projection": projection_suite,
    "inequalities": inequality_suite,
    "contraction": contraction_suite,
    "thresholding": thresholding_suite,
}


def run_suite(name, seed, **kwargs):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    out = SUITES[name](rng, **kwargs)
    out.elapsed = time.perf_counter() - t0
    return out


def run_suites(names, seed, overrides=None):
    overrides = overrides or {}
    return [run_suite(n, seed, **overrides.get(n, {})) for n in names]
