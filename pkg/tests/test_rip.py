import numpy as np
import pytest
from hypothesis import given, strategies as st

from ntot.linalg import SpectralBounds, spectral_extremes
from ntot.rip import (DELTA_BOUNDS, certificate, default_parameters, exact_ric,
                      lemma1_check, make_certified_instance, replay_contraction,
                      tail_bound_check, theorem1_certificate, theorem2_certificate,
                      theorem3_certificate)
from ntot.solvers import RecoveryProblem, SolverConfig, solve
from ntot.thresholding import OracleTooLarge

UNIT = SpectralBounds(1.0, 1.0, 0.0)
ZERO = {1: 0.0, 2: 0.0, 3: 0.0}


def test_ric_orthonormal_columns():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 4)))
    for q in range(1, 5):
        assert exact_ric(Q, q).delta == pytest.approx(0, abs=1e-12)


def test_ric_identical_columns():
    A = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert exact_ric(A, 1).delta == pytest.approx(0)
    r = exact_ric(A, 2)
    assert r.delta == pytest.approx(1.0)
    assert r.witness_support == (0, 1)


def brute_ric(A, q):
    from itertools import combinations
    best = 0.0
    for S in combinations(range(A.shape[1]), q):
        ev = np.linalg.eigvalsh(A[:, S].T @ A[:, S])
        best = max(best, ev[-1] - 1, 1 - ev[0])
    return best


def test_ric_monotone_and_matches_loop():
    r = np.random.default_rng(1)
    for _ in range(100):
        A = r.standard_normal((4, 6)) / 2
        d = [exact_ric(A, q).delta for q in range(1, 5)]
        assert all(b >= a - 1e-12 for a, b in zip(d, d[1:]))
    assert exact_ric(A, 3).delta == pytest.approx(brute_ric(A, 3), abs=1e-12)


def test_ric_guard():
    with pytest.raises(OracleTooLarge):
        exact_ric(np.ones((3, 40)), 10)


def test_theorem1_orthonormal_substitution():
    c = theorem1_certificate(np.eye(3), 1, 2.0, 3.0, ZERO, UNIT)
    assert c.eps_lower_bound == pytest.approx(1.0)
    assert c.lambda_interval == pytest.approx((0.0, 3.0))
    assert c.rho == pytest.approx(0.0, abs=1e-15)
    assert c.valid


def test_theorem1_invalid_cases():
    assert not theorem1_certificate(np.eye(3), 1, 2.0, 3.0, {1: 0.1, 2: 0.6}, UNIT).valid
    c = theorem1_certificate(np.eye(3), 1, 2.0, 3.5, ZERO, UNIT)
    assert not c.lambda_ok and not c.valid


def test_theorem1_tau_uses_sigma():
    sig = SpectralBounds(2.0, 1.0, 0.0)
    c = theorem1_certificate(None, 1, 5.0, 1.0, {1: 0.0, 2: 0.0}, sig)
    assert c.tau == pytest.approx(1.0 * 2.0 / (5.0 + 4.0) + 2.0)


def test_theorem2_cases():
    assert not theorem2_certificate(None, 1, 2.0, 3.0, {1: 0, 2: 0, 3: 0.25}, UNIT).valid
    c = theorem2_certificate(None, 1, 2.0, 3.0, ZERO, UNIT)
    assert c.rho == pytest.approx(0.0, abs=1e-15) and c.valid


def test_theorem2_rho_decreasing_in_lambda():
    d = {1: 0.02, 2: 0.04, 3: 0.05}
    sig = SpectralBounds(1.1, 0.9, 0.0)
    eps = 3.0
    lo, hi = theorem2_certificate(None, 1, eps, 1.0, d, sig).lambda_interval
    lams = np.linspace(max(lo, 0) + 1e-6, hi, 30)
    rhos = [theorem2_certificate(None, 1, eps, l, d, sig).rho for l in lams]
    assert all(b < a for a, b in zip(rhos, rhos[1:]))


def test_theorem3_cases():
    assert not theorem3_certificate(None, 1, 2.0, 3.0, {1: 0, 2: 0, 3: 0.21}, UNIT).valid
    c = theorem3_certificate(None, 1, 2.0, 3.0, ZERO, UNIT)
    assert c.rho == pytest.approx(0.0, abs=1e-15) and c.valid


@given(st.integers(1, 3), st.floats(0, 0.3), st.floats(0, 0.3), st.floats(0, 0.3),
       st.floats(0.5, 2), st.floats(0.1, 1), st.floats(1.0, 50), st.floats(0, 1))
def test_valid_certificates_contract(tid, d1, d2, d3, s1, ratio, eps_scale, lam_frac):
    d = {1: d1, 2: max(d1, d2), 3: max(d1, d2, d3)}
    sig = SpectralBounds(s1, s1 * ratio, 0.0)
    eps = s1 * s1 * eps_scale
    lam = lam_frac * (eps + sig.sigma_min ** 2)
    c = certificate(tid, None, 1, eps, lam, d, sig)
    if c.valid:
        assert c.rho < 1
        assert c.delta_values[DELTA_BOUNDS[tid][0]] < DELTA_BOUNDS[tid][1]
        assert c.eps > c.eps_lower_bound
        assert c.lambda_interval[0] < lam <= c.lambda_interval[1]
    text = c.to_text()
    for key in ("rho=", "tau=", "lambda_interval=", "valid="):
        assert key in text


def test_default_parameters_examples():
    A = np.eye(3)
    assert default_parameters(A, 5.0) == pytest.approx(4.0)
    assert default_parameters(A, 2.5) == pytest.approx(2.0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100))
def test_default_parameters_satisfy_both_inequalities(seed, lam):
    A = np.random.default_rng(seed).standard_normal((4, 7))
    s = spectral_extremes(A)
    eps = default_parameters(A, lam)
    assert eps > s.sigma_max ** 2
    assert lam <= eps + s.sigma_min ** 2 + 1e-12


def test_replay_certified_ntot_noiseless_geometric():
    r = np.random.default_rng(3)
    inst = make_certified_instance(1, r)
    x = np.zeros(10)
    x[4] = -1.3
    p = RecoveryProblem(inst.A, inst.A @ x, 1, x_true=x)
    cfg = SolverConfig(variant="ntot", eps=inst.eps, lam=inst.lam, max_outer_iter=5,
                       stop_rule="iteration-cap", keep_iterates=True)
    rep = replay_contraction(solve(p, cfg), p, inst.cert)
    assert rep.geometric_checked and rep.ok


def test_replay_refuses_invalid_certificate():
    p = RecoveryProblem(np.eye(3), np.ones(3), 1, x_true=np.ones(3))
    res = solve(p, SolverConfig(variant="ntot", eps=2.0, lam=3.0, keep_iterates=True))
    bad = theorem1_certificate(None, 1, 2.0, 3.0, {1: 0.0, 2: 0.9}, UNIT)
    with pytest.raises(ValueError):
        replay_contraction(res, p, bad)
    good = theorem1_certificate(None, 1, 2.0, 3.0, ZERO, UNIT)
    with pytest.raises(ValueError):  # wrong theorem for the variant
        replay_contraction(res, p, theorem2_certificate(None, 1, 2.0, 3.0, ZERO, UNIT))
    no_iterates = solve(p, SolverConfig(variant="ntot", eps=2.0, lam=3.0))
    with pytest.raises(ValueError):
        replay_contraction(no_iterates, p, good)


def test_lemma1_examples():
    A = np.random.default_rng(4).standard_normal((4, 8)) / 2
    s1sq = spectral_extremes(A).sigma_max ** 2
    c = lemma1_check(A, 2 * s1sq, 1.0, np.zeros(8), [0], 1)
    assert c.lhs == 0 and c.rhs == 0 and c.holds()
    c = lemma1_check(A, 0.5 * s1sq, 1.0, np.zeros(8), [0], 1)
    assert c.skipped
    c = lemma1_check(A, 2 * s1sq, 1.0, np.ones(8), [0], 1)
    assert c.skipped


def test_tail_bound():
    A = np.random.default_rng(5).standard_normal((5, 9))
    s1sq = spectral_extremes(A).sigma_max ** 2
    for scale in (1.0, 1.5, 4.0):
        c = tail_bound_check(A, scale * s1sq, np.random.default_rng(6).standard_normal(5))
        assert not c.skipped and c.holds()
    assert tail_bound_check(A, 0.5 * s1sq, np.ones(5)).skipped
