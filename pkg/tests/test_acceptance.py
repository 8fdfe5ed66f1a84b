"""Exit criteria, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -v``; a one-line verdict per
criterion is printed in the terminal summary.
"""
import os
import time

import numpy as np
import pytest

from ntot import cli
from ntot.experiments import SweepSpec, success_experiment
from ntot.oracles import run_suite
from ntot.solvers import SolverConfig

pytestmark = pytest.mark.acceptance

WORKERS = max(1, min(4, os.cpu_count() or 1))
# floating-point allowance when comparing two residuals of the same iterate
PURSUIT_SLACK = 1e-10


def report(lines, number, ok, detail):
    lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    print(lines[-1])


@pytest.fixture(scope="module")
def contraction_runs():
    runs = []
    t0 = time.perf_counter()
    res = run_suite("contraction", 4, instances=50, collect=runs)
    return res, runs, time.perf_counter() - t0


def _desk_sweep(noise):
    sweep = SweepSpec("k_over_n", (5 / 128, 38 / 128), 50, ("ntrotp", "nshtp"), m=64, n=128,
                      base_seed=20240611, config=SolverConfig(max_outer_iter=20))
    t0 = time.perf_counter()
    rows, records = success_experiment(sweep, noise_scale=noise, workers=WORKERS)
    rate = {(r["algorithm"], r["axis_value"]): r["success_rate"] for r in rows}
    return rate, records, time.perf_counter() - t0


@pytest.fixture(scope="module")
def noiseless():
    return _desk_sweep(0.0)


@pytest.fixture(scope="module")
def noisy():
    return _desk_sweep(0.001)


def test_criterion_1_relaxation_vs_exhaustive(acceptance_lines):
    res = run_suite("p1", 1, instances=200)
    ok = res.ok and res.elapsed <= 60
    report(acceptance_lines, 1, ok,
           f"{res.checks - 1} instances, {res.failures} failures, rounding agreement "
           f"{res.metrics['rounding_agreement']:.2f} (need >= 0.10), {res.elapsed:.1f}s")
    assert ok, res.details


def test_criterion_2_projection(acceptance_lines):
    res = run_suite("projection", 2, pairs=1000, grid_instances=24)
    ok = res.ok and res.elapsed <= 10
    report(acceptance_lines, 2, ok, f"{res.checks} checks, {res.failures} failures,"
           f" {res.elapsed:.1f}s")
    assert ok, res.details


def test_criterion_3_inequalities(acceptance_lines):
    res = run_suite("inequalities", 3, draws=1000, lemma2_instances=200)
    ok = res.ok and res.elapsed <= 120
    report(acceptance_lines, 3, ok, f"{res.checks} checks, {res.failures} failures,"
           f" {res.elapsed:.1f}s")
    assert ok, res.details


def test_criterion_4_contraction(acceptance_lines, contraction_runs):
    res, runs, elapsed = contraction_runs
    ok = res.ok and len(runs) == 150 and elapsed <= 180
    report(acceptance_lines, 4, ok, f"{len(runs)} certified runs (50 per theorem, half noiseless with the geometric check),"
           f" {res.failures} with violations, {elapsed:.1f}s")
    assert ok, res.details


def test_criterion_5_desk_recovery(acceptance_lines, noiseless):
    rate, _, elapsed = noiseless
    lo, hi = rate[("ntrotp", 5 / 128)], rate[("ntrotp", 38 / 128)]
    ok = lo >= 0.95 and lo >= hi and elapsed <= 600
    report(acceptance_lines, 5, ok, f"NTROTP success {lo:.2f} at k=5, {hi:.2f} at k=38,"
           f" {elapsed:.1f}s")
    assert ok


def test_criterion_6_noisy_robustness(acceptance_lines, noiseless, noisy):
    clean, dirty = noiseless[0][("ntrotp", 5 / 128)], noisy[0][("ntrotp", 5 / 128)]
    ok = abs(clean - dirty) <= 0.10 and noisy[2] <= 600
    report(acceptance_lines, 6, ok, f"NTROTP success at k=5: noiseless {clean:.2f},"
           f" noisy {dirty:.2f}, {noisy[2]:.1f}s")
    assert ok


def test_criterion_7_pursuit_dominance_and_sparsity(acceptance_lines, contraction_runs,
                                                    noiseless, noisy):
    pairs = bad_pairs = sparse_bad = outputs = 0
    for variant, result, k in contraction_runs[1]:
        y_norm = result.trace[0].residual  # runs start from x0 = 0
        outputs += 1
        sparse_bad += np.count_nonzero(result.x_hat) > k
        for rec in result.trace:
            if rec.pre_pursuit_residual is not None:
                pairs += 1
                bad_pairs += rec.residual > rec.pre_pursuit_residual + PURSUIT_SLACK * y_norm
    for rec in noiseless[1] + noisy[1]:
        outputs += 1
        sparse_bad += rec.sparsity > rec.spec.k
        for pre, post in rec.pursuit_pairs:
            pairs += 1
            bad_pairs += post > pre + PURSUIT_SLACK * rec.y_norm
    ok = pairs > 0 and bad_pairs == 0 and sparse_bad == 0
    report(acceptance_lines, 7, ok, f"{pairs} pursuit steps ({bad_pairs} worse than"
           f" pre-pursuit), {outputs} outputs ({sparse_bad} denser than k)")
    assert ok


def test_criterion_8_determinism(acceptance_lines, tmp_path, capsys):
    outs = []
    for workers in (1, 3):
        for study in ("success", "iterations"):
            path = tmp_path / f"{study}-{workers}.csv"
            code = cli.main(["sweep", "--study", study, "--seed", "77", "--trials", "4",
                             "--points", "3", "--algos", "ntrotp,nshtp,sp",
                             "--workers", str(workers), "--out", str(path)])
            assert code == 0
            outs.append(path.read_bytes())
    capsys.readouterr()
    ok = outs[0] == outs[2] and outs[1] == outs[3]
    report(acceptance_lines, 8, ok, "sweep CSVs byte-identical across worker counts 1 and 3")
    assert ok
