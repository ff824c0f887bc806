"""Acceptance criteria 1-14, each at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal summary.
Replication experiments are cached per session so that criterion 6 can scan
every SGD and KRR snapshot they produced.
"""

import functools
import math
import time

import numpy as np

from conftest import record_verdict
from margin_sgd.bounds import mc_concentration_check, schedule_constants
from margin_sgd.dist import MarginDistribution, make_rng
from margin_sgd.experiment import (ExperimentConfig, aggregate, defined_suffix, fit_slope,
                                   krr_replicate, map_replications, population,
                                   records_to_csv, replicate, run_experiment)
from margin_sgd.kernel import ExponentialKernel, HFunction, h_dist, h_norm
from margin_sgd.popridge import margin_delta, optimality_residual, quad_grid, solve_glambda
from margin_sgd.sgd import SgdState, StepSchedule, tail_from_averages

LAM, GAMMA, EPS = 0.01, 0.25, 0.05

# per-replication metric columns returned by ``replicate``
EXCESS, L2, TRAIN_ERR, TRAIN_LOSS, HDIST = range(5)

SNAPSHOTS: list[tuple[str, np.ndarray, np.ndarray]] = []   # (label, h_dist, excess)


@functools.lru_cache(maxsize=None)
def experiment(**kw):
    cfg = ExperimentConfig(**kw).validate()
    grid, gl = population(cfg)
    per_rep = map_replications(replicate, cfg, (grid, gl), 1)
    stack = np.stack(per_rep)
    SNAPSHOTS.append((f"sgd-{cfg.estimator}", stack[..., HDIST].ravel(), stack[..., EXCESS].ravel()))
    return cfg, aggregate(cfg.checkpoint_list(), per_rep)


def tail_error_run():
    return experiment(estimator="tail", replications=1000, n_max=200, checkpoint_every=10)


def tail_loss_run():
    return experiment(estimator="tail", replications=100, n_max=2000,
                      checkpoints=tuple(range(50, 2001, 50)))


def power_step_run():
    return experiment(estimator="plain", schedule="power", alpha=0.5, replications=1000,
                      n_max=200, checkpoint_every=10)


@functools.lru_cache(maxsize=None)
def krr_rows():
    cfg = ExperimentConfig(subcommand="krr", replications=100, n_max=800,
                           checkpoints=[50, 200, 800]).validate()
    grid, gl = population(cfg)
    rows = [row for rep in map_replications(krr_replicate, cfg, (grid, gl), 1) for row in rep]
    return cfg, rows


# ---------------------------------------------------------------------------


def test_criterion_01_recursion_equivalence():
    t0 = time.perf_counter()
    k = ExponentialKernel()
    s = MarginDistribution(EPS).sample(make_rng(2024), 50)
    state = SgdState(LAM, StepSchedule.constant(GAMMA))
    g = HFunction.zero(k)
    for x, y in s:
        state.step(x, y)
        g = (g - HFunction.feature(k, x) * (GAMMA * (g(x) - y)) - g * (GAMMA * LAM)).flattened()
    probe = np.linspace(0, 1, 11)
    err = float(np.max(np.abs(state.iterate_fn()(probe) - g(probe))))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-10 and elapsed < 1.0
    record_verdict(1, ok, f"max |diff| = {err:.2e} (<= 1e-10), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_02_tail_identity():
    state = SgdState(LAM, StepSchedule.constant(GAMMA), averaging=True)
    avgs = {0: np.zeros(0)}
    worst = 0.0
    for n, (x, y) in enumerate(MarginDistribution(EPS).sample(make_rng(7), 200), 1):
        state.step(x, y)
        avgs[n] = state.averaged_coefs()[0]
        if n % 2 == 0:
            # window n/2..n: tail = ((n+1) avg_n - (n/2) avg_{n/2-1}) / (n/2+1)
            rebuilt = tail_from_averages(avgs[n], avgs[n // 2 - 1], n)
            worst = max(worst, float(np.max(np.abs(rebuilt - state.tail_coefs()[0]))))
    ok = worst <= 1e-12
    record_verdict(2, ok, f"max coefficient gap over even n <= 200: {worst:.2e} (<= 1e-12)")
    assert ok


def test_criterion_03_homogeneous_contraction():
    k = ExponentialKernel()
    rng = make_rng(3)
    worst = -np.inf
    for run in range(100):
        sched = StepSchedule.constant(GAMMA) if run % 2 == 0 else StepSchedule.power(0.5, 0.5)
        m = rng.integers(1, 6)
        g0 = HFunction(k, rng.uniform(0, 1, m), rng.normal(size=m))
        state = SgdState(LAM, sched, g0=g0)
        bound = h_norm(g0)
        for i, x in enumerate(rng.uniform(0, 1, rng.integers(1, 101)), 1):
            state.homogeneous_step(x)
            bound *= 1 - float(sched.gamma_at(i)) * LAM
            worst = max(worst, h_norm(state.iterate_fn()) - bound)
    ok = worst <= 1e-12
    record_verdict(3, ok, f"max(||eta_n|| - prod bound) = {worst:.2e} (<= 1e-12) over 100 runs")
    assert ok


def test_criterion_04_glambda_certification():
    t0 = time.perf_counter()
    d, k = MarginDistribution(EPS, 0.0), ExponentialKernel()
    grid = quad_grid(d, 20, 8)
    g = solve_glambda(d, k, LAM, grid)
    fine = quad_grid(d, 320, 8)
    res = optimality_residual(g, d, k, LAM, fine, np.linspace(0, 1, 2001))
    g2 = solve_glambda(d, k, LAM, grid.refined(d, 2))
    change = h_dist(g, g2)
    elapsed = time.perf_counter() - t0
    ok = res <= 1e-6 and change <= 1e-6 and elapsed < 5.0
    record_verdict(4, ok, f"residual {res:.2e} (<= 1e-6), doubling change {change:.2e} "
                          f"(<= 1e-6), {elapsed:.2f}s")
    assert ok


def test_criterion_05_margin_a5():
    d, k = MarginDistribution(EPS, 0.0), ExponentialKernel()
    g = solve_glambda(d, k, LAM, quad_grid(d, 20, 8))
    m, sign_ok = margin_delta(g, d, 2001)
    ok = m >= 0.5 * d.delta
    record_verdict(5, ok, f"min margin {m:.4f} (>= 0.5); signs agree: {sign_ok}")
    assert ok


def test_criterion_07_tail_error_is_log_linear():
    t0 = time.perf_counter()
    _, recs = tail_error_run()
    last = recs[-1].mean_excess_error
    suffix = defined_suffix(recs, "log10_err")
    slope, r2 = fit_slope(suffix, "n", "log10_err")
    elapsed = time.perf_counter() - t0
    ok = last <= 1e-3 and r2 >= 0.9 and slope < 0
    record_verdict(7, ok, f"E(200) = {last:.2e} (<= 1e-3), suffix n >= {suffix[0].n}: "
                          f"slope {slope:.4f} (< 0), R^2 {r2:.3f} (>= 0.9), {elapsed:.0f}s")
    assert ok


def test_criterion_08_scale_separation():
    _, err = tail_error_run()
    _, loss = tail_loss_run()
    l2 = loss[-1].mean_l2_loss
    e200 = err[-1].mean_excess_error
    ok = 1e-4 <= l2 <= 1e-2 and e200 <= 1e-3
    record_verdict(8, ok, f"L2 loss at n=2000 = {l2:.2e} (in [1e-4, 1e-2]), "
                          f"excess error at n=200 = {e200:.2e} (<= 1e-3)")
    assert ok


def test_criterion_09_loss_rate():
    _, loss = tail_loss_run()
    slope, r2 = fit_slope(loss, "log_n", "log_l2", (200, 2000))
    ok = -1.3 <= slope <= -0.7
    record_verdict(9, ok, f"log-log loss slope over [200, 2000] = {slope:.3f} "
                          f"(in [-1.3, -0.7]), R^2 {r2:.3f}")
    assert ok


def test_criterion_10_decreasing_step_slope():
    _, recs = power_step_run()
    stable = [r for r in recs if 0 < r.mean_excess_error < 1 / math.e]
    slope, r2 = fit_slope(stable, "log_n", "loglog_err")
    ok = -0.7 <= slope <= -0.3
    record_verdict(10, ok, f"slope {slope:.3f} (in [-0.7, -0.3]) over n in "
                           f"[{stable[0].n}, {stable[-1].n}], R^2 {r2:.3f}")
    assert ok


def test_criterion_11_concentration():
    t0 = time.perf_counter()
    b_n = math.sqrt(100 / 3)
    t_grid = np.linspace(0.0, 4 * b_n, 20)
    rep = mc_concentration_check(1.0, 100, t_grid, 100_000, make_rng(11))
    elapsed = time.perf_counter() - t0
    margin = float(np.min(rep.bound - rep.wilson_low))
    ok = rep.passed and elapsed < 30
    record_verdict(11, ok, f"Wilson lower limit <= bound at all 20 t "
                           f"(min slack {margin:.3f}), {elapsed:.1f}s")
    assert ok


def test_criterion_12_krr_gap_and_bayes_frequency():
    _, rows = krr_rows()
    rows = np.array(rows, dtype=float)
    ns = rows[:, 0].astype(int)
    holds = bool(np.all(rows[:, 2] <= rows[:, 3]))
    freq = [float(rows[ns == n, 6].mean()) for n in (50, 200, 800)]
    ok = holds and freq[0] <= freq[1] <= freq[2] and freq[2] >= 0.99
    record_verdict(12, ok, f"lhs <= rhs in all 300 fits: {holds}; P(R = R*) at n=50/200/800 "
                           f"= {freq[0]:.2f}/{freq[1]:.2f}/{freq[2]:.2f}")
    assert ok


def test_criterion_13_schedule_constants():
    worst = -np.inf
    for a in (0.0, 0.25, 0.5, 0.75, 1.0):
        sc = schedule_constants(GAMMA, LAM, a, 10_000)
        for ex, est in ((sc.alpha_exact, sc.alpha_est), (sc.beta_exact, sc.beta_est),
                        (sc.zeta_exact, sc.zeta_est)):
            worst = max(worst, float(np.max(ex - est)))
    ok = worst <= 0.0
    record_verdict(13, ok, f"max(exact - estimate) = {worst:.3e} (<= 0) for all alpha, n <= 1e4")
    assert ok


def test_criterion_14_determinism():
    cfg = ExperimentConfig(estimator="tail", replications=100, n_max=200)
    a = records_to_csv(run_experiment(cfg, jobs=1)).encode()
    b = records_to_csv(run_experiment(cfg, jobs=1)).encode()
    c = records_to_csv(run_experiment(cfg, jobs=2)).encode()
    ok = a == b == c
    record_verdict(14, ok, f"three runs (jobs 1, 1, 2) byte-identical: {ok} ({len(a)} bytes)")
    assert ok


def test_criterion_06_close_to_glambda_means_bayes():
    # runs last among the experiments: gathers every cached snapshot
    tail_error_run(), tail_loss_run(), power_step_run()
    d = MarginDistribution(EPS)
    g = solve_glambda(d, ExponentialKernel(), LAM, quad_grid(d))
    margin = margin_delta(g, d)[0]
    _, rows = krr_rows()
    rows = np.array(rows, dtype=float)
    # h_dist of each KRR fit to g_lambda is the lhs column; excess is 0 iff error_equal_bayes
    sets = SNAPSHOTS + [("krr", rows[:, 2], 1.0 - rows[:, 6])]
    total = stated_bad = general_bad = close = 0
    for _, hd, ex in sets:
        total += hd.size
        close += int(np.sum(hd < d.delta / 2))
        stated_bad += int(np.sum((hd < d.delta / 2) & (ex != 0)))
        general_bad += int(np.sum((hd < margin) & (ex != 0)))
    ok = stated_bad == 0
    record_verdict(6, ok, f"{total} snapshots, {close} with h_dist < delta/2R, counterexamples "
                          f"{stated_bad}; with the g_lambda margin {margin:.3f} instead: {general_bad}")
    assert ok
    assert general_bad == 0
