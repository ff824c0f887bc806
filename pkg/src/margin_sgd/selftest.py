"""Quick invariant checks run by ``margin-sgd selftest``."""

from __future__ import annotations

import math

import numpy as np

from .bounds import bernstein_tail, pinelis_tail, schedule_constants
from .dist import MarginDistribution, make_rng
from .kernel import ExponentialKernel, HFunction, gram, h_norm
from .metrics import excess_risk_01
from .popridge import quad_grid, solve_glambda
from .sgd import SgdState, StepSchedule, tail_from_averages, tail_start


def _replay_matches() -> bool:
    # rebuild every iterate as an explicit expansion and compare with the recursion
    k = ExponentialKernel()
    d = MarginDistribution()
    s = d.sample(make_rng(1), 50)
    state = SgdState(0.01, StepSchedule(0.25))
    centers, coefs = [], []
    for x, y in s:
        g = HFunction(k, centers, coefs)
        r = g(x) - y
        coefs = [0.9975 * a for a in coefs] + [-0.25 * r]
        centers.append(x)
        state.step(x, y)
    grid = np.linspace(0, 1, 11)
    return bool(np.max(np.abs(state.iterate_fn()(grid) - HFunction(k, centers, coefs)(grid))) <= 1e-10)


def _tail_identity() -> bool:
    d = MarginDistribution()
    s = d.sample(make_rng(2), 40)
    state = SgdState(0.01, StepSchedule(0.25), averaging=True)
    avgs = {0: np.zeros(0)}
    ok = True
    for i, (x, y) in enumerate(s, 1):
        state.step(x, y)
        avgs[i] = state.averaged_coefs()[0]
        if i >= 2:
            rebuilt = tail_from_averages(avgs[i], avgs[tail_start(i) - 1], i)
            ok &= bool(np.max(np.abs(rebuilt - state.tail_coefs()[0])) <= 1e-12)
    return ok


def _contraction() -> bool:
    k = ExponentialKernel()
    d = MarginDistribution()
    rng = make_rng(3)
    g0 = HFunction(k, [0.2, 0.8], [1.0, -1.0])
    state = SgdState(0.01, StepSchedule(0.25), g0=g0)
    prod = 1.0
    for x in d.sample(rng, 60).x:
        state.homogeneous_step(x)
        prod *= 1 - 0.25 * 0.01
    return h_norm(state.iterate_fn()) <= prod * h_norm(g0) + 1e-12


def _tails() -> bool:
    ok = abs(bernstein_tail(1, 1, 1) - 2 * math.exp(-0.375)) < 1e-12
    return ok and all(pinelis_tail(t, 1, 1) <= bernstein_tail(t, 1, 1) for t in (0.1, 1, 10))


def _schedule() -> bool:
    sc = schedule_constants(0.25, 0.01, 0.0, 100)
    return abs(sc.alpha_exact[-1] - (1 - 0.0025) ** 100) < 1e-12 and sc.beta_exact[-1] <= 25.0


def _glambda_sign() -> bool:
    d = MarginDistribution()
    g = solve_glambda(d, ExponentialKernel(), 0.01, quad_grid(d, 10, 8))
    return excess_risk_01(g, d) == 0.0


def _gram_psd() -> bool:
    x = make_rng(4).uniform(0, 1, 30)
    return float(np.linalg.eigvalsh(gram(ExponentialKernel(), x)).min()) > -1e-12


CHECKS = {
    "recursion matches expansion replay": _replay_matches,
    "tail average rebuilt from full averages": _tail_identity,
    "homogeneous recursion contracts": _contraction,
    "bernstein dominates pinelis": _tails,
    "constant-step schedule constants": _schedule,
    "g_lambda has the Bayes sign": _glambda_sign,
    "exponential Gram matrix is PSD": _gram_psd,
}


def run_selftest(out=print) -> bool:
    ok = True
    for name, check in CHECKS.items():
        passed = bool(check())
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
