import numpy as np
import pytest

from margin_sgd.dist import MarginDistribution, SampleSet
from margin_sgd.kernel import HFunction
from margin_sgd.metrics import evaluate, excess_risk_01, l2_loss, risk_01, sign, train_metrics


def test_sign_convention():
    assert sign(0.0) == 1.0 and sign(-1e-300) == -1.0


def test_glambda_zero_excess(d, g_lambda):
    assert excess_risk_01(g_lambda, d) == 0.0


def test_constant_and_flipped():
    for p in (0.0, 0.2):
        d = MarginDistribution(0.05, p)
        assert excess_risk_01(lambda x: np.ones_like(np.asarray(x, float)), d) == pytest.approx((1 - 2 * p) / 2, abs=1e-12)
        assert excess_risk_01(lambda x: -d.bayes_regression(x), d) == pytest.approx(1 - 2 * p, abs=1e-12)
        assert risk_01(lambda x: -d.bayes_regression(x), d) == pytest.approx(1 - p, abs=1e-12)


def test_single_root_located():
    d = MarginDistribution(0.05)
    x0 = 0.3141592653
    # positive left of x0, negative right: wrong on [x0, 0.475]
    err = excess_risk_01(lambda x: x0 - np.asarray(x, float), d)
    assert err == pytest.approx((0.475 - x0) / 0.95, abs=1e-11)


def test_scale_invariance_and_resolution(d, k):
    g = HFunction(k, [0.1, 0.45, 0.55, 0.8], [1.0, -0.6, 0.9, -1.2])
    base = excess_risk_01(g, d)
    assert base > 0
    for c in (0.1, 10.0):
        assert excess_risk_01(g.scaled(c), d) == pytest.approx(base, abs=1e-12)
    assert abs(excess_risk_01(g, d, 1024) - base) < 1e-9


def test_l2(d, grid, g_lambda):
    assert l2_loss(g_lambda, g_lambda, d, grid) == 0.0
    assert l2_loss(lambda x: g_lambda(x) + 1, g_lambda, d, grid) == pytest.approx(1.0, abs=1e-12)
    assert l2_loss(lambda x: np.zeros_like(x), d.bayes_regression, d, grid) == pytest.approx(1.0, abs=1e-12)


def test_train_metrics(k):
    x = np.array([0.1, 0.2, 0.8])
    plus = SampleSet(x, np.ones(3))
    minus = SampleSet(x, -np.ones(3))
    zero = HFunction.zero(k)
    assert train_metrics(zero, plus) == (0.0, 1.0)
    assert train_metrics(zero, minus) == (1.0, 1.0)
    interp = HFunction(k, x, np.linalg.solve(k(x[:, None], x[None, :]), [1.0, 1.0, -1.0]))
    assert train_metrics(interp, SampleSet(x, np.array([1.0, 1.0, -1.0])))[0] == 0.0
    with pytest.raises(ValueError):
        train_metrics(zero, SampleSet(x[:0], x[:0]))


def test_report(d, k, grid, g_lambda):
    s = d.sample(np.random.default_rng(0), 20)
    rep = evaluate(g_lambda, d, g_lambda, grid, s)
    assert rep.risk_01 == d.bayes_risk() + rep.excess_risk_01
    assert rep.h_dist_vs_glambda == 0.0 and rep.l2_loss_vs_glambda == 0.0
    assert rep.train_error == 0.0
