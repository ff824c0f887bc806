import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from margin_sgd.kernel import (ExponentialKernel, HFunction, eval_kernel, gram, h_dist,
                               h_inner, h_norm)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_eval_examples():
    assert eval_kernel(ExponentialKernel(1.0), 0.3, 0.3) == 1.0
    assert eval_kernel(ExponentialKernel(1.0), 0.0, 1.0) == pytest.approx(0.36787944, abs=1e-8)
    assert eval_kernel(ExponentialKernel(2.0), 0.0, 1.0) == pytest.approx(0.60653066, abs=1e-8)


def test_bad_scale():
    with pytest.raises(ValueError):
        ExponentialKernel(0.0)


@given(unit, unit)
def test_symmetric_and_bounded(x, y):
    k = ExponentialKernel()
    assert eval_kernel(k, x, y) == eval_kernel(k, y, x)
    assert 0 < eval_kernel(k, x, y) <= k.R**2


def test_gram_examples(k):
    assert gram(k, [0.0], [0.0]).tolist() == [[1.0]]
    e = math.exp(-1)
    np.testing.assert_allclose(gram(k, [0.0, 1.0]), [[1, e], [e, 1]], rtol=0, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(gram(k, [0.0, 0.5, 1.0])) > 0)
    with pytest.raises(ValueError):
        gram(k, [])
    with pytest.raises(ValueError):
        gram(k, [0.1], [])


def test_gram_psd(k, rng):
    for _ in range(20):
        x = rng.uniform(0, 1, rng.integers(1, 21))
        assert np.linalg.eigvalsh(gram(k, x)).min() >= -1e-10


def test_inner_examples(k):
    f = HFunction.feature(k, 0.3)
    assert h_inner(f, f) == pytest.approx(1.0, abs=1e-15)
    g = HFunction(k, [0.0, 1.0], [1.0, -1.0])
    assert h_inner(g, g) == pytest.approx(1.26424112, abs=1e-8)
    assert h_inner(g, HFunction.zero(k)) == 0.0
    with pytest.raises(ValueError):
        h_inner(g, HFunction(ExponentialKernel(2.0), [0.1], [1.0]))


def test_dist_examples(k):
    f = HFunction(k, [0.2, 0.7], [0.4, -1.3])
    assert h_dist(f, f) == 0.0
    d01 = h_dist(HFunction.feature(k, 0.0), HFunction.feature(k, 1.0))
    assert d01 == pytest.approx(1.12438, abs=1e-5)
    assert d01 == pytest.approx(math.sqrt(2 - 2 * math.exp(-1)), abs=1e-14)


def _random_fn(k, rng, m=5):
    return HFunction(k, rng.uniform(0, 1, m), rng.normal(size=m))


def test_triangle(k, rng):
    for _ in range(100):
        f, g, h = (_random_fn(k, rng) for _ in range(3))
        assert h_dist(f, h) <= h_dist(f, g) + h_dist(g, h) + 1e-12


def test_reproducing_and_sup_bound(k, rng):
    for _ in range(100):
        f = _random_fn(k, rng)
        x = rng.uniform(0, 1)
        assert f(x) == pytest.approx(h_inner(f, HFunction.feature(k, x)), abs=1e-12)
        assert abs(f(x)) <= k.R * h_norm(f) + 1e-12


def test_offset_flatten(k, rng):
    base = _random_fn(k, rng, 4)
    mid = HFunction(k, [0.5], [2.0], base, 0.7)
    top = HFunction(k, [0.1, 0.9], [1.0, -1.0], mid, -1.5)
    x = np.linspace(0, 1, 23)
    np.testing.assert_allclose(top.flattened()(x), top(x), rtol=0, atol=1e-12)
    manual = (HFunction(k, [0.1, 0.9], [1.0, -1.0])(x)
              - 1.5 * (HFunction(k, [0.5], [2.0])(x) + 0.7 * base(x)))
    np.testing.assert_allclose(top(x), manual, rtol=0, atol=1e-12)


def test_norm_zero_iff_cancelling(k):
    f = HFunction(k, [0.3, 0.3, 0.6], [1.0, -1.0, 0.0])
    assert h_norm(f) == 0.0
    assert h_norm(HFunction(k, [0.3], [1e-3])) > 0


@settings(max_examples=50)
@given(st.lists(unit, min_size=1, max_size=6), st.floats(-3, 3), st.floats(-3, 3))
def test_bilinear(xs, a, b):
    k = ExponentialKernel()
    f = HFunction(k, xs, np.linspace(-1, 1, len(xs)))
    g = HFunction(k, [0.5], [1.0])
    h = HFunction(k, [0.1, 0.95], [0.3, 2.0])
    lhs = h_inner(f * a + g * b, h)
    rhs = a * h_inner(f, h) + b * h_inner(g, h)
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert h_inner(f, h) == pytest.approx(h_inner(h, f), abs=1e-14)
