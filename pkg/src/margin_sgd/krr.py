"""Kernel ridge regression and the deviation terms that control its distance to g_lambda."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dist import MarginDistribution, SampleSet
from .kernel import ExponentialKernel, HFunction, gram, h_dist, quad_form
from .popridge import QuadratureGrid


@dataclass(frozen=True)
class KrrFit:
    model: HFunction
    lam: float
    n: int

    @property
    def alpha(self) -> np.ndarray:
        return self.model.coefs


def _weights(n, weights):
    if weights is None:
        return np.full(n, 1.0 / n)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,):
        raise ValueError("one weight per sample is required")
    return weights


def fit_krr(samples: SampleSet, k: ExponentialKernel, lam: float, weights=None) -> KrrFit:
    """Minimiser of sum_i w_i (g(x_i) - y_i)^2 + lam ||g||_H^2, w_i = 1/n by default.

    With uniform weights the coefficients solve (G + n lam I) alpha = y. General
    weights give (W G + lam I) alpha = W y, which is what the operator form
    (Sigma_hat + lam I) g = sum_i w_i y_i K_{x_i} reduces to on the sample span.
    """
    x, y = np.asarray(samples.x, dtype=float), np.asarray(samples.y, dtype=float)
    n = x.size
    if n < 1:
        raise ValueError("need at least one sample")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    G = gram(k, x)
    if weights is None:
        A = G.copy()
        A[np.diag_indices_from(A)] += n * lam
        alpha = scipy.linalg.solve(A, y, assume_a="pos")
    else:
        w = _weights(n, weights)
        A = w[:, None] * G
        A[np.diag_indices_from(A)] += lam
        alpha = scipy.linalg.solve(A, w * y)
    return KrrFit(HFunction(k, x, alpha), lam, n)


def u_n(samples: SampleSet, d: MarginDistribution, k: ExponentialKernel,
        grid: QuadratureGrid, weights=None) -> float:
    """|| sum_i w_i y_i K_{x_i} - E[y K_x] ||_H, the mean embedding taken on ``grid``."""
    x, y = np.asarray(samples.x, dtype=float), np.asarray(samples.y, dtype=float)
    w = _weights(x.size, weights)
    q = grid.weights * d.bayes_regression(grid.nodes)
    val = quad_form(k, np.concatenate([x, grid.nodes]), np.concatenate([w * y, -q]))
    return float(np.sqrt(max(val, 0.0)))


def v_hs(samples: SampleSet, k: ExponentialKernel, d: MarginDistribution,
         grid: QuadratureGrid, weights=None) -> float:
    """Hilbert-Schmidt norm of Sigma - Sigma_hat; dominates the operator norm."""
    x = np.asarray(samples.x, dtype=float)
    w = _weights(x.size, weights)
    # ||sum_a c_a K_a (x) K_a||_HS^2 = sum_ab c_a c_b K(a, b)^2
    val = quad_form(k, np.concatenate([x, grid.nodes]),
                    np.concatenate([w, -grid.weights]), power=2)
    return float(np.sqrt(max(val, 0.0)))


def lemma2_gap(fit: KrrFit, g_lambda: HFunction, u: float, v: float, lam: float,
               R: float) -> tuple[float, float]:
    """(||g_hat - g_lambda||_H, u/lam + R v/lam^2)."""
    return h_dist(fit.model, g_lambda), u / lam + R * v / lam**2
