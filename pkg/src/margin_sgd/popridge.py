"""Population quantities: quadrature over rho_X and the regularized solution g_lambda.

g_lambda solves

    int K(x, z) g(x) drho(x) + lambda g(z) = int K(x, z) g*(x) drho(x)   for all z.

Discretising the integrals on Gauss nodes z_j with weights w_j gives a linear
system for the nodal values v_j = g(z_j). The solution is extended off-grid by

    g(z) = (1/lambda) sum_j w_j K(z_j, z) (g*(z_j) - v_j),

which is a finite kernel expansion and hence an element of H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dist import MarginDistribution
from .kernel import ExponentialKernel, HFunction, gram

DEFAULT_PANELS = 20
DEFAULT_ORDER = 8
DEFAULT_PROBE = 2001


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    panels: int
    order: int

    def __len__(self):
        return self.nodes.size

    def integrate(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    def refined(self, d: MarginDistribution, factor: int = 2) -> "QuadratureGrid":
        return quad_grid(d, self.panels * factor, self.order)


def quad_grid(d: MarginDistribution, panels: int = DEFAULT_PANELS,
              order: int = DEFAULT_ORDER) -> QuadratureGrid:
    """Composite Gauss-Legendre rule on S+ and S- with the density folded in."""
    if panels < 1 or order < 2:
        raise ValueError("need panels >= 1 and order >= 2")
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in d.intervals:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * t[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel() * d.density_value)
    return QuadratureGrid(np.concatenate(nodes), np.concatenate(weights), panels, order)


def probe_points(d: MarginDistribution, probe: int = DEFAULT_PROBE) -> np.ndarray:
    """``probe`` uniform points on each support interval, endpoints included."""
    if probe < 2:
        raise ValueError("need at least 2 probe points per interval")
    return np.concatenate([np.linspace(lo, hi, probe) for lo, hi in d.intervals])


def solve_glambda(d: MarginDistribution, k: ExponentialKernel, lam: float,
                  grid: QuadratureGrid | None = None) -> HFunction:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    grid = quad_grid(d) if grid is None else grid
    z, w = grid.nodes, grid.weights
    G = gram(k, z)
    gstar = d.bayes_regression(z)
    # Symmetrised form: (W^1/2 G W^1/2 + lam I) u = W^1/2 G W g*, with v = W^-1/2 u.
    sw = np.sqrt(w)
    A = sw[:, None] * G * sw[None, :]
    A[np.diag_indices_from(A)] += lam
    rhs = sw * (G @ (w * gstar))
    try:
        u = scipy.linalg.solve(A, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ArithmeticError("singular Nystrom system") from exc
    v = u / sw
    return HFunction(k, z, w * (gstar - v) / lam)


def optimality_residual(g: HFunction, d: MarginDistribution, k: ExponentialKernel,
                        lam: float, grid: QuadratureGrid, test_points) -> float:
    """sup_z |int K(x,z) (g - g*)(x) drho(x) + lam g(z)| with integrals on ``grid``.

    Pass a grid finer than the one used to build ``g``: on the solve grid itself the
    residual vanishes to rounding by construction.
    """
    z, w = grid.nodes, grid.weights
    tp = np.asarray(test_points, dtype=float)
    diff = w * (g(z) - d.bayes_regression(z))
    r = gram(k, tp, z) @ diff + lam * g(tp)
    return float(np.max(np.abs(r)))


def margin_delta(g, d: MarginDistribution, probe: int = DEFAULT_PROBE) -> tuple[float, bool]:
    """Minimum of sign(g*(x)) g(x) over a uniform probe of the support."""
    x = probe_points(d, probe)
    m = float(np.min(d.bayes_sign(x) * np.asarray(g(x))))
    return m, m > 0.0


def sup_deviation(g, d: MarginDistribution, probe: int = DEFAULT_PROBE) -> float:
    """max |g*(x) - g(x)| over the probe grid."""
    x = probe_points(d, probe)
    return float(np.max(np.abs(d.bayes_regression(x) - np.asarray(g(x)))))
