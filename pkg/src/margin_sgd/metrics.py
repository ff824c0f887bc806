"""Risk, loss and distance metrics of an estimator against the margin distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dist import MarginDistribution
from .kernel import HFunction, h_dist
from .popridge import QuadratureGrid

DEFAULT_RESOLUTION = 512
ROOT_TOL = 1e-12


def sign(u):
    """sign(u) with sign(0) = +1."""
    return np.where(np.asarray(u) >= 0, 1.0, -1.0)


@dataclass(frozen=True)
class EvalReport:
    excess_risk_01: float
    risk_01: float
    l2_loss_vs_glambda: float
    l2_loss_vs_gstar: float
    h_dist_vs_glambda: float
    train_error: float
    train_loss: float


def scan_points(d: MarginDistribution, resolution: int = DEFAULT_RESOLUTION) -> list[np.ndarray]:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return [np.linspace(lo, hi, resolution) for lo, hi in d.intervals]


def _wrong_length(fn, xs, vals, target):
    """Length of {x in [xs[0], xs[-1]] : sign(fn(x)) != target}.

    Between consecutive scan points with equal sign the sign is taken as
    constant; a sign change is located by bracketing root refinement.
    """
    s = sign(vals)
    wrong = s != target
    seg = np.diff(xs)
    same = s[:-1] == s[1:]
    total = float(seg[same & wrong[:-1]].sum())
    for i in np.flatnonzero(~same):
        a, b = xs[i], xs[i + 1]
        r = brentq(lambda t: float(fn(t)), a, b, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps)
        if wrong[i]:
            total += r - a
        else:
            total += b - r
    return total


def excess_risk_01(g, d: MarginDistribution, resolution: int = DEFAULT_RESOLUTION,
                   values=None) -> float:
    """(1 - 2p) rho_X{sign g != sign g*}, by root bracketing on a uniform scan.

    ``values`` may carry g on ``scan_points(d, resolution)`` (concatenated) when
    the caller has them already.
    """
    pts = scan_points(d, resolution)
    if values is not None:
        values = np.asarray(values, dtype=float)
        chunks = np.split(values, [resolution])
    else:
        chunks = [np.asarray(g(x)) for x in pts]
    targets = (1.0, -1.0)
    length = sum(_wrong_length(g, x, v, t) for x, v, t in zip(pts, chunks, targets))
    return d.delta * d.density_value * length


def risk_01(g, d: MarginDistribution, resolution: int = DEFAULT_RESOLUTION) -> float:
    return d.bayes_risk() + excess_risk_01(g, d, resolution)


def l2_loss(g, ref, d: MarginDistribution, grid: QuadratureGrid) -> float:
    """int (g - ref)^2 drho_X; ``ref`` is a callable or its values on the grid nodes."""
    z = grid.nodes
    r = ref(z) if callable(ref) else np.asarray(ref, dtype=float)
    return float(grid.weights @ (np.asarray(g(z)) - r) ** 2)


def train_metrics(g, samples) -> tuple[float, float]:
    x = np.asarray(samples.x, dtype=float)
    y = np.asarray(samples.y, dtype=float)
    if x.size == 0:
        raise ValueError("train metrics need at least one sample")
    pred = np.asarray(g(x))
    return float(np.mean(sign(pred) != y)), float(np.mean((pred - y) ** 2))


def evaluate(g: HFunction, d: MarginDistribution, g_lambda: HFunction,
             grid: QuadratureGrid, samples, resolution: int = DEFAULT_RESOLUTION) -> EvalReport:
    excess = excess_risk_01(g, d, resolution)
    err, loss = train_metrics(g, samples)
    return EvalReport(
        excess_risk_01=excess,
        risk_01=d.bayes_risk() + excess,
        l2_loss_vs_glambda=l2_loss(g, g_lambda, d, grid),
        l2_loss_vs_gstar=l2_loss(g, d.bayes_regression, d, grid),
        h_dist_vs_glambda=h_dist(g, g_lambda),
        train_error=err,
        train_loss=loss,
    )
