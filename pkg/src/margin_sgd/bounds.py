"""Theoretical constants, tail bounds and a Monte-Carlo check of the Bernstein tail.

Notation: R kernel bound, delta margin, s = ||g~* - g_lambda||_inf,
c^(1/2) = R (1 + 2 s), C = 2 (1 + s^2) Sigma, H = Sigma + lambda I.
Spectral quantities come from the weighted Nystrom matrix W^1/2 G W^1/2, whose
eigenvalues approximate those of Sigma and converge under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from .dist import MarginDistribution
from .kernel import ExponentialKernel, HFunction, gram, h_dist
from .popridge import DEFAULT_PROBE, QuadratureGrid, sup_deviation


@dataclass
class BoundParams:
    R: float
    delta: float
    lam: float
    gamma: float
    alpha: float
    sup_inf_norm: float
    trSigma: float
    eff_dim2: float
    h_norm_init: float
    operator_A: str = "identity"
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def c_half(self) -> float:
        return self.R * (1.0 + 2.0 * self.sup_inf_norm)

    @property
    def trC(self) -> float:
        return 2.0 * (1.0 + self.sup_inf_norm**2) * self.trSigma

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("spectrum")
        out["c_half"] = self.c_half
        out["trC"] = self.trC
        return out


def nystrom_spectrum(k: ExponentialKernel, grid: QuadratureGrid) -> np.ndarray:
    sw = np.sqrt(grid.weights)
    M = sw[:, None] * gram(k, grid.nodes) * sw[None, :]
    return np.clip(np.linalg.eigvalsh(M), 0.0, None)


def noise_constants(d: MarginDistribution, k: ExponentialKernel, g_lambda: HFunction,
                    grid: QuadratureGrid, probe: int = DEFAULT_PROBE, lam: float = 0.01,
                    gamma: float = 0.25, alpha: float = 0.0,
                    g0: HFunction | None = None) -> BoundParams:
    spec = nystrom_spectrum(k, grid)
    start = HFunction.zero(k) if g0 is None else g0
    return BoundParams(
        R=k.R,
        delta=d.delta,
        lam=lam,
        gamma=gamma,
        alpha=alpha,
        sup_inf_norm=sup_deviation(g_lambda, d, probe),
        trSigma=float(grid.weights @ k.diag(grid.nodes)),
        eff_dim2=float(np.sum(spec / (spec + lam) ** 2)),
        h_norm_init=h_dist(start, g_lambda),
        spectrum=spec,
    )


def trace_AH2C(params: BoundParams, operator: str | None = None) -> float:
    """tr(A H^-2 C) with A in {identity, sigma}."""
    op = params.operator_A if operator is None else operator
    s = params.spectrum
    scale = 2.0 * (1.0 + params.sup_inf_norm**2)
    if op == "identity":
        return scale * params.eff_dim2
    if op == "sigma":
        return scale * float(np.sum(s**2 / (s + params.lam) ** 2))
    raise ValueError(f"unknown operator {op!r}")


def E_t(params: BoundParams, t: float, operator: str | None = None) -> float:
    """4 tr(A H^-2 C) + 2 c^(1/2) ||A^(1/2)|| t / (3 lambda)."""
    op = params.operator_A if operator is None else operator
    a_half = 1.0 if op == "identity" else math.sqrt(float(np.max(params.spectrum)))
    return 4.0 * trace_AH2C(params, op) + 2.0 * params.c_half * a_half * t / (3.0 * params.lam)


# step-size products --------------------------------------------------------

@dataclass(frozen=True)
class ScheduleConstants:
    """alpha_n, beta_n, zeta_n for n = 1..N, exact and their closed-form estimates."""

    alpha_exact: np.ndarray
    beta_exact: np.ndarray
    zeta_exact: np.ndarray
    alpha_est: np.ndarray
    beta_est: np.ndarray
    zeta_est: np.ndarray


def schedule_constants(gamma: float, lam: float, alpha: float, n: int) -> ScheduleConstants:
    """Exact accumulation and closed-form estimates for gamma_k = gamma / k**alpha.

    alpha_n = prod (1 - gamma_i lam), beta_n = sum_k gamma_k^2 prod_{i>k} (1 - gamma_i lam)^2,
    zeta_n = max_k gamma_k prod_{i>k} (1 - gamma_i lam). The estimates for alpha = 1 need
    gamma lam < 1/2 and are NaN otherwise.
    """
    gl = gamma * lam
    if not gl < 1:
        raise ValueError("need gamma * lambda < 1")
    k = np.arange(1, n + 1, dtype=float)
    g = gamma / k**alpha
    f = 1.0 - g * lam
    a_ex = np.cumprod(f)
    b_ex = np.empty(n)
    z_ex = np.empty(n)
    b = z = 0.0
    for i in range(n):
        b = f[i] * f[i] * b + g[i] * g[i]
        z = max(f[i] * z, g[i])
        b_ex[i] = b
        z_ex[i] = z

    if alpha == 0.0:
        # equality case; the same running product avoids pow-vs-product rounding
        a_est = np.cumprod(np.full(n, 1.0 - gl))
        b_est = np.full(n, gamma / lam)
        z_est = np.full(n, gamma)
    elif alpha == 1.0:
        if gl < 0.5:
            a_est = k ** (-gl)
            b_est = 2 * (1 - gl) / (1 - 2 * gl) * 4**gl * gamma**2 / k ** (2 * gl)
        else:
            a_est = b_est = np.full(n, np.nan)
        z_est = gamma / ((1 - gl) * k**gl) if gl < 0.5 else np.full(n, np.nan)
    else:
        a_est = np.exp(-gl / (1 - alpha) * ((k + 1) ** (1 - alpha) - 1))
        L = 2 * gl / (1 - alpha) * 2 ** (1 - alpha) * (1 - 0.75 ** (1 - alpha))
        if alpha > 0.5:
            S = np.full(n, 2 * alpha / (2 * alpha - 1))
        elif alpha == 0.5:
            S = np.log(3 * k)
        else:
            S = k ** (1 - 2 * alpha) / (1 - 2 * alpha)
        b_est = gamma**2 * S * np.exp(-L * k ** (1 - alpha)) + 2**alpha * gamma / (lam * k**alpha)
        z_est = np.maximum(gamma / (1 - gl) * a_est, gamma / k**alpha)
    return ScheduleConstants(a_ex, b_ex, z_ex, a_est, b_est, z_est)


# concentration ---------------------------------------------------------------

def _check_tail_args(t, a_n, b_n):
    if t < 0 or a_n <= 0 or b_n <= 0:
        raise ValueError("need t >= 0 and positive a_n, b_n")


def pinelis_tail(t: float, a_n: float, b_n: float) -> float:
    """2 exp(-(b^2/a^2) phi(a t / b^2)) with phi(u) = (1 + u) log(1 + u) - u."""
    _check_tail_args(t, a_n, b_n)
    u = a_n * t / b_n**2
    phi = (1.0 + u) * math.log1p(u) - u
    return min(2.0, 2.0 * math.exp(-(b_n**2 / a_n**2) * phi))


def bernstein_tail(t: float, a_n: float, b_n: float) -> float:
    """2 exp(-t^2 / (2 (b^2 + a t / 3)))."""
    _check_tail_args(t, a_n, b_n)
    return min(2.0, 2.0 * math.exp(-t * t / (2.0 * (b_n**2 + a_n * t / 3.0))))


@dataclass(frozen=True)
class ConcentrationReport:
    t: np.ndarray
    empirical: np.ndarray
    wilson_low: np.ndarray
    bound: np.ndarray
    reps: int
    n: int

    @property
    def ok(self) -> np.ndarray:
        return self.wilson_low <= self.bound

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ok))


def mc_concentration_check(a: float, n: int, t_grid, reps: int,
                           rng: np.random.Generator, b_per_step: float | None = None,
                           chunk: int = 20000) -> ConcentrationReport:
    """Empirical P(|S_n| >= t) for i.i.d. uniform[-a, a] increments vs the Bernstein tail.

    The increments are bounded by a and have variance a^2/3, so a_n = a and
    b_n = sqrt(n) * b_per_step with b_per_step = a / sqrt(3) by default.
    """
    if reps < 1000:
        raise ValueError("use at least 1000 replications")
    b = a / math.sqrt(3.0) if b_per_step is None else b_per_step
    b_n = math.sqrt(n) * b
    t_grid = np.asarray(t_grid, dtype=float)
    sums = []
    left = reps
    while left:
        m = min(chunk, left)
        sums.append(np.abs(rng.uniform(-a, a, size=(m, n)).sum(axis=1)))
        left -= m
    s = np.concatenate(sums)
    counts = np.array([(s >= t).sum() for t in t_grid])
    low = np.array([binomtest(int(c), reps).proportion_ci(0.95, method="wilson").low
                    for c in counts])
    bound = np.array([bernstein_tail(t, a, b_n) for t in t_grid])
    return ConcentrationReport(t_grid, counts / reps, low, bound, reps, n)


# error bounds --------------------------------------------------------------

@dataclass(frozen=True)
class ErrorBound:
    value: float
    applicable: bool


def C_R(p: BoundParams) -> float:
    s = p.sup_inf_norm
    return (2 ** (p.alpha + 7) * p.gamma * p.R**2 * p.trSigma * (1 + s * s) / p.lam
            + 8 * p.gamma * p.R**2 * p.delta * (1 + 2 * s) / 3)


def K_R_inverse(p: BoundParams) -> float:
    s = p.sup_inf_norm
    return (2**9 * p.R**2 * (1 + s * s) * p.eff_dim2
            + 32 * p.delta * p.R**2 * (1 + 2 * s) / (3 * p.lam))


def K_R_full_inverse(p: BoundParams) -> float:
    s, h = p.sup_inf_norm, p.h_norm_init
    return max(128 * p.R**2 * (1 + s * s) * p.eff_dim2 + 8 * p.R**2 * (1 + 2 * s) / (3 * p.lam),
               64 * p.R**4 * h * p.eff_dim2 + 16 * p.R**4 * h / (3 * p.lam))


def C0(p: BoundParams) -> float:
    return 1.0 / (72.0 * (1.0 + p.lam * p.R**2) ** 2)


def _forgetting(p: BoundParams, n: float) -> float:
    gl = p.gamma * p.lam
    if p.alpha == 1.0:
        return math.exp(-gl * math.log(n + 1))
    return math.exp(-gl / (1 - p.alpha) * ((n + 1) ** (1 - p.alpha) - 1))


def _ratio(p: BoundParams) -> float:
    """delta / (5 R ||g0 - g_lambda||_H); infinite when starting at g_lambda."""
    denom = 5 * p.R * p.h_norm_init
    return math.inf if denom == 0 else p.delta / denom


def burn_in_tail(p: BoundParams) -> float:
    """Smallest real n with n >= (2 / gamma lambda) log(5 R ||g0 - g_lambda|| / delta)."""
    r = _ratio(p)
    return max(0.0, -2.0 / (p.gamma * p.lam) * math.log(r)) if math.isfinite(r) else 0.0


def thm_error_bounds(p: BoundParams, n: int) -> dict[str, ErrorBound]:
    """Bounds on P(R(g) != R*) for the four estimators, with burn-in flags."""
    d2 = p.delta**2
    r = _ratio(p)
    thm3 = ErrorBound(2 * math.exp(-d2 * n**p.alpha / C_R(p)), _forgetting(p, n) <= r)
    thm4 = ErrorBound(4 * math.exp(-d2 * (n + 1) / K_R_inverse(p)), n >= burn_in_tail(p))
    thm5 = ErrorBound(4 * math.exp(-C0(p) * p.lam**4 * d2 * n / p.R**8), True)
    full = ErrorBound(4 * math.exp(-d2 * (n + 1) / K_R_full_inverse(p)),
                      n >= 5 * p.R * p.h_norm_init / (p.lam * p.gamma * p.delta))
    return {"thm3": thm3, "thm4": thm4, "thm5_krr": thm5, "full_avg": full}


def weak_margin_rate(alpha_margin: float, beta_spec: float, gamma_src: float, n: float) -> float:
    """n ** (-alpha gamma / (2 gamma + 1 + 1/beta)); constants omitted."""
    if alpha_margin <= 0 or beta_spec <= 1 or gamma_src <= 0:
        raise ValueError("need alpha > 0, beta > 1, gamma > 0")
    return float(n) ** (-weak_margin_exponent(alpha_margin, beta_spec, gamma_src))


def weak_margin_exponent(alpha_margin: float, beta_spec: float, gamma_src: float) -> float:
    return alpha_margin * gamma_src / (2 * gamma_src + 1 + 1 / beta_spec)
