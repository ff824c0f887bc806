"""Regularized kernel least-squares SGD in coefficient space.

The function-space recursion

    g_n = g_{n-1} - gamma_n [ (g_{n-1}(x_n) - y_n) K_{x_n} + lambda (g_{n-1} - g0) ]

keeps g_n of the form ``c_n g0 + sum_{i<=n} a_i^n K_{x_i}``. Matching terms gives

    a_i^n = (1 - gamma_n lambda) a_i^{n-1}                  for i < n
    a_n^n = -gamma_n (g_{n-1}(x_n) - y_n)
    c_n   = (1 - gamma_n lambda) c_{n-1} + gamma_n lambda,   c_0 = 1 if g0 is given

so with c_0 = 1 the multiplier stays at 1, and without g0 it stays at 0.

Averages
--------
Full average over g_0, ..., g_n (n + 1 terms). Tail average over the window
g_m, ..., g_n with m = n // 2, normalised by the window size n - m + 1. With
these conventions

    tail_n = ((n + 1) avg_n - m avg_{m-1}) / (n - m + 1)

holds exactly for every n >= 2 (see ``tail_from_averages``); for even n it is
2 avg_n - avg_{n/2} up to O(1/n) weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dist import MarginDistribution, SampleSet
from .kernel import ExponentialKernel, HFunction


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """gamma_n = gamma / n**alpha; alpha = 0 is the constant step."""

    gamma: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigurationError("step size must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError("step exponent alpha must lie in [0, 1]")

    @classmethod
    def constant(cls, gamma: float) -> "StepSchedule":
        return cls(gamma, 0.0)

    @classmethod
    def power(cls, gamma: float, alpha: float) -> "StepSchedule":
        return cls(gamma, alpha)

    @property
    def kind(self) -> str:
        return "constant" if self.alpha == 0.0 else "power"

    def gamma_at(self, n):
        if self.alpha == 0.0:
            return self.gamma if np.ndim(n) == 0 else np.full(np.shape(n), self.gamma)
        return self.gamma / np.asarray(n, dtype=float) ** self.alpha


def tail_start(n: int) -> int:
    """First index of the tail-averaging window g_{n//2}, ..., g_n."""
    return n // 2


def gamma_zero(R: float, lam: float) -> float:
    """Largest constant step allowed with averaging, 1 / (R^2 + 2 lambda)."""
    return 1.0 / (R * R + 2.0 * lam)


class SgdState:
    """Mutable single-owner state of one SGD run.

    Coefficient storage grows geometrically; every public accessor returns
    copies so snapshots stay valid after further steps.
    """

    def __init__(self, lam: float, schedule: StepSchedule, g0: HFunction | None = None,
                 kernel: ExponentialKernel | None = None, averaging: bool = False,
                 capacity: int = 64):
        kernel = g0.kernel if (kernel is None and g0 is not None) else kernel
        kernel = ExponentialKernel() if kernel is None else kernel
        if g0 is not None and g0.kernel != kernel:
            raise ConfigurationError("g0 lives in a different RKHS")
        if not lam > 0:
            raise ConfigurationError("lambda must be positive")
        if schedule.gamma * lam >= 1.0:
            raise ConfigurationError(
                f"gamma * lambda = {schedule.gamma * lam:g} must be < 1")
        if averaging and schedule.kind == "constant" \
                and schedule.gamma > gamma_zero(kernel.R, lam):
            raise ConfigurationError(
                f"averaging needs gamma <= 1/(R^2 + 2 lambda) = {gamma_zero(kernel.R, lam):g}")
        self.kernel = kernel
        self.lam = float(lam)
        self.schedule = schedule
        self.g0 = g0
        self.n = 0
        cap = max(int(capacity), 1)
        self._x = np.zeros(cap)
        self._a = np.zeros(cap)
        self._births = np.zeros(cap)
        self._sum = np.zeros(cap)
        self._tail = np.zeros(cap)
        self._lag = np.zeros(cap)
        self._m = 0
        self.c = 1.0 if g0 is not None else 0.0
        self._c_hist = [self.c]
        self._c_sum = self.c
        self._c_tail = self.c

    # storage -------------------------------------------------------------

    def _reserve(self, size):
        cap = self._x.size
        if size <= cap:
            return
        new = max(size, 2 * cap)
        for name in ("_x", "_a", "_births", "_sum", "_tail", "_lag"):
            old = getattr(self, name)
            buf = np.zeros(new)
            buf[:cap] = old
            setattr(self, name, buf)

    # evaluation ----------------------------------------------------------

    @property
    def centers(self) -> np.ndarray:
        return self._x[: self.n].copy()

    @property
    def coefs(self) -> np.ndarray:
        return self._a[: self.n].copy()

    @property
    def births(self) -> np.ndarray:
        """a_i^i, the value of each coefficient when it was created."""
        return self._births[: self.n].copy()

    @property
    def c_history(self) -> list[float]:
        return list(self._c_hist)

    def _current_value(self, x, krow=None):
        n = self.n
        if krow is None:
            val = self._a[:n] @ self.kernel(self._x[:n], x) if n else 0.0
        else:
            val = self._a[:n] @ krow[:n]
        if self.g0 is not None and self.c != 0.0:
            val += self.c * self.g0(x)
        return float(val)

    # recursion -----------------------------------------------------------

    def _advance(self, x, new_coef, decay, c_new):
        n = self.n
        self._reserve(n + 1)
        self._a[:n] *= decay
        self._a[n] = new_coef
        self._births[n] = new_coef
        self._x[n] = x
        self.c = c_new
        self.n = n = n + 1
        self._c_hist.append(c_new)
        self._sum[:n] += self._a[:n]
        self._c_sum += c_new
        self._tail[:n] += self._a[:n]
        self._c_tail += c_new
        m_new = tail_start(n)
        if m_new > self._m:
            # window start moves from m to m + 1: drop g_m, then advance the lagged copy
            m = self._m
            self._tail[:m] -= self._lag[:m]
            self._c_tail -= self._c_hist[m]
            gm = self.schedule.gamma_at(m + 1)
            self._lag[:m] *= 1.0 - gm * self.lam
            self._lag[m] = self._births[m]
            self._m = m + 1

    def step(self, x: float, y: float, krow=None) -> "SgdState":
        """One SGD step on the pair (x, y).

        ``krow`` may carry precomputed K(x_i, x) for the existing centers.
        """
        gamma = float(self.schedule.gamma_at(self.n + 1))
        pred = self._current_value(x, krow)
        decay = 1.0 - gamma * self.lam
        c_new = decay * self.c + gamma * self.lam if self.g0 is not None else 0.0
        self._advance(float(x), -gamma * (pred - y), decay, c_new)
        return self

    def homogeneous_step(self, x: float, krow=None) -> "SgdState":
        """eta_n = (I - gamma_n (K_x (x) K_x + lambda I)) eta_{n-1}, with eta_0 = g0."""
        gamma = float(self.schedule.gamma_at(self.n + 1))
        pred = self._current_value(x, krow)
        decay = 1.0 - gamma * self.lam
        self._advance(float(x), -gamma * pred, decay, decay * self.c)
        return self

    # estimators ----------------------------------------------------------

    def iterate_fn(self) -> HFunction:
        return HFunction(self.kernel, self.centers, self.coefs, self.g0, self.c)

    def averaged_coefs(self) -> tuple[np.ndarray, float]:
        n = self.n
        return self._sum[:n] / (n + 1), self._c_sum / (n + 1)

    def tail_coefs(self) -> tuple[np.ndarray, float]:
        n = self.n
        if n < 2:
            raise ValueError("tail average needs n >= 2")
        count = n - tail_start(n) + 1
        return self._tail[:n] / count, self._c_tail / count

    def averaged_fn(self) -> HFunction:
        a, c = self.averaged_coefs()
        return HFunction(self.kernel, self.centers, a, self.g0, c)

    def tail_averaged_fn(self) -> HFunction:
        a, c = self.tail_coefs()
        return HFunction(self.kernel, self.centers, a, self.g0, c)


def new_state(lam: float, schedule: StepSchedule, g0: HFunction | None = None,
              kernel: ExponentialKernel | None = None, averaging: bool = False) -> SgdState:
    return SgdState(lam, schedule, g0=g0, kernel=kernel, averaging=averaging)


def step(state: SgdState, sample) -> SgdState:
    x, y = sample
    return state.step(x, y)


def homogeneous_step(state: SgdState, x: float) -> SgdState:
    return state.homogeneous_step(x)


def iterate_fn(state: SgdState) -> HFunction:
    return state.iterate_fn()


def averaged_fn(state: SgdState) -> HFunction:
    return state.averaged_fn()


def tail_averaged_fn(state: SgdState) -> HFunction:
    return state.tail_averaged_fn()


def tail_from_averages(avg_n, avg_prev, n: int):
    """Tail coefficients from full averages at n and at tail_start(n) - 1.

    ``avg_prev`` is shorter than ``avg_n``; it is zero-padded. Works on coefficient
    arrays or on the scalar g0 multipliers.
    """
    m = tail_start(n)
    avg_n = np.asarray(avg_n, dtype=float)
    prev = np.zeros_like(avg_n)
    avg_prev = np.asarray(avg_prev, dtype=float)
    if prev.ndim:
        prev[: avg_prev.size] = avg_prev
    else:
        prev = avg_prev
    return ((n + 1) * avg_n - m * prev) / (n - m + 1)


@dataclass(frozen=True)
class Snapshot:
    n: int
    coefs: np.ndarray
    avg_coefs: np.ndarray
    tail_coefs: np.ndarray | None
    c: float
    avg_c: float
    tail_c: float | None


@dataclass
class RunRecord:
    kernel: ExponentialKernel
    g0: HFunction | None
    samples: SampleSet
    centers: np.ndarray
    snapshots: list[Snapshot] = field(default_factory=list)

    def _fn(self, snap, coefs, c):
        return HFunction(self.kernel, self.centers[: snap.n], coefs, self.g0, c)

    def iterate(self, i: int) -> HFunction:
        s = self.snapshots[i]
        return self._fn(s, s.coefs, s.c)

    def averaged(self, i: int) -> HFunction:
        s = self.snapshots[i]
        return self._fn(s, s.avg_coefs, s.avg_c)

    def tail(self, i: int) -> HFunction:
        s = self.snapshots[i]
        if s.tail_coefs is None:
            raise ValueError("tail average needs n >= 2")
        return self._fn(s, s.tail_coefs, s.tail_c)

    @property
    def ns(self) -> list[int]:
        return [s.n for s in self.snapshots]


def snapshot(state: SgdState) -> Snapshot:
    a, c = state.averaged_coefs()
    t, tc = state.tail_coefs() if state.n >= 2 else (None, None)
    return Snapshot(state.n, state.coefs, a, t, state.c, c, tc)


def run(state: SgdState, d: MarginDistribution, rng: np.random.Generator, n: int,
        checkpoints=None, gram_matrix: np.ndarray | None = None) -> RunRecord:
    """Stream ``n`` fresh samples through ``state``, snapshotting at ``checkpoints``.

    Checkpoints count steps of this run. ``gram_matrix`` (K between the drawn
    samples) may be supplied when the caller already needs it; the state must
    then start empty.
    """
    checkpoints = [n] if checkpoints is None else sorted(int(c) for c in checkpoints)
    if checkpoints and (checkpoints[0] < 1 or checkpoints[-1] > n):
        raise ValueError("checkpoints must lie in [1, n]")
    samples = d.sample(rng, n)
    if gram_matrix is not None and state.n != 0:
        raise ValueError("a precomputed Gram matrix needs a fresh state")
    want = set(checkpoints)
    snaps = []
    for i in range(n):
        krow = None if gram_matrix is None else gram_matrix[i]
        state.step(samples.x[i], samples.y[i], krow)
        if i + 1 in want:
            snaps.append(snapshot(state))
    return RunRecord(state.kernel, state.g0, samples, state.centers, snaps)
