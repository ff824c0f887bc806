"""Replicated simulations: configuration, per-replication metrics, aggregation and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.stats import linregress

from .dist import MarginDistribution, make_rng
from .kernel import ExponentialKernel, HFunction, gram, h_norm
from .krr import fit_krr, lemma2_gap, u_n, v_hs
from .metrics import excess_risk_01, scan_points, sign
from .popridge import QuadratureGrid, quad_grid, solve_glambda
from .sgd import ConfigurationError, StepSchedule, gamma_zero, new_state

ESTIMATORS = ("plain", "averaged", "tail", "krr")
SUBCOMMANDS = ("simulate", "krr", "bounds", "concentration", "glambda", "selftest")
KRR_MAX_N = 4000
CSV_COLUMNS = ("n", "mean_excess_error", "mean_l2_loss", "mean_train_error",
               "mean_train_loss", "mean_h_dist", "log10_err", "loglog_err")
KRR_COLUMNS = ("n", "seed", "lhs", "rhs", "u", "v", "error_equal_bayes")

_ALIASES = {"lambda": "lam", "n": "n_max", "reps": "replications", "seed": "base_seed",
            "out": "output", "p": "flip_p"}


@dataclass
class ExperimentConfig:
    subcommand: str = "simulate"
    epsilon: float = 0.05
    flip_p: float = 0.0
    sigma: float = 1.0
    lam: float = 0.01
    schedule: str = "constant"
    gamma: float = 0.25
    alpha: float = 0.0
    n_max: int = 200
    checkpoints: list[int] | None = None
    checkpoint_every: int = 10
    replications: int = 1000
    base_seed: int = 0
    panels: int = 20
    order: int = 8
    resolution: int = 512
    output: str | None = None
    estimator: str = "tail"
    jobs: int = 1

    # derived objects -----------------------------------------------------

    @property
    def distribution(self) -> MarginDistribution:
        return MarginDistribution(self.epsilon, self.flip_p)

    @property
    def kernel(self) -> ExponentialKernel:
        return ExponentialKernel(self.sigma)

    @property
    def step_schedule(self) -> StepSchedule:
        alpha = 0.0 if self.schedule == "constant" else self.alpha
        return StepSchedule(self.gamma, alpha)

    def checkpoint_list(self) -> list[int]:
        if self.checkpoints:
            return sorted(int(c) for c in self.checkpoints)
        cps = list(range(self.checkpoint_every, self.n_max + 1, self.checkpoint_every))
        if not cps or cps[-1] != self.n_max:
            cps.append(self.n_max)
        return cps

    # validation ----------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(f"unknown subcommand {self.subcommand!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        if self.schedule not in ("constant", "power"):
            raise ConfigurationError("schedule must be 'constant' or 'power'")
        if self.schedule == "power" and not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError("power schedule needs alpha in (0, 1]")
        try:
            self.distribution
            self.kernel
            self.step_schedule
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if not self.lam > 0:
            raise ConfigurationError("lambda must be positive")
        if self.gamma * self.lam >= 1:
            raise ConfigurationError("gamma * lambda must be < 1")
        if self.estimator in ("averaged", "tail") and self.schedule == "constant" \
                and self.gamma > gamma_zero(self.kernel.R, self.lam):
            raise ConfigurationError("averaging needs gamma <= 1/(R^2 + 2 lambda)")
        if self.n_max < 1 or self.replications < 1 or self.checkpoint_every < 1:
            raise ConfigurationError("n, reps and checkpoint_every must be >= 1")
        if self.panels < 1 or self.order < 2 or self.resolution < 2 or self.jobs < 1:
            raise ConfigurationError("panels >= 1, order >= 2, resolution >= 2, jobs >= 1")
        cps = self.checkpoint_list()
        if cps[0] < 1 or cps[-1] > self.n_max or len(set(cps)) != len(cps):
            raise ConfigurationError("checkpoints must be distinct and lie in [1, n]")
        if self.estimator == "tail" and self.subcommand == "simulate" and cps[0] < 2:
            raise ConfigurationError("tail averaging needs checkpoints >= 2")
        if (self.estimator == "krr" or self.subcommand == "krr") and self.n_max > KRR_MAX_N:
            raise ConfigurationError(f"kernel ridge runs are capped at n = {KRR_MAX_N}")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        return self

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_keyvalue(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, list):
                v = ",".join(str(c) for c in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls().updated(data)

    def updated(self, data: dict) -> "ExperimentConfig":
        """Copy with ``data`` applied; string values are coerced to field types."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        changes = {}
        for key, value in data.items():
            name = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if name not in types:
                raise ConfigurationError(f"unknown config key {key!r}")
            if value is None:
                continue
            changes[name] = _coerce(name, types[name], value)
        return dataclasses.replace(self, **changes)


def _coerce(name, typ, value):
    typ = str(typ)
    try:
        if name == "checkpoints":
            if isinstance(value, str):
                return [int(v) for v in value.split(",") if v.strip()]
            return [int(v) for v in value]
        if typ.startswith("int"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if typ.startswith("float"):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value {value!r} for {name}") from exc


def parse_keyvalue(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    text = Path(path).read_text()
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        data = json.loads(text)
    else:
        data = parse_keyvalue(text)
    return ExperimentConfig.from_dict(data)


# population setup ------------------------------------------------------------

def population(cfg: ExperimentConfig) -> tuple[QuadratureGrid, HFunction]:
    d = cfg.distribution
    grid = quad_grid(d, cfg.panels, cfg.order)
    return grid, solve_glambda(d, cfg.kernel, cfg.lam, grid)


class ReplicationEvaluator:
    """Metrics for expansions over prefixes of one sample path.

    Kernel matrices between the samples and the scan points, quadrature nodes
    and the samples themselves are built once, so each checkpoint costs a few
    matrix-vector products.
    """

    def __init__(self, cfg: ExperimentConfig, grid: QuadratureGrid, g_lambda: HFunction,
                 x: np.ndarray, y: np.ndarray):
        k = cfg.kernel
        self.cfg = cfg
        self.d = cfg.distribution
        self.k = k
        self.x, self.y = x, y
        self.w = grid.weights
        self.K_scan = gram(k, np.concatenate(scan_points(self.d, cfg.resolution)), x)
        self.K_quad = gram(k, grid.nodes, x)
        self.G = gram(k, x)
        self.gl_quad = g_lambda(grid.nodes)
        self.gs_quad = self.d.bayes_regression(grid.nodes)
        self.gl_at_x = g_lambda(x)
        self.gl_norm2 = h_norm(g_lambda) ** 2

    def metrics(self, coefs: np.ndarray) -> np.ndarray:
        """[excess 0-1, L2 to g_lambda, train error, train loss, H-distance to g_lambda]."""
        n = coefs.size
        fn = HFunction(self.k, self.x[:n], coefs)
        excess = excess_risk_01(fn, self.d, self.cfg.resolution,
                                values=self.K_scan[:, :n] @ coefs)
        l2 = float(self.w @ (self.K_quad[:, :n] @ coefs - self.gl_quad) ** 2)
        pred = self.G[:n, :n] @ coefs
        yn = self.y[:n]
        err = float(np.mean(sign(pred) != yn))
        loss = float(np.mean((pred - yn) ** 2))
        hd2 = coefs @ pred - 2.0 * coefs @ self.gl_at_x[:n] + self.gl_norm2
        return np.array([excess, l2, err, loss, math.sqrt(max(hd2, 0.0))])

    def krr_coefs(self, n: int) -> np.ndarray:
        A = self.G[:n, :n].copy()
        A[np.diag_indices_from(A)] += n * self.cfg.lam
        return scipy.linalg.solve(A, self.y[:n], assume_a="pos")


def replicate(cfg: ExperimentConfig, r: int, grid: QuadratureGrid,
              g_lambda: HFunction) -> np.ndarray:
    """Metrics at every checkpoint for replication ``r`` (seed base_seed + r)."""
    d = cfg.distribution
    rng = make_rng(cfg.base_seed + r)
    samples = d.sample(rng, cfg.n_max)
    ev = ReplicationEvaluator(cfg, grid, g_lambda, samples.x, samples.y)
    cps = cfg.checkpoint_list()
    out = np.empty((len(cps), 5))
    if cfg.estimator == "krr":
        for j, n in enumerate(cps):
            out[j] = ev.metrics(ev.krr_coefs(n))
        return out
    state = new_state(cfg.lam, cfg.step_schedule, kernel=cfg.kernel,
                      averaging=cfg.estimator != "plain")
    want = dict(zip(cps, range(len(cps))))
    for i in range(cfg.n_max):
        state.step(samples.x[i], samples.y[i], ev.G[i])
        j = want.get(i + 1)
        if j is None:
            continue
        if cfg.estimator == "plain":
            coefs = state.coefs
        elif cfg.estimator == "averaged":
            coefs = state.averaged_coefs()[0]
        else:
            coefs = state.tail_coefs()[0]
        out[j] = ev.metrics(coefs)
    return out


def map_replications(fn: Callable, cfg: ExperimentConfig, extra: tuple, jobs: int) -> list:
    """Run ``fn(cfg, r, *extra)`` for every replication; results in replication order."""
    tasks = [(cfg, r) + extra for r in range(cfg.replications)]
    if jobs <= 1:
        results = [(r, fn(*t)) for r, t in enumerate(tasks)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_Call(fn), tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    results.sort(key=lambda item: item[0])
    return [res for _, res in results]


class _Call:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, args):
        return args[1], self.fn(*args)


# aggregation -----------------------------------------------------------------

@dataclass(frozen=True)
class AggregateRecord:
    n: int
    mean_excess_error: float
    mean_l2_loss: float
    mean_train_error: float
    mean_train_loss: float
    mean_h_dist: float
    replications: int

    @property
    def log10_err(self) -> float | None:
        e = self.mean_excess_error
        return math.log10(e) if e > 0 else None

    @property
    def loglog_err(self) -> float | None:
        e = self.mean_excess_error
        return -math.log(-math.log(e)) if 0 < e < 1 else None


def aggregate(cps: Sequence[int], per_rep: Sequence[np.ndarray]) -> list[AggregateRecord]:
    """Means over replications; ``per_rep`` must be in canonical replication order."""
    stack = np.stack(per_rep)                       # (reps, checkpoints, metrics)
    # replication axis last and contiguous so that numpy sums it pairwise
    sums = np.ascontiguousarray(np.moveaxis(stack, 0, -1)).sum(axis=-1)
    means = sums / stack.shape[0]
    return [AggregateRecord(int(n), *map(float, means[j]), stack.shape[0])
            for j, n in enumerate(cps)]


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[AggregateRecord]:
    cfg.validate()
    grid, g_lambda = population(cfg)
    per_rep = map_replications(replicate, cfg, (grid, g_lambda), jobs or cfg.jobs)
    return aggregate(cfg.checkpoint_list(), per_rep)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def records_to_csv(records: Sequence[AggregateRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(r.n), _fmt(r.mean_excess_error), _fmt(r.mean_l2_loss),
                    _fmt(r.mean_train_error), _fmt(r.mean_train_loss), _fmt(r.mean_h_dist),
                    _fmt(r.log10_err), _fmt(r.loglog_err)])
    return buf.getvalue()


def rows_to_csv(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) if not isinstance(v, (bool, np.bool_)) else int(v) for v in row])
    return buf.getvalue()


# kernel ridge replications -------------------------------------------------------

def krr_replicate(cfg: ExperimentConfig, r: int, grid: QuadratureGrid,
                  g_lambda: HFunction) -> list[tuple]:
    d, k = cfg.distribution, cfg.kernel
    seed = cfg.base_seed + r
    samples = d.sample(make_rng(seed), cfg.n_max)
    rows = []
    for n in cfg.checkpoint_list():
        sub = samples[:n]
        fit = fit_krr(sub, k, cfg.lam)
        u = u_n(sub, d, k, grid)
        v = v_hs(sub, k, d, grid)
        lhs, rhs = lemma2_gap(fit, g_lambda, u, v, cfg.lam, k.R)
        exact = excess_risk_01(fit.model, d, cfg.resolution) == 0.0
        rows.append((n, seed, lhs, rhs, u, v, int(exact)))
    return rows


def run_krr_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[tuple]:
    cfg.validate()
    grid, g_lambda = population(cfg)
    per_rep = map_replications(krr_replicate, cfg, (grid, g_lambda), jobs or cfg.jobs)
    return [row for rows in per_rep for row in rows]


# slope fits --------------------------------------------------------------------

TRANSFORMS: dict[str, Callable[[AggregateRecord], float | None]] = {
    "n": lambda r: float(r.n),
    "log_n": lambda r: math.log(r.n),
    "log10_err": lambda r: r.log10_err,
    "loglog_err": lambda r: r.loglog_err,
    "log_err": lambda r: math.log(r.mean_excess_error) if r.mean_excess_error > 0 else None,
    "log_l2": lambda r: math.log(r.mean_l2_loss) if r.mean_l2_loss > 0 else None,
}


def _transform(t):
    return TRANSFORMS[t] if isinstance(t, str) else t


def fit_slope(records: Sequence[AggregateRecord], x_transform="n", y_transform="log10_err",
              n_range: tuple[float, float] | None = None) -> tuple[float, float]:
    """OLS slope and R^2 of the transformed points with n in ``n_range`` (inclusive).

    Points whose transform is undefined are skipped.
    """
    fx, fy = _transform(x_transform), _transform(y_transform)
    xs, ys = [], []
    for r in records:
        if n_range is not None and not n_range[0] <= r.n <= n_range[1]:
            continue
        x, y = fx(r), fy(r)
        if x is None or y is None:
            continue
        xs.append(x)
        ys.append(y)
    if len(xs) < 3:
        raise ValueError("need at least 3 points with defined transforms")
    xs, ys = np.asarray(xs), np.asarray(ys)
    if np.ptp(ys) == 0.0:
        return 0.0, 1.0
    fit = linregress(xs, ys)
    return float(fit.slope), float(fit.rvalue**2)


def defined_suffix(records: Sequence[AggregateRecord], y_transform="log10_err") -> list[AggregateRecord]:
    """Longest run of trailing records on which ``y_transform`` is defined."""
    fy = _transform(y_transform)
    out = []
    for r in reversed(records):
        if fy(r) is None:
            break
        out.append(r)
    return out[::-1]
