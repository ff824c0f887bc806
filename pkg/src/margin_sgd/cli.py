"""Command-line entry point: ``margin-sgd <subcommand> [options]``.

Exit codes: 0 success, 1 a check failed (selftest, concentration),
2 invalid configuration, 74 output could not be written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bounds import mc_concentration_check, noise_constants, thm_error_bounds
from .dist import make_rng
from .experiment import (KRR_COLUMNS, ExperimentConfig, load_config,
                         population, records_to_csv, rows_to_csv, run_experiment,
                         run_krr_experiment)
from .popridge import DEFAULT_PROBE
from .selftest import run_selftest
from .sgd import ConfigurationError

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 74

# flag name -> config key
_OVERRIDES = {
    "epsilon": float, "p": float, "sigma": float, "lambda": float, "gamma": float,
    "alpha": float, "schedule": str, "n": int, "reps": int, "estimator": str,
    "checkpoints": str, "checkpoint_every": int, "panels": int, "order": int,
    "resolution": int,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value or JSON config file")
    common.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
    common.add_argument("--jobs", type=int, default=None,
                        help="parallel replications (default: $MARGIN_SGD_JOBS or 1)")
    common.add_argument("--seed", type=int, default=None, help="base seed, u64")
    for name, typ in _OVERRIDES.items():
        common.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)

    parser = argparse.ArgumentParser(prog="margin-sgd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("simulate", parents=[common], help="replicated SGD / KRR error and loss curves")
    sub.add_parser("krr", parents=[common], help="per-replication kernel ridge gap check")
    b = sub.add_parser("bounds", parents=[common], help="theoretical bound curves over n")
    b.add_argument("--params-out", metavar="PATH",
                   help="BoundParams JSON (default: <out>.json, or stderr with stdout CSV)")
    c = sub.add_parser("concentration", parents=[common], help="Monte-Carlo tail bound check")
    c.add_argument("--a", type=float, default=1.0, help="increment bound")
    c.add_argument("--points", type=int, default=20, help="size of the t grid")
    sub.add_parser("glambda", parents=[common], help="dump x, g*(x), g_lambda(x)")
    sub.add_parser("selftest", parents=[common], help="quick invariant checks")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates = {"subcommand": args.subcommand}
    for name in _OVERRIDES:
        val = getattr(args, name, None)
        if val is not None:
            updates[name] = val
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    jobs = args.jobs if args.jobs is not None else os.environ.get("MARGIN_SGD_JOBS")
    if jobs is not None:
        updates["jobs"] = jobs
    if args.subcommand == "concentration" and not args.config:
        updates.setdefault("reps", 100_000)
        updates.setdefault("n", 100)
    cfg = cfg.updated(updates)
    if cfg.schedule == "constant" and args.alpha:
        cfg = cfg.updated({"schedule": "power"})
    return cfg.validate()


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def _cmd_simulate(cfg, args) -> int:
    _emit(records_to_csv(run_experiment(cfg)), cfg.output)
    return 0


def _cmd_krr(cfg, args) -> int:
    _emit(rows_to_csv(KRR_COLUMNS, run_krr_experiment(cfg)), cfg.output)
    return 0


def _cmd_bounds(cfg, args) -> int:
    d, k = cfg.distribution, cfg.kernel
    grid, g_lambda = population(cfg)
    params = noise_constants(d, k, g_lambda, grid, DEFAULT_PROBE, cfg.lam, cfg.gamma,
                             cfg.step_schedule.alpha)
    rows = []
    for n in cfg.checkpoint_list():
        b = thm_error_bounds(params, n)
        rows.append((n, b["thm3"].value, b["thm3"].applicable, b["thm4"].value,
                     b["thm4"].applicable, b["thm5_krr"].value, b["full_avg"].value,
                     b["full_avg"].applicable))
    cols = ("n", "thm3", "thm3_applicable", "thm4", "thm4_applicable", "thm5_krr",
            "full_avg", "full_avg_applicable")
    _emit(rows_to_csv(cols, rows), cfg.output)
    blob = json.dumps(params.to_dict(), indent=2, sort_keys=True) + "\n"
    target = args.params_out or (str(Path(cfg.output).with_suffix(".json")) if cfg.output else None)
    if target is None:
        sys.stderr.write(blob)
    else:
        Path(target).write_text(blob)
    return 0


def _cmd_concentration(cfg, args) -> int:
    n, a = cfg.n_max, args.a
    b_n = np.sqrt(n / 3.0) * a
    t_grid = np.linspace(0.0, 4.0 * b_n, args.points)
    rep = mc_concentration_check(a, n, t_grid, cfg.replications, make_rng(cfg.base_seed))
    rows = zip(rep.t, rep.empirical, rep.wilson_low, rep.bound, rep.ok)
    _emit(rows_to_csv(("t", "empirical", "wilson_low", "bound", "ok"), rows), cfg.output)
    return 0 if rep.passed else EXIT_CHECK_FAILED


def _cmd_glambda(cfg, args) -> int:
    d = cfg.distribution
    _, g_lambda = population(cfg)
    x = np.linspace(0.0, 1.0, DEFAULT_PROBE)
    rows = zip(x, d.bayes_regression(x), g_lambda(x))
    _emit(rows_to_csv(("x", "g_star", "g_lambda"), rows), cfg.output)
    return 0


def _cmd_selftest(cfg, args) -> int:
    return 0 if run_selftest() else EXIT_CHECK_FAILED


COMMANDS = {
    "simulate": _cmd_simulate,
    "krr": _cmd_krr,
    "bounds": _cmd_bounds,
    "concentration": _cmd_concentration,
    "glambda": _cmd_glambda,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigurationError as exc:
        print(f"margin-sgd: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"margin-sgd: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[cfg.subcommand](cfg, args)
    except OSError as exc:
        print(f"margin-sgd: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
