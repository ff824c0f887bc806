# Plain SGD with gamma_n = 0.25 / sqrt(n): the error behaves like exp(-c sqrt(n)),
# so -log(-log E) against log n is a line of slope about -1/2.
import math

from margin_sgd import ExperimentConfig, fit_slope, run_experiment

cfg = ExperimentConfig(estimator="plain", schedule="power", gamma=0.25, alpha=0.5,
                       replications=1000, n_max=200)
recs = run_experiment(cfg)
stable = [r for r in recs if 0 < r.mean_excess_error < 1 / math.e]
for r in stable:
    print(f"  n={r.n:4d}  E={r.mean_excess_error:.3e}  -log(-log E)={r.loglog_err:+.3f}")
slope, r2 = fit_slope(stable, "log_n", "loglog_err")
print(f"slope {slope:.3f} (R^2 {r2:.3f})")
