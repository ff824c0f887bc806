# Tail-averaged SGD, constant step: the 0-1 excess error drops geometrically
# while the squared loss to g_lambda only decays polynomially.
import time

from margin_sgd import ExperimentConfig, fit_slope, run_experiment
from margin_sgd.experiment import defined_suffix

t0 = time.time()
cfg = ExperimentConfig(estimator="tail", gamma=0.25, lam=0.01, replications=1000, n_max=200)
err = run_experiment(cfg)
print(f"error curve ({cfg.replications} reps) in {time.time() - t0:.0f}s")
for r in err[::2]:
    print(f"  n={r.n:4d}  excess={r.mean_excess_error:.3e}  train err={r.mean_train_error:.3e}")

suffix = defined_suffix(err)
slope, r2 = fit_slope(suffix, "n", "log10_err")
print(f"log10 error vs n: slope {slope:.4f}, R^2 {r2:.3f}")

# loss needs ten times the samples and still sits around 1e-4
t0 = time.time()
loss = run_experiment(ExperimentConfig(estimator="tail", replications=100, n_max=2000,
                                       checkpoints=list(range(100, 2001, 100))))
print(f"loss curve in {time.time() - t0:.0f}s")
for r in loss[::3]:
    print(f"  n={r.n:5d}  L2 loss={r.mean_l2_loss:.3e}  ||g - g_lambda||_H={r.mean_h_dist:.3f}")
for lo, hi in [(200, 2000), (200, 600), (1000, 2000)]:
    s, _ = fit_slope(loss, "log_n", "log_l2", (lo, hi))
    print(f"  log-log loss slope on [{lo}, {hi}]: {s:.2f}")
