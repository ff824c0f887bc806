# Constants entering the high-probability bounds, and a Monte-Carlo look at
# the Bernstein tail for a bounded scalar martingale.
import math

import numpy as np

from margin_sgd import ExponentialKernel, MarginDistribution, make_rng, quad_grid, solve_glambda
from margin_sgd.bounds import (burn_in_tail, mc_concentration_check, noise_constants,
                               schedule_constants, thm_error_bounds)

d, k = MarginDistribution(0.05), ExponentialKernel()
grid = quad_grid(d)
g = solve_glambda(d, k, 0.01, grid)
p = noise_constants(d, k, g, grid, lam=0.01, gamma=0.25)
for key, val in p.to_dict().items():
    print(f"  {key:14s} {val}")

print("tail-averaged burn-in n >=", math.ceil(burn_in_tail(p)))
for n in (10**3, 10**5, 10**6, 10**7):
    b = thm_error_bounds(p, n)
    print(f"  n={n:>8d}  " + "  ".join(f"{kk}={v.value:.3g}{'' if v.applicable else '*'}"
                                        for kk, v in b.items()))
print("  (* = burn-in not reached; the bounds are far from the observed rates)")

sc = schedule_constants(0.25, 0.01, 0.5, 10_000)
print("alpha_n exact vs estimate at n=1e4:", sc.alpha_exact[-1], sc.alpha_est[-1])

b_n = math.sqrt(100 / 3)
rep = mc_concentration_check(1.0, 100, np.linspace(0, 4 * b_n, 9), 100_000, make_rng(0))
for t, e, lo, bd in zip(rep.t, rep.empirical, rep.wilson_low, rep.bound):
    print(f"  t={t:6.2f}  P(|S|>=t)={e:.5f}  wilson low={lo:.5f}  bound={bd:.5f}")
