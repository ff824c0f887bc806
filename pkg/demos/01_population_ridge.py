# The regularized population target g_lambda on the margin distribution.
# It keeps the Bayes sign everywhere, but its margin at the gap edges is far
# below the clean label value.
import numpy as np

from margin_sgd import ExponentialKernel, MarginDistribution, margin_delta, quad_grid, solve_glambda
from margin_sgd.kernel import h_dist, h_norm
from margin_sgd.popridge import optimality_residual, sup_deviation

d = MarginDistribution(epsilon=0.05, flip_p=0.0)
k = ExponentialKernel(1.0)
grid = quad_grid(d, panels=20, order=8)          # 2 x 20 x 8 = 320 nodes
g = solve_glambda(d, k, 0.01, grid)

print("||g_lambda||_H        ", h_norm(g))
print("sup |g* - g_lambda|   ", sup_deviation(g, d))
m, ok = margin_delta(g, d)
print("min sign(g*) g_lambda ", m, "(signs agree)" if ok else "(sign error!)")

# where the margin is smallest
x = np.linspace(0, 1, 21)
for xi, gi in zip(x, g(x)):
    print(f"  x={xi:4.2f}  g*={d.bayes_regression(xi):+.0f}  g_lambda={gi:+.4f}")

# residual of the optimality equation, on the solve grid and on a finer one
tp = np.linspace(0, 1, 2001)
print("residual (solve grid) ", optimality_residual(g, d, k, 0.01, grid, tp))
print("residual (16x finer)  ", optimality_residual(g, d, k, 0.01, quad_grid(d, 320, 8), tp))

# the kernel kink limits convergence under refinement
for panels in (20, 40, 80, 160):
    finer = solve_glambda(d, k, 0.01, quad_grid(d, 2 * panels, 8))
    coarse = solve_glambda(d, k, 0.01, quad_grid(d, panels, 8))
    print(f"  panels {panels:3d} -> {2 * panels:3d}: H-change {h_dist(coarse, finer):.3e}")
