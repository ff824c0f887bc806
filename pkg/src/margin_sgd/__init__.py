"""Kernel least-squares SGD on a hard-margin classification problem.

Averaged and tail-averaged estimators reach the Bayes risk at an exponential
rate while their squared loss decays polynomially; the modules here compute
the estimators, their population targets and the matching theoretical bounds.
"""

from .bounds import (BoundParams, ErrorBound, bernstein_tail, mc_concentration_check,
                     noise_constants, pinelis_tail, schedule_constants, thm_error_bounds,
                     weak_margin_rate)
from .dist import MarginDistribution, SampleSet, make_rng
from .experiment import (AggregateRecord, ExperimentConfig, fit_slope, load_config,
                         run_experiment, run_krr_experiment)
from .kernel import ExponentialKernel, HFunction, gram, h_dist, h_inner, h_norm
from .krr import KrrFit, fit_krr, lemma2_gap, u_n, v_hs
from .metrics import EvalReport, evaluate, excess_risk_01, l2_loss, risk_01, train_metrics
from .popridge import (QuadratureGrid, margin_delta, optimality_residual, quad_grid,
                       solve_glambda)
from .sgd import (ConfigurationError, SgdState, StepSchedule, gamma_zero, new_state, run,
                  tail_from_averages)

__version__ = "0.1.0"
