"""Failure-probability estimation with active-kriging Monte Carlo (AK-MCS).

A linear limit state with known failure probability Phi(-2.33) ~ 9.9e-3:
plain Monte Carlo needs ~1e5 model runs for a few-percent answer, while
AK-MCS classifies the same population with a couple dozen model runs by
querying only near the limit state. The epistemic moments of the estimate
come from the posterior covariance (bivariate normal orthant masses).

Run: python3 demos/04_reliability_akmcs.py
"""

import numpy as np

from gpuq.distributions import IndependentProduct, Normal
from gpuq.risk import LimitState, akmcs_run, eff, mc_failure_prob, u_function
from gpuq.stats import norm_cdf

beta = 2.33
p_true = norm_cdf(-beta)
pi = IndependentProduct([Normal(), Normal()])


def g(X):
    return X[:, 0] + X[:, 1] + beta * np.sqrt(2.0)


print(f"true failure probability: {p_true:.4e}\n")

ls = LimitState(g)
plain = mc_failure_prob(ls, pi, 100_000, 0)
print(f"plain MC   : p = {plain.p_hat:.4e}   model evals = {plain.n_model_evals}")

for utility in ("U", "EFF"):
    ls = LimitState(g)
    est, audit = akmcs_run(ls, pi, 100_000, 12, 60, utility=utility, seed=0)
    rel = abs(est.p_hat - p_true) / p_true
    print(f"AK-MCS {utility:3s}: p = {est.p_hat:.4e}   model evals = {est.n_model_evals}   "
          f"rel err = {rel:.1%}   converged = {est.converged}")
    print(f"           epistemic E[P] = {est.epistemic_mean:.3e}, "
          f"VAR[P] = {est.epistemic_variance:.2e}")

# what the utilities look like pointwise
print("\nutility anatomy at sigma = 0.5:")
print("  mean u   U = |u|/sigma   EFF(eps = 2 sigma)")
for u in (0.0, 0.25, 1.0, 2.0):
    print(f"  {u:5.2f}   {float(u_function(u, 0.5)):12.2f}   {float(eff(u, 0.5, 1.0)):.4f}")
print("\nsmall U / large EFF near the limit state drives queries there.")
