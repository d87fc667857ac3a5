"""Variance-based sensitivity analysis: pick-freeze Monte Carlo and the
GP-accelerated version with MUSIC-guided refinement.

f(x) = x1 + 2 x2 with standard-normal inputs has analytic indices
S = (0.2, 0.8), so the estimators can be checked directly. The GP route
spends 30 model evaluations instead of the (d + 2) n = 400,000 the plain
estimator needs.

Run: python3 demos/07_sobol_sensitivity.py
"""

import numpy as np

from gpuq.distributions import IndependentProduct, Normal
from gpuq.sensitivity import active_sa_run, pick_freeze, sobol_gp, sobol_mc

pi = IndependentProduct([Normal(), Normal()])


def f(X):
    return X[:, 0] + 2.0 * X[:, 1]


print("analytic: S = (0.200, 0.800), T = S (additive model)\n")

mats = pick_freeze(pi, 100_000, 0)
res = sobol_mc(f, mats)
print(f"pick-freeze MC (n = 1e5, {res.n_evals} model evals):")
print(f"  S = ({res.first_order[0]:.3f}, {res.first_order[1]:.3f})"
      f"   T = ({res.total[0]:.3f}, {res.total[1]:.3f})")
print(f"  bootstrap half-widths: ({res.ci_half_width[0]:.3f}, {res.ci_half_width[1]:.3f})")

res_a, audit = active_sa_run(f, pi, m0=10, M=30, n=100_000, seed=0)
print(f"\nMUSIC-refined GP surrogate ({res_a.n_evals} model evals):")
print(f"  S = ({res_a.first_order[0]:.3f}, {res_a.first_order[1]:.3f})"
      f"   T = ({res_a.total[0]:.3f}, {res_a.total[1]:.3f})")
print("  actively added points (x1, x2):")
for a in audit[:5]:
    print(f"    ({a['x'][0]:+.2f}, {a['x'][1]:+.2f})  MUSIC = {a['score']:.3e}")
print(f"    ... {len(audit) - 5} more")

print("\nMUSIC pushes refinement along dimensions whose conditional means are"
      "\nstill uncertain, weighted by distance from the existing design.")
