"""Active learning for global surrogate accuracy: ALM vs ALC vs EIGF.

Starting from four observations of a wiggly function, each criterion picks
the next evaluation differently: ALM chases the largest posterior variance,
ALC the largest reduction of domain-integrated variance, EIGF a blend of
predicted-change and variance. The script runs ten rounds of each and
reports the resulting global RMS error.

Run: python3 demos/02_active_learning.py
"""

import numpy as np

from gpuq import Dataset, KernelSpec, PriorMean, fit
from gpuq.design import CandidatePool, Domain, alc_select, alm_select, eigf_select, lhs_sample


def f(x):
    return np.sin(4.0 * x) + 0.5 * np.cos(9.0 * x)


domain = Domain(np.array([[0.0, 1.0]]))
grid = np.linspace(0, 1, 400).reshape(-1, 1)
truth = f(grid[:, 0])
spec = KernelSpec("Matern52", 1.0, (0.15,))

for name, selector in [
    ("ALM", lambda gp, pool: alm_select(gp, pool)),
    ("ALC", lambda gp, pool: alc_select(gp, pool, domain.sample_nodes(300, 99))),
    ("EIGF", lambda gp, pool: eigf_select(gp, pool, gp.data)),
]:
    X = lhs_sample(domain, 4, 0).points
    y = f(X[:, 0])
    picks = []
    for step in range(10):
        gp = fit(spec, PriorMean("Zero"), Dataset(X, y))
        pool = lhs_sample(domain, 128, 1000 + step)
        idx = selector(gp, pool)
        x_new = pool.points[idx]
        picks.append(float(x_new[0]))
        X = np.vstack([X, x_new])
        y = np.append(y, f(x_new[0]))
    gp = fit(spec, PriorMean("Zero"), Dataset(X, y))
    mean, var = gp.predict_batch(grid)
    rms = np.sqrt(np.mean((mean - truth) ** 2))
    print(f"{name:5s} rms error {rms:.4f} | new points: "
          + " ".join(f"{p:.2f}" for p in sorted(picks)))

print("\nALC weighs the whole domain each round, so its picks spread more"
      "\nevenly than ALM's variance-chasing; EIGF mixes in response change.")
