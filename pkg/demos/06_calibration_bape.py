"""Bayesian parameter estimation with an actively built surrogate posterior.

A conjugate 1-D toy (the posterior is known in closed form) makes the
bookkeeping visible: BAPE spends 25 log-joint evaluations placing design
points where the exponentiated GP is most uncertain, then random-walk
Metropolis samples the surrogate. The adaptive-GP variant factors a running
Gaussian approximation out of the log joint so the GP models a flatter
residual.

Run: python3 demos/06_calibration_bape.py
"""

import numpy as np

from gpuq.calibrate import LogJointModel, agp_iterate, bape_run, ee_utility, log_ev_utility, mh_sample
from gpuq.design import Domain
from gpuq.stats import norm_logpdf

# likelihood N(x; 1, 0.5^2) x prior N(x; 0, 2^2)
POST_MEAN = 16.0 / 17.0
POST_STD = float(np.sqrt(4.0 / 17.0))


def log_joint_fn(x):
    x = float(np.atleast_1d(x)[0])
    return (float(norm_logpdf((x - 1.0) / 0.5)) - np.log(0.5)
            + float(norm_logpdf(x / 2.0)) - np.log(2.0))


box = Domain(np.array([[-6.0, 6.0]]))
print(f"closed-form posterior: mean {POST_MEAN:.4f}, std {POST_STD:.4f}\n")

for utility in ("EV", "EE"):
    lj = LogJointModel(lambda x: 0.0, log_joint_fn)
    gp = bape_run(lj, box, m0=8, M=25, utility=utility, seed=0)
    chain = mh_sample(lambda x: gp.predict(np.atleast_1d(x))[0],
                      np.zeros(1), np.array([0.8]), 20_000, 5_000, 1)
    print(f"BAPE/{utility}: mean {np.mean(chain.samples):+.4f}, std {np.std(chain.samples):.4f}, "
          f"log-joint evals {lj.n_evals}, MH acceptance {chain.acceptance_rate:.2f}")

lj = LogJointModel(lambda x: 0.0, log_joint_fn)
rounds = agp_iterate(lj, box, n_rounds=5, samples_per_round=1500, utility="EV",
                     seed=0, m0=10, queries_per_round=3)
q, gp = rounds[-1].q, rounds[-1].gp
target = lambda x: gp.predict(np.atleast_1d(x))[0] + float(q.logpdf(np.atleast_1d(x).reshape(1, -1))[0])
chain = mh_sample(target, np.zeros(1), np.array([0.8]), 20_000, 5_000, 1)
print(f"AGP      : mean {np.mean(chain.samples):+.4f}, std {np.std(chain.samples):.4f}, "
      f"log-joint evals {lj.n_evals}")
print(f"           final factored Gaussian q: mean {q.mean[0]:+.4f}, "
      f"std {np.sqrt(q.cov[0, 0]):.4f}")

# why exponentiated utilities: variance of the GP itself is the wrong target
print("\nutility comparison at log-density scale (u = GP mean of log joint):")
print("  u      log EV      EE")
for u in (-20.0, -5.0, -1.0):
    print(f"{u:5.1f}  {float(log_ev_utility(u, 0.5)):9.2f}  {float(ee_utility(u, 0.5)):7.2f}")
print("EV weighs exp(2u): it ignores regions of negligible posterior mass.")
