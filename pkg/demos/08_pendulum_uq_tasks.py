"""End-to-end tour: all five UQ tasks on the pendulum testbed.

The forward model maps (theta0, L, g) to the angle theta(T) of a freely
swinging pendulum (RK4, T = 2 s). Inputs carry narrow independent
uncertainties; every task below spends only a few dozen model evaluations.

Run: python3 demos/08_pendulum_uq_tasks.py   (takes a minute or two)
"""

import numpy as np

from gpuq.tasks import UqTaskSpec, run_ou, run_pe, run_re, run_sa, run_up

spec = UqTaskSpec()
print("input uncertainties: theta0 ~ N(0.2, 0.01^2), L ~ N(1, 0.01^2), "
      "g ~ N(9.81, 0.05^2); horizon T = 2 s\n")

# 1: uncertainty propagation
up = run_up(spec, method="BQ", budget=30, seed=0, n_mc=50_000)
print(f"UP: E[theta(T)] = {up['mean'].estimate:.5f} "
      f"(epistemic sd {np.sqrt(up['mean'].epistemic_variance):.1e}), "
      f"Var[theta(T)] = {up['variance'].estimate:.2e}, "
      f"model evals = {up['n_model_evals']}")

# 2: risk estimation
re_est, re_audit, re_evals = run_re(spec, budget=60, seed=0, population=100_000)
print(f"RE: P[theta(T) >= {spec.theta_max}] = {re_est.p_hat:.3e} "
      f"(E[P] = {re_est.epistemic_mean:.3e}), model evals = {re_evals}, "
      f"converged = {re_est.converged}")

# 3: parameter estimation from 20 noisy angle observations
pe = run_pe(spec, budget=40, seed=0, chain_length=10_000, burn_in=2_500)
names = ("theta0", "L", "g")
summary = ", ".join(
    f"{n} = {m:.4f} +- {s:.4f}" for n, m, s in
    zip(names, pe["posterior_mean"], pe["posterior_std"])
)
print(f"PE: {summary}")
print(f"    truth {tuple(np.round(pe['truth'], 4))}, model evals = {pe['n_model_evals']}")

# 4: sensitivity analysis
sa_res, sa_audit, sa_evals = run_sa(spec, budget=30, n=100_000, seed=0)
print(f"SA: S = ({sa_res.first_order[0]:.3f}, {sa_res.first_order[1]:.3f}, "
      f"{sa_res.first_order[2]:.3f}) for (theta0, L, g), model evals = {sa_evals}")
print("    T = 2 s is nearly a full period, so the L and g frequency shifts"
      " cancel and theta0 dominates")

# 5: optimization under uncertainty
ou = run_ou(spec, budget=25, seed=0, n_saa=200)
print(f"OU: best release mean mu_theta = {ou['mu_theta']:.4f} targeting "
      f"theta(T) = {spec.target_theta}")
print(f"    E[(theta(T) - target)^2] = {ou['objective']:.2e}, "
      f"E[omega(T)] = {ou['constraint_mean_omega']:+.4f} (constraint >= 0, "
      f"PoF = {ou['pof_at_optimum']:.2f})")
print(f"    decision evaluations = {ou['n_outer_evals']}, "
      f"pendulum solves = {ou['n_model_evals']}")
