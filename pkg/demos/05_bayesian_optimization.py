"""Bayesian optimization with EI/PI/UCB and a probability-of-feasibility
constraint.

Maximizes a 1-D objective under a 15-evaluation budget, then solves a
constrained problem two ways: multiplying the acquisition by PoF, and
maximizing the acquisition over the candidates whose PoF clears a
threshold.

Run: python3 demos/05_bayesian_optimization.py
"""

import numpy as np

from gpuq.bayesopt import AcquisitionSpec, bo_run
from gpuq.design import Domain

unit = Domain(np.array([[0.0, 1.0]]))


def objective(X):
    x = np.atleast_2d(X)[:, 0]
    return -((x - 0.3) ** 2)


print("unconstrained max of -(x - 0.3)^2, budget 15:")
for kind, xi in (("EI", 0.0), ("PI", 0.01), ("UCB", 2.0)):
    state = bo_run(objective, [], unit, 4, 15, AcquisitionSpec(kind, xi=xi), seed=0)
    print(f"  {kind:3s}: x_best = {state.x_best[0]:.4f}  (true 0.3), evals = {state.n_evals}")

print("\nconstrained: max x subject to x <= 0.7")
for mode, eps in (("ProductPoF", 0.5), ("PoFThreshold", 0.95)):
    state = bo_run(
        lambda X: np.atleast_2d(X)[:, 0],
        [lambda X: np.atleast_2d(X)[:, 0] - 0.7],
        unit, 4, 15,
        AcquisitionSpec("EI", constraint_mode=mode, epsilon=eps),
        seed=0,
    )
    print(f"  {mode:12s}: x_best = {state.x_best[0]:.4f}  (true 0.7)")

print("\nincumbent trace (EI run):")
state = bo_run(objective, [], unit, 4, 15, AcquisitionSpec("EI"), seed=0)
trace = [f"{h['y_best_so_far']:+.4f}" for h in state.history]
print("  " + " -> ".join(trace[:8]))
print("  " + " -> ".join(trace[8:]))
print("the incumbent is monotone: each evaluation can only improve it.")
