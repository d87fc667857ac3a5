"""Gaussian-process regression basics: kernels, conditioning, model selection.

Fits a GP to noisy observations of a smooth function, compares kernel
families by cross-validation, and shows the interpolation/uncertainty
behavior that drives everything else in the toolkit.

Run: python3 demos/01_gp_regression.py
"""

import numpy as np

from gpuq import Dataset, KernelSpec, PriorMean, fit, fit_hyperparameters, select_kernel_cv

rng = np.random.default_rng(0)

# noisy observations of a smooth function
X = np.sort(rng.uniform(-3, 3, 25)).reshape(-1, 1)
y = np.sin(X[:, 0]) + 0.3 * X[:, 0] + 0.05 * rng.standard_normal(25)
data = Dataset(X, y)

# hyperparameters by maximum likelihood (log-space gradient descent)
template = KernelSpec("SE", 1.0, (1.0,), noise_variance=0.01)
spec, gp = fit_hyperparameters(template, PriorMean("Constant"), data, restarts=3, seed=0)
print("fitted kernel:", spec.family)
print(f"  signal variance {spec.signal_variance:.3f}")
print(f"  length-scale    {spec.length_scales[0]:.3f}")
print(f"  noise variance  {spec.noise_variance:.2e}")

grid = np.linspace(-3.5, 3.5, 9).reshape(-1, 1)
mean, var = gp.predict_batch(grid)
print("\n  x      mean    +-2sd    truth")
for g, m, v in zip(grid[:, 0], mean, np.sqrt(var)):
    print(f"{g:+5.2f}  {m:+7.3f}  {2 * v:6.3f}  {np.sin(g) + 0.3 * g:+7.3f}")

# exact interpolation when the noise is removed
gp0 = fit(KernelSpec("SE", spec.signal_variance, spec.length_scales), PriorMean("Zero"), data)
m0, v0 = gp0.predict_batch(X)
print(f"\nnoise-free refit: max training error {np.max(np.abs(m0 - y)):.2e}, "
      f"max training variance {np.max(v0):.2e}")

# kernel family selection by k-fold cross-validation
candidates = [
    KernelSpec("Matern12", 1.0, (1.0,), noise_variance=0.01),
    KernelSpec("Matern52", 1.0, (1.0,), noise_variance=0.01),
    KernelSpec("SE", 1.0, (1.0,), noise_variance=0.01),
    KernelSpec("Linear", 1.0, (1.0,), noise_variance=0.01),
]
best = select_kernel_cv(candidates, data, k_folds=5, seed=0)
print(f"\ncross-validation picks: {best.family} "
      f"(held-out log predictive density over 5 folds)")
