"""gpuq: Gaussian-process toolkit for uncertainty quantification.

Modules
-------
kernels, gp      : covariance kernels, exact conditioning, hyperparameter fits
design           : Latin hypercube designs and active-learning selection
quadrature       : Bayesian quadrature (kernel mean embeddings)
risk             : failure probabilities, AK-MCS, epistemic moments
bayesopt         : Bayesian optimization with PoF constraint handling
calibrate        : MCMC, BAPE and adaptive-GP posterior estimation
sensitivity      : Sobol indices and MUSIC-guided refinement
pendulum, tasks  : the pendulum testbed and its five UQ task drivers
"""

from .distributions import IndependentProduct, Normal, PointMass, Uniform
from .errors import (
    ConditioningError,
    DegenerateOutputError,
    FittingError,
    GpuqError,
    SelectionError,
)
from .gp import (
    Dataset,
    GpPosterior,
    PriorMean,
    fit,
    fit_hyperparameters,
    log_marginal_likelihood,
    loo_loss,
    select_kernel_cv,
)
from .kernels import KernelSpec, gram_matrix, kernel_eval

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "Dataset",
    "DegenerateOutputError",
    "FittingError",
    "GpPosterior",
    "GpuqError",
    "IndependentProduct",
    "KernelSpec",
    "Normal",
    "PointMass",
    "PriorMean",
    "SelectionError",
    "Uniform",
    "fit",
    "fit_hyperparameters",
    "gram_matrix",
    "kernel_eval",
    "log_marginal_likelihood",
    "loo_loss",
    "select_kernel_cv",
    "__version__",
]
