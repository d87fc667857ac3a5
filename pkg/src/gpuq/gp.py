"""Exact Gaussian-process conditioning and hyperparameter estimation.

The posterior of a GP prior with mean ``u_pr`` and kernel ``k`` conditioned
on observations ``(X*, y*)`` (noise variance ``nu^2`` on the diagonal) is

    u(x)      = u_pr(x) + K(x, X*) (K(X*, X*) + nu^2 I)^-1 (y* - u_pr(X*))
    sigma2(x) = k(x, x) - K(x, X*) (K(X*, X*) + nu^2 I)^-1 K(X*, x)

Hyperparameters are estimated either by minimizing the negative log marginal
likelihood or the leave-one-out negative log predictive density, both with
analytic gradients in log-parameter space.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import kernels
from .errors import ConditioningError, FittingError, SelectionError
from .kernels import KernelSpec, free_parameter_names, get_log_params, with_log_params

_JITTER_START = 1e-10
_JITTER_MAX = 1e-4
# Reject |log theta| beyond this during optimization. Generous because log
# joint densities can give signal variances of 1e30 and beyond.
_LOG_PARAM_BOUND = 150.0


@dataclass(frozen=True)
class PriorMean:
    """Prior mean function: zero, constant or linear in the inputs.

    ``coefficients=None`` means "fit by ordinary least squares when the GP
    is fitted". For Constant the coefficient vector is ``[c]``; for Linear
    it is ``[a0, a1, ..., ad]`` representing ``a0 + a @ x``.
    """

    family: str = "Zero"
    coefficients: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.family not in ("Zero", "Constant", "Linear"):
            raise ValueError(f"unknown prior mean family {self.family!r}")
        if self.coefficients is not None:
            object.__setattr__(
                self, "coefficients", tuple(float(c) for c in np.atleast_1d(self.coefficients))
            )

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.family == "Zero":
            return np.zeros(X.shape[0])
        if self.coefficients is None:
            raise ValueError("prior mean coefficients not set; fit the GP first")
        c = np.asarray(self.coefficients)
        if self.family == "Constant":
            return np.full(X.shape[0], c[0])
        return c[0] + X @ c[1:]

    def resolved(self, X, y):
        """Return a copy with coefficients fixed by OLS on (X, y) if unset."""
        if self.family == "Zero" or self.coefficients is not None:
            return self
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if self.family == "Constant":
            return PriorMean("Constant", (float(np.mean(y)),))
        A = np.column_stack([np.ones(X.shape[0]), X])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return PriorMean("Linear", tuple(coef))


@dataclass(frozen=True)
class Dataset:
    """Design matrix (m, d) and responses (m,)."""

    inputs: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.responses, dtype=float).ravel()
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("inputs must be an (m, d) matrix with d >= 1")
        if X.shape[0] != y.shape[0]:
            raise ValueError("inputs and responses have different lengths")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "responses", y)

    @property
    def m(self):
        return self.inputs.shape[0]

    @property
    def d(self):
        return self.inputs.shape[1]

    def add(self, x, y):
        """New dataset with one extra observation appended."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.inputs, x]), np.append(self.responses, y))


def _chol_with_jitter(sigma):
    """Cholesky factor with an escalating diagonal jitter ladder.

    Returns ``(L, jitter)`` where ``jitter`` is the absolute value added to
    the diagonal (0.0 when the plain factorization succeeded).
    """
    try:
        return np.linalg.cholesky(sigma), 0.0
    except np.linalg.LinAlgError:
        pass
    mean_diag = float(np.mean(np.diag(sigma)))
    if not np.isfinite(mean_diag) or mean_diag <= 0:
        raise ConditioningError("covariance diagonal is not positive", 0.0)
    rel = _JITTER_START
    eye = np.eye(sigma.shape[0])
    while rel <= _JITTER_MAX * (1 + 1e-12):
        try:
            return np.linalg.cholesky(sigma + rel * mean_diag * eye), rel * mean_diag
        except np.linalg.LinAlgError:
            rel *= 10.0
    raise ConditioningError(
        f"covariance not positive definite up to jitter {_JITTER_MAX * mean_diag:.3e}",
        _JITTER_MAX * mean_diag,
    )


def _has_duplicate_rows(X):
    return np.unique(X, axis=0).shape[0] < X.shape[0]


class GpPosterior:
    """Immutable fitted GP: cached factorization plus prediction methods.

    Built by :func:`fit`; do not mutate. Attributes mirror the fitting
    inputs (`kernel`, `prior_mean`, `data`) plus the lower-triangular
    Cholesky `factor` of ``K(X*, X*) + nu^2 I`` (with `jitter` recording any
    stabilizing diagonal addition) and `alpha`, the precomputed solve
    against the centered responses.
    """

    def __init__(self, kernel, prior_mean, data, factor, alpha, jitter=0.0):
        self.kernel = kernel
        self.prior_mean = prior_mean
        self.data = data
        self.factor = factor
        self.alpha = alpha
        self.jitter = jitter

    @property
    def m(self):
        return self.data.m

    @property
    def d(self):
        return self.data.d

    def _cross(self, X):
        """K(X*, X) as an (m, n) matrix."""
        return kernels.gram_matrix(self.kernel, self.data.inputs, np.atleast_2d(X))

    def predict_batch(self, X):
        """Posterior mean and variance at each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got {X.shape[1]}")
        prior = self.prior_mean(X)
        kdiag = kernels.kernel_diag(self.kernel, X)
        if self.m == 0:
            return prior, kdiag
        Ks = self._cross(X)
        mean = prior + Ks.T @ self.alpha
        V = solve_triangular(self.factor, Ks, lower=True)
        var = kdiag - np.sum(V * V, axis=0)
        # Round-off in the variance downdate scales with the factor's
        # conditioning; only flag negatives beyond that as real bugs.
        ld = np.diag(self.factor)
        cond_proxy = (np.max(ld) / np.min(ld)) ** 2
        tol = np.maximum(1e-10 * np.maximum(1.0, kdiag), 64.0 * np.finfo(float).eps * cond_proxy * np.maximum(1.0, kdiag))
        if np.any(var < -tol):
            worst = float(np.min(var))
            raise ConditioningError(f"posterior variance {worst:.3e} below round-off tolerance")
        return mean, np.maximum(var, 0.0)

    def predict(self, x):
        """Posterior (mean, variance) at a single point."""
        mean, var = self.predict_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return float(mean[0]), float(var[0])

    def cov_matrix(self, X1, X2):
        """Posterior covariance matrix between the rows of X1 and X2."""
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        K12 = kernels.gram_matrix(self.kernel, X1, X2)
        if self.m == 0:
            return K12
        V1 = solve_triangular(self.factor, self._cross(X1), lower=True)
        V2 = solve_triangular(self.factor, self._cross(X2), lower=True)
        return K12 - V1.T @ V2

    def covariance(self, x, x2):
        """Posterior covariance of the two points x and x2."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        x2 = np.asarray(x2, dtype=float).reshape(1, -1)
        if x.shape[1] != self.d or x2.shape[1] != self.d:
            raise ValueError("dimension mismatch")
        return float(self.cov_matrix(x, x2)[0, 0])


def fit(kernel, prior_mean, data):
    """Condition a GP prior on a dataset.

    Raises
    ------
    ConditioningError
        If the (noisy) Gram matrix cannot be factorized even with the
        maximum jitter, or the dataset has duplicate rows with zero noise.
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    pm = prior_mean.resolved(data.inputs, data.responses)
    if data.m == 0:
        return GpPosterior(kernel, pm, data, None, np.zeros(0), 0.0)
    kernel.ell(data.d)  # validate dimension compatibility early
    if kernel.noise_variance == 0 and _has_duplicate_rows(data.inputs):
        raise ConditioningError("duplicate inputs with zero observation noise make the Gram matrix singular")
    sigma_y = kernels.gram_matrix(kernel, data.inputs, add_noise=True)
    L, jitter = _chol_with_jitter(sigma_y)
    resid = data.responses - pm(data.inputs)
    alpha = cho_solve((L, True), resid)
    return GpPosterior(kernel, pm, data, L, alpha, jitter)


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------

def log_marginal_likelihood(kernel, prior_mean, data, include_noise=None):
    """Negative log marginal likelihood (constant dropped) and its gradient.

    The value is ``0.5 * r' Sigma_y^-1 r + 0.5 * log|Sigma_y|`` with
    ``r = y* - u_pr(X*)``. The gradient is with respect to the kernel's free
    hyperparameters in log-parameterization, in the order given by
    :func:`gpuq.kernels.free_parameter_names`.
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    pm = prior_mean.resolved(data.inputs, data.responses)
    names = free_parameter_names(kernel, include_noise)
    sigma_y, grads = kernels.gram_with_gradients(kernel, data.inputs, names)
    L, jitter = _chol_with_jitter(sigma_y)
    resid = data.responses - pm(data.inputs)
    alpha = cho_solve((L, True), resid)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    value = 0.5 * float(resid @ alpha) + 0.5 * logdet

    eye = np.eye(data.m)
    sigma_inv = cho_solve((L, True), eye)
    grad = np.empty(len(names))
    for j, dS in enumerate(grads):
        # d/dtheta [0.5 r'S^-1 r + 0.5 log|S|] = 0.5 tr((S^-1 - aa') dS)
        grad[j] = 0.5 * (np.sum(sigma_inv * dS) - alpha @ dS @ alpha)
    return value, grad


def loo_loss(kernel, prior_mean, data, include_noise=None):
    """Leave-one-out negative log predictive density and its gradient.

    Per-fold means and variances come from the closed-form identities
    ``y_m - u_m = alpha_m / [S^-1]_mm`` and ``sigma2_m = 1 / [S^-1]_mm``
    rather than m refits; the gradient follows by differentiating those.
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    if data.m < 2:
        raise ValueError("leave-one-out requires at least 2 observations")
    pm = prior_mean.resolved(data.inputs, data.responses)
    names = free_parameter_names(kernel, include_noise)
    sigma_y, grads = kernels.gram_with_gradients(kernel, data.inputs, names)
    L, jitter = _chol_with_jitter(sigma_y)
    eye = np.eye(data.m)
    sigma_inv = cho_solve((L, True), eye)
    resid = data.responses - pm(data.inputs)
    alpha = sigma_inv @ resid
    dinv = np.diag(sigma_inv)
    value = 0.5 * float(np.sum(-np.log(dinv) + alpha**2 / dinv))

    grad = np.empty(len(names))
    for j, dS in enumerate(grads):
        Z = sigma_inv @ dS
        Za = Z @ alpha
        ZSdiag = np.sum(Z * sigma_inv, axis=1)  # diag(Z @ sigma_inv)
        grad[j] = -float(np.sum((alpha * Za - 0.5 * (1.0 + alpha**2 / dinv) * ZSdiag) / dinv))
    return value, grad


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------

def _descend(f_and_g, x0, max_iter=200, gtol=1e-6):
    """Gradient descent with backtracking line search; inf-safe."""
    x = np.asarray(x0, dtype=float).copy()
    fx, gx = f_and_g(x)
    if not np.isfinite(fx):
        raise FittingError("objective not finite at the initial point")
    for _ in range(max_iter):
        gnorm2 = float(gx @ gx)
        if np.sqrt(gnorm2) < gtol * (1.0 + abs(fx)):
            break
        step = 1.0
        accepted = False
        while step >= 1e-12:
            xt = x - step * gx
            if np.all(np.abs(xt) <= _LOG_PARAM_BOUND):
                try:
                    ft, gt = f_and_g(xt)
                except ConditioningError:
                    ft = np.inf
                if np.isfinite(ft) and ft <= fx - 1e-4 * step * gnorm2:
                    x, fx, gx = xt, ft, gt
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
    return x, fx


def fit_hyperparameters(
    kernel_template,
    prior_mean,
    data,
    objective="MLE",
    restarts=1,
    seed=0,
    include_noise=None,
    max_iter=200,
):
    """Estimate kernel hyperparameters by MLE or leave-one-out CV.

    Runs gradient descent (backtracking line search) in log-parameter space
    from ``restarts`` starting points: the template's own values first, then
    seeded random perturbations of them. Returns the best local optimum and
    its fitted posterior. Deterministic given the seed.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if objective not in ("MLE", "LOO"):
        raise ValueError("objective must be 'MLE' or 'LOO'")
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    obj = log_marginal_likelihood if objective == "MLE" else loo_loss
    names = free_parameter_names(kernel_template, include_noise)

    def f_and_g(logv):
        spec = with_log_params(kernel_template, names, logv)
        return obj(spec, prior_mean, data, include_noise=include_noise)

    x0 = get_log_params(kernel_template, names)
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        start = x0 if r == 0 else x0 + rng.uniform(-2.0, 2.0, size=x0.size)
        try:
            xr, fr = _descend(f_and_g, start, max_iter=max_iter)
        except (ConditioningError, FittingError):
            continue
        if best is None or fr < best[1]:
            best = (xr, fr)
    if best is None:
        raise FittingError("all hyperparameter restarts failed to condition")
    spec = with_log_params(kernel_template, names, best[0])
    return spec, fit(spec, prior_mean, data)


def select_kernel_cv(candidates, data, k_folds, seed, prior_mean=None, restarts=1):
    """Pick the kernel template with the best k-fold held-out log density.

    Each candidate is refitted per fold with :func:`fit_hyperparameters`;
    the score is the mean held-out log predictive density over the folds it
    survives. Candidates failing every fold are excluded. Ties break in
    candidate order.
    """
    if k_folds < 2:
        raise ValueError("k_folds must be >= 2")
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    if data.m < k_folds:
        raise ValueError("need at least k_folds observations")
    if prior_mean is None:
        prior_mean = PriorMean("Zero")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.m)
    folds = np.array_split(perm, k_folds)

    best = None
    for ci, cand in enumerate(candidates):
        scores = []
        for fi, hold in enumerate(folds):
            train = np.setdiff1d(perm, hold, assume_unique=True)
            dtrain = Dataset(data.inputs[train], data.responses[train])
            try:
                spec, gp = fit_hyperparameters(
                    cand, prior_mean, dtrain, objective="MLE",
                    restarts=restarts, seed=seed + 1000 * ci + fi,
                )
                mean, var = gp.predict_batch(data.inputs[hold])
            except (ConditioningError, FittingError):
                continue
            pvar = var + spec.noise_variance
            pvar = np.maximum(pvar, 1e-12)
            resid = data.responses[hold] - mean
            ll = -0.5 * np.log(2.0 * np.pi * pvar) - 0.5 * resid**2 / pvar
            scores.append(float(np.mean(ll)))
        if scores:
            mean_score = float(np.mean(scores))
            if best is None or mean_score > best[1]:
                best = (ci, mean_score)
    if best is None:
        raise SelectionError("every candidate failed on every fold")
    return candidates[best[0]]
