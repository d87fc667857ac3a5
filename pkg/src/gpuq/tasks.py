"""Pendulum UQ task drivers: propagation, reliability, calibration,
sensitivity and optimization under uncertainty.

Each driver wires the pendulum forward model ``x = (theta0, L, g) ->
theta(T)`` (or ``dtheta/dt(T)``) into the corresponding estimation module,
counts true-model evaluations exactly, and is seed-deterministic end to end.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bayesopt, calibrate, design, quadrature, risk, sensitivity
from .distributions import IndependentProduct, Normal, PointMass, standard_gaussian
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec
from .pendulum import pendulum_final_state
from .results import EstimateWithUncertainty
from .stats import norm_logpdf


@dataclass(frozen=True)
class UqTaskSpec:
    """Declarative description of one pendulum UQ task.

    Distribution defaults keep all three inputs active but narrow enough
    that the small-angle regime stays meaningful.
    """

    theta0: object = Normal(0.2, 0.01)
    length: object = Normal(1.0, 0.01)
    gravity: object = Normal(9.81, 0.05)
    horizon: float = 2.0
    dt: float = 1e-3
    # RE
    theta_max: float = 0.23
    # PE
    obs_times: Sequence[float] = tuple(np.linspace(0.1, 2.0, 20))
    obs_noise_std: float = 0.005
    # OU
    target_theta: float = 0.15
    mu_theta_bounds: Sequence[float] = (0.05, 0.5)
    sigma_theta: float = 0.02

    @property
    def marginals(self):
        return IndependentProduct([self.theta0, self.length, self.gravity])


class _CountingModel:
    """Batch forward model with an exact evaluation counter."""

    def __init__(self, fn):
        self._fn = fn
        self.n_evals = 0

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.n_evals += X.shape[0]
        return self._fn(X)


def _theta_batch(spec):
    def fn(X):
        th, _ = pendulum_final_state(X[:, 0], X[:, 1], X[:, 2], spec.horizon, spec.dt)
        return th

    return fn


def _omega_batch(spec):
    def fn(X):
        _, om = pendulum_final_state(X[:, 0], X[:, 1], X[:, 2], spec.horizon, spec.dt)
        return om

    return fn


def _fit_surrogate(X, y, seed, isotropic=False, restarts=2, noise_rel=1e-6):
    # the fixed relative nugget keeps the surrogate's epistemic bands
    # calibrated on analytically smooth targets (plain MLE can collapse
    # the integral variance to zero while a small bias remains)
    if isotropic:
        scale = float(np.mean(np.std(X, axis=0)))
        scales = (scale if scale > 0 else 1.0,)
    else:
        s = np.std(X, axis=0)
        scales = tuple(np.where(s > 0, s, 1.0).tolist())
    sv = float(np.var(y)) if np.var(y) > 0 else 1.0
    template = KernelSpec("SE", sv, scales, noise_variance=noise_rel * sv)
    return fit_hyperparameters(
        template, PriorMean("Constant"), Dataset(X, y),
        objective="MLE", restarts=restarts, seed=seed, include_noise=False,
    )[1]


def _gaussian_like(marginals):
    return all(isinstance(m, (Normal, PointMass)) for m in marginals)


def run_up(spec, method="BQ", budget=30, seed=0, n_mc=100_000):
    """Mean and variance of theta(T) under input uncertainty.

    ``method="GpMeanMc"`` averages the GP mean over Monte Carlo draws;
    ``method="BQ"`` integrates the GP in closed form (inputs standardized to
    a standard Gaussian, so it needs Normal or point-mass marginals). Both
    report epistemic variances from the GP posterior.
    """
    if method not in ("BQ", "GpMeanMc"):
        raise ValueError("method must be 'BQ' or 'GpMeanMc'")
    if budget < 5:
        raise ValueError("budget must be >= 5")
    pi = spec.marginals
    model = _CountingModel(_theta_batch(spec))

    if np.all(pi.variances == 0):
        val = float(model(pi.means.reshape(1, -1))[0])
        zero = EstimateWithUncertainty(val, 0.0, 1)
        return {
            "mean": zero,
            "variance": EstimateWithUncertainty(0.0, 0.0, 1),
            "n_model_evals": model.n_evals,
            "method": method,
        }

    rng = np.random.default_rng(seed)

    if method == "BQ":
        if not _gaussian_like(pi.marginals):
            raise ValueError("BQ propagation needs Normal or point-mass marginals")
        mu = pi.means
        sd = np.sqrt(pi.variances)
        sd_safe = np.where(sd > 0, sd, 1.0)
        zbox = design.Domain(np.tile([-3.5, 3.5], (pi.dim, 1)))
        Z = design.lhs_sample(zbox, budget, seed).points
        X = mu + sd * Z  # point-mass dims collapse
        y = model(X)
        gp = _fit_surrogate(Z, y, seed, isotropic=True)
        emb = quadrature.se_embedding_analytic(gp)
        est = quadrature.bq_estimate(gp, emb, pi=standard_gaussian(pi.dim))
        mean_est = EstimateWithUncertainty(est.mean, est.variance, budget)
        Zmc = rng.standard_normal((n_mc, pi.dim))
        u = gp.predict_batch(Zmc)[0]
        gp_nodes, gp_for_paths = Zmc, gp
    else:
        box = design.Domain.from_quantiles(pi, 1e-4)
        X = design.lhs_sample(box, budget, seed).points
        y = model(X)
        gp = _fit_surrogate(X, y, seed, isotropic=False)
        Xmc = pi.sample(rng, n_mc)
        u = gp.predict_batch(Xmc)[0]
        sub = Xmc[rng.choice(n_mc, size=min(2048, n_mc), replace=False)]
        C = gp.cov_matrix(sub, sub)
        mean_est = EstimateWithUncertainty(float(np.mean(u)), max(float(np.mean(C)), 0.0), n_mc)
        gp_nodes, gp_for_paths = Xmc, gp

    var_plug = max(float(np.mean(u**2) - np.mean(u) ** 2), 0.0)
    nsub = min(512, gp_nodes.shape[0])
    sub = gp_nodes[rng.choice(gp_nodes.shape[0], size=nsub, replace=False)]
    mean_sub, _ = gp_for_paths.predict_batch(sub)
    C = gp_for_paths.cov_matrix(sub, sub)
    C[np.diag_indices_from(C)] += 1e-12 * max(1.0, np.max(np.abs(np.diag(C))))
    L = np.linalg.cholesky(C)
    paths = mean_sub[None, :] + rng.standard_normal((64, nsub)) @ L.T
    var_paths = np.var(paths, axis=1)
    var_est = EstimateWithUncertainty(var_plug, float(np.var(var_paths)), gp_nodes.shape[0])

    return {
        "mean": mean_est,
        "variance": var_est,
        "n_model_evals": model.n_evals,
        "method": method,
    }


def run_re(spec, budget=60, utility="U", seed=0, population=100_000, n_initial=12):
    """Failure probability P[theta(T) >= theta_max] via AK-MCS.

    Wraps the limit state ``g(x) = theta_max - theta(T; x)`` (failure at
    g < 0) and runs the active-learning loop over a Monte Carlo population.
    """
    if budget < 12:
        raise ValueError("budget must be >= 12")
    theta_fn = _theta_batch(spec)
    limit = risk.LimitState(lambda X: spec.theta_max - theta_fn(X))
    estimate, audit = risk.akmcs_run(
        limit, spec.marginals, population, min(n_initial, budget), budget,
        utility=utility, seed=seed,
    )
    return estimate, audit, limit.n_evals


def run_pe(
    spec,
    budget=40,
    seed=0,
    utility="EV",
    chain_length=20_000,
    burn_in=5_000,
    pool_size=2048,
    truth=None,
):
    """Bayesian recovery of (theta0, L, g) from noisy angle observations.

    Synthetic observations are generated at the 'truth' (the prior means by
    default), the log joint is modeled with an actively refined GP, and
    Metropolis-Hastings samples the surrogate posterior. Returns posterior
    summaries, the chain, and the exact forward-model call count.
    """
    pi = spec.marginals
    truth = pi.means if truth is None else np.asarray(truth, dtype=float)
    times = np.asarray(spec.obs_times, dtype=float)
    if np.any(times <= 0) or np.any(times > spec.horizon):
        raise ValueError("observation times must lie in (0, horizon]")
    rng = np.random.default_rng(seed)

    from .pendulum import PendulumConfig, pendulum_solve

    def theta_at_times(x):
        cfg = PendulumConfig(x[0], x[1], x[2], spec.horizon, spec.dt)
        return pendulum_solve(cfg).theta(times)

    y_obs = theta_at_times(truth) + spec.obs_noise_std * rng.standard_normal(times.size)

    # point-mass priors pin their parameter exactly; infer only the free ones
    free = np.flatnonzero(pi.variances > 0)
    fixed_values = pi.means.copy()
    if free.size == 0:
        return {
            "posterior_mean": fixed_values,
            "posterior_std": np.zeros(3),
            "acceptance_rate": 1.0,
            "truth": truth,
            "observations": y_obs,
            "obs_times": times,
            "chain": None,
            "surrogate": None,
            "n_model_evals": 0,
        }
    pi_free = IndependentProduct([pi.marginals[i] for i in free])

    def embed(x_free):
        full = fixed_values.copy()
        full[free] = np.asarray(x_free, dtype=float)
        return full

    def log_likelihood(x_free):
        resid = (y_obs - theta_at_times(embed(x_free))) / spec.obs_noise_std
        return float(np.sum(norm_logpdf(resid)) - times.size * np.log(spec.obs_noise_std))

    def log_prior(x_free):
        return float(pi_free.logpdf(np.asarray(x_free).reshape(1, -1))[0])

    log_joint = calibrate.LogJointModel(log_prior, log_likelihood)
    box = design.Domain.from_quantiles(pi_free, 1e-6)
    m0 = min(10, budget)
    gp = calibrate.bape_run(log_joint, box, m0, budget, utility=utility, pool_size=pool_size, seed=seed)

    l_vals = gp.data.responses
    X = gp.data.inputs
    x0 = X[int(np.argmax(l_vals))]
    w = np.exp(l_vals - np.max(l_vals))
    w = w / np.sum(w)
    xbar = w @ X
    spread = np.sqrt(np.maximum(w @ (X - xbar) ** 2, 0.0))
    widths = box.upper - box.lower
    proposal = np.maximum(spread, 0.005 * widths)

    def target(x):
        return gp.predict(np.asarray(x))[0]

    chain = calibrate.mh_sample(target, x0, proposal, chain_length, burn_in, seed + 1)
    post_mean = fixed_values.copy()
    post_mean[free] = np.mean(chain.samples, axis=0)
    post_std = np.zeros(3)
    post_std[free] = np.std(chain.samples, axis=0)
    full_samples = np.tile(fixed_values, (chain.length, 1))
    full_samples[:, free] = chain.samples
    full_chain = calibrate.McmcChain(full_samples, chain.acceptance_rate, chain.seed)
    return {
        "posterior_mean": post_mean,
        "posterior_std": post_std,
        "acceptance_rate": chain.acceptance_rate,
        "truth": truth,
        "observations": y_obs,
        "obs_times": times,
        "chain": full_chain,
        "surrogate": gp,
        "n_model_evals": log_joint.n_evals,
    }


def run_sa(spec, budget=30, n=100_000, seed=0, prefactor="D1", weights=None):
    """Sobol indices of theta(T) over (theta0, L, g) with active refinement."""
    if budget < 10:
        raise ValueError("budget must be >= 10")
    model = _CountingModel(_theta_batch(spec))
    result, audit = sensitivity.active_sa_run(
        model, spec.marginals, m0=min(10, budget), M=budget, n=n,
        weights=weights, prefactor=prefactor, seed=seed,
    )
    return result, audit, model.n_evals


def run_ou(
    spec,
    budget=25,
    seed=0,
    n_saa=200,
    m0=6,
    pool_size=1024,
    pof_threshold=0.9,
):
    """Choose the release-angle mean minimizing E[(theta(T) - target)^2]
    subject to E[dtheta/dt(T)] >= 0.

    Expectations use sample-average approximation over common random
    numbers, so each decision value costs ``n_saa`` pendulum solves; the
    outer search is Bayesian optimization with noise fitted and the
    probability-of-feasibility constraint rule.
    """
    lo, hi = spec.mu_theta_bounds
    rng = np.random.default_rng(seed)
    zs = rng.standard_normal((n_saa, 3))
    sd_L = np.sqrt(spec.length.var)
    sd_g = np.sqrt(spec.gravity.var)
    L_draw = spec.length.mean + sd_L * zs[:, 1]
    g_draw = spec.gravity.mean + sd_g * zs[:, 2]

    cache = {}
    counters = {"solves": 0, "outer": 0}

    def states(mu):
        key = float(mu)
        if key not in cache:
            th0 = mu + spec.sigma_theta * zs[:, 0]
            cache[key] = pendulum_final_state(th0, L_draw, g_draw, spec.horizon, spec.dt)
            counters["solves"] += n_saa
        return cache[key]

    def objective(X):
        X = np.atleast_2d(X)
        counters["outer"] += X.shape[0]
        out = np.empty(X.shape[0])
        for i, mu in enumerate(X[:, 0]):
            th, _ = states(mu)
            out[i] = -float(np.mean((th - spec.target_theta) ** 2))
        return out

    def constraint(X):
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0])
        for i, mu in enumerate(X[:, 0]):
            _, om = states(mu)
            out[i] = -float(np.mean(om))  # feasible when E[omega] >= 0
        return out

    domain = design.Domain(np.array([[lo, hi]]))
    acq = bayesopt.AcquisitionSpec("EI", constraint_mode="PoFThreshold", epsilon=pof_threshold)
    state = bayesopt.bo_run(
        objective, [constraint], domain, m0=min(m0, budget), M=budget,
        spec=acq, pool_size=pool_size, seed=seed, noisy=True,
    )

    mu_opt = float(state.x_best[0]) if state.x_best is not None else float("nan")
    if state.x_best is not None:
        th, om = states(mu_opt)
        obj_val = float(np.mean((th - spec.target_theta) ** 2))
        con_val = float(np.mean(om))
        cm, cv = state.constraint_gps[0].predict(state.x_best)
        pof_val = float(bayesopt.pof(np.array([cm]), np.array([np.sqrt(cv)]))[0])
    else:
        obj_val, con_val, pof_val = float("nan"), float("nan"), float("nan")
    return {
        "mu_theta": mu_opt,
        "objective": obj_val,
        "constraint_mean_omega": con_val,
        "pof_at_optimum": pof_val,
        "state": state,
        "n_outer_evals": counters["outer"],
        "n_model_evals": counters["solves"],
        "n_saa": n_saa,
    }
