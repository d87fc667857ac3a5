"""Bayesian parameter estimation with a GP surrogate of the log joint density.

``l(x) = log likelihood + log prior`` is modeled as a GP, refined actively
(BAPE) or with a running density approximation factored out (the adaptive-GP
iteration); Metropolis-Hastings then samples the surrogate posterior
``exp(l_tilde(x))``. MH targets use the GP posterior *mean* of l.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import design
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec

_NEG_INF_FLOOR_GAP = 50.0


class LogJointModel:
    """Log prior plus log likelihood with a forward-model call counter.

    ``log_likelihood`` is the expensive piece (it wraps the forward model);
    the counter increments once per point at which it is evaluated.
    """

    def __init__(self, log_prior, log_likelihood):
        self.log_prior = log_prior
        self.log_likelihood = log_likelihood
        self.n_evals = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float).ravel()
        self.n_evals += 1
        return float(self.log_likelihood(x)) + float(self.log_prior(x))


@dataclass(frozen=True)
class McmcChain:
    """Post-burn-in samples of a Metropolis-Hastings run."""

    samples: np.ndarray
    acceptance_rate: float
    seed: int

    @property
    def length(self):
        return self.samples.shape[0]


def mh_sample(log_target, x0, proposal_std, T, burn_in, seed):
    """Gaussian random-walk Metropolis-Hastings.

    Runs T iterations from x0 with a diagonal Gaussian proposal (one scale
    per dimension) and discards the first ``burn_in``. The symmetric
    proposal cancels in the acceptance ratio, so
    ``a = min(1, exp(l(x*) - l(x_n)))``. Each iteration draws the proposal
    and the uniform in a fixed order, so chains are reproducible and
    invariant to constant shifts of the target.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    proposal_std = np.broadcast_to(np.asarray(proposal_std, dtype=float), x0.shape)
    if np.any(proposal_std <= 0):
        raise ValueError("proposal_std must be > 0")
    if not T > burn_in >= 0:
        raise ValueError("need T > burn_in >= 0")
    rng = np.random.default_rng(seed)
    current = x0.copy()
    l_current = float(log_target(current))
    if not np.isfinite(l_current):
        raise ValueError("log target is not finite at the initial point")
    kept = np.empty((T - burn_in, x0.size))
    accepts = 0
    for n in range(T):
        prop = current + proposal_std * rng.standard_normal(x0.size)
        l_prop = float(log_target(prop))
        u = rng.random()
        if np.log(u) < l_prop - l_current:
            current, l_current = prop, l_prop
            accepts += 1
        if n >= burn_in:
            kept[n - burn_in] = current
    return McmcChain(kept, accepts / T, seed)


def _log_expm1(x):
    """log(exp(x) - 1), stable for both tiny and huge x."""
    x = np.asarray(x, dtype=float)
    small = x < 30.0
    out = np.empty_like(x)
    with np.errstate(divide="ignore"):
        out[small] = np.log(np.expm1(np.maximum(x[small], 0.0)))
    big = ~small
    out[big] = x[big] + np.log1p(-np.exp(-x[big]))
    return out


def log_ev_utility(mean, var):
    """log Var[exp(l_tilde)] = 2u + s2 + log(expm1(s2)); -inf at s2 = 0.

    Computed in the log domain because exp(2u) overflows for realistic log
    joint magnitudes; the argmax is unchanged.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    return np.where(var > 0, 2.0 * mean + var + _log_expm1(var), -np.inf)


def ev_utility(mean, var):
    """Exponentiated variance Var[exp(l_tilde)] = exp(2u + s2) (exp(s2) - 1)."""
    with np.errstate(over="ignore"):
        return np.exp(log_ev_utility(mean, var))


def ee_utility(mean, var):
    """Exponentiated entropy H[exp(l_tilde)] = u + 0.5 log(2 pi e s2)."""
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(var > 0, mean + 0.5 * np.log(2.0 * np.pi * np.e * var), -np.inf)


_UTILITIES = {"EV": log_ev_utility, "EE": ee_utility}


def _floor_neg_inf(values):
    vals = np.asarray(values, dtype=float)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        raise ValueError("no finite log-joint evaluations to fit a GP on")
    return np.where(np.isfinite(vals), vals, finite.min() - _NEG_INF_FLOOR_GAP)


def _default_template(X, y):
    scales = (np.max(X, axis=0) - np.min(X, axis=0)) / 2.0
    scales = np.where(scales > 0, scales, 1.0)
    sv = float(np.var(y)) if np.var(y) > 0 else 1.0
    return KernelSpec("SE", sv, tuple(scales.tolist()))


def _fit_surrogate(X, values, seed, restarts):
    y = _floor_neg_inf(values)
    template = _default_template(X, y)
    _, gp = fit_hyperparameters(
        template, PriorMean("Constant"), Dataset(X, y),
        objective="MLE", restarts=restarts, seed=seed,
    )
    return gp


def bape_run(log_joint, domain, m0, M, utility="EV", pool_size=512, seed=0, restarts=2):
    """Bayesian active posterior estimation: a GP for the log joint density.

    LHS initial design of m0 points, then refit -> argmax utility over a
    fresh seeded pool (previously queried points excluded) -> evaluate the
    log joint, until M evaluations. Infinite log-joint values are floored at
    (min finite observed) - 50 before fitting. Returns the final GP; the
    surrogate posterior is exp(gp mean) up to normalization.
    """
    if m0 < 2 or M < m0:
        raise ValueError("need m0 >= 2 and M >= m0")
    if utility not in _UTILITIES:
        raise ValueError("utility must be 'EV' or 'EE'")
    score = _UTILITIES[utility]
    rng = np.random.default_rng(seed)

    X = design.lhs_sample(domain, m0, seed).points
    vals = [log_joint(x) for x in X]
    gp = _fit_surrogate(X, vals, seed, restarts)

    while X.shape[0] < M:
        pool = design.lhs_sample(domain, pool_size, rng.integers(2**63)).points
        fresh = ~np.any(np.all(pool[:, None, :] == X[None, :, :], axis=2), axis=1)
        pool = pool[fresh]
        mean, var = gp.predict_batch(pool)
        nxt = int(np.argmax(score(mean, var)))
        x_new = pool[nxt]
        vals.append(log_joint(x_new))
        X = np.vstack([X, x_new])
        gp = _fit_surrogate(X, vals, seed + X.shape[0], restarts)
    return gp


@dataclass(frozen=True)
class GaussianDensity:
    """Moment-matched full-covariance Gaussian used as the AGP factor q."""

    mean: np.ndarray
    cov: np.ndarray

    def logpdf(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = self.mean.size
        L = np.linalg.cholesky(self.cov)
        z = np.linalg.solve(L, (X - self.mean).T)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        return -0.5 * np.sum(z * z, axis=0) - 0.5 * (d * np.log(2.0 * np.pi) + logdet)

    def inflated(self, factor):
        return GaussianDensity(self.mean, self.cov * factor)


def _moment_match(samples, previous):
    mean = np.mean(samples, axis=0)
    cov = np.cov(samples.T, ddof=1)
    cov = np.atleast_2d(cov)
    try:
        np.linalg.cholesky(cov)
        return GaussianDensity(mean, cov)
    except np.linalg.LinAlgError:
        return previous.inflated(1.5)


@dataclass
class AgpRound:
    q: GaussianDensity
    gp: object
    samples: np.ndarray


def agp_iterate(
    log_joint,
    domain,
    n_rounds,
    samples_per_round,
    utility="EV",
    seed=0,
    m0=8,
    queries_per_round=1,
    proposal_scale=0.25,
    burn_in_frac=0.3,
    restarts=2,
):
    """Adaptive-GP posterior estimation: factor out a running Gaussian q.

    The GP models the residual ``g(x) = l(x) - log q(x)``. Each round (i)
    samples the current approximation exp(g_mean) * q by MH, (ii) selects
    query points from those samples by the utility and evaluates l there,
    (iii) moment-matches a new Gaussian q to the samples (degenerate sample
    covariance falls back to the previous q inflated 1.5x), and (iv) refits
    the GP on residual targets recomputed from the stored l values.

    Returns the list of per-round (q, gp, samples) records.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if utility not in _UTILITIES:
        raise ValueError("utility must be 'EV' or 'EE'")
    score = _UTILITIES[utility]
    rng = np.random.default_rng(seed)

    X = design.lhs_sample(domain, m0, seed).points
    l_vals = np.array([log_joint(x) for x in X])

    center = 0.5 * (domain.lower + domain.upper)
    width = domain.upper - domain.lower
    q = GaussianDensity(center, np.diag((width / 4.0) ** 2))
    widths = width

    rounds = []
    for rnd in range(n_rounds):
        resid = _floor_neg_inf(l_vals) - q.logpdf(X)
        gp = _fit_surrogate(X, resid, seed + 101 * rnd, restarts)

        def target(x):
            m, _ = gp.predict(np.asarray(x))
            return m + float(q.logpdf(np.asarray(x).reshape(1, -1))[0])

        x0 = X[int(np.argmax(l_vals))]
        burn = int(burn_in_frac * samples_per_round)
        chain = mh_sample(
            target, x0, proposal_scale * widths, samples_per_round + burn, burn,
            seed=int(rng.integers(2**63)),
        )
        samples = chain.samples

        cand = np.unique(samples, axis=0)  # chain rejections repeat rows
        seen = np.any(np.all(cand[:, None, :] == X[None, :, :], axis=2), axis=1)
        cand = cand[~seen]
        if cand.shape[0] < queries_per_round:
            # a stuck chain can leave nothing new; fall back to a fresh pool
            pool = design.lhs_sample(domain, 256, int(rng.integers(2**63))).points
            pseen = np.any(np.all(pool[:, None, :] == X[None, :, :], axis=2), axis=1)
            cand = np.vstack([cand, pool[~pseen]])
        mean_c, var_c = gp.predict_batch(cand)
        logq_c = q.logpdf(cand)
        util = score(mean_c + logq_c, var_c)
        order = np.argsort(-util, kind="stable")[:queries_per_round]
        for idx in order:
            x_new = cand[idx]
            l_vals = np.append(l_vals, log_joint(x_new))
            X = np.vstack([X, x_new])

        q = _moment_match(samples, q)
        resid = _floor_neg_inf(l_vals) - q.logpdf(X)
        gp = _fit_surrogate(X, resid, seed + 101 * rnd + 17, restarts)
        rounds.append(AgpRound(q, gp, samples))
    return rounds
