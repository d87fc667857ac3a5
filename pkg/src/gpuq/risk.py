"""Failure-probability estimation.

Failure is the event ``g(x) < 0`` for a scalar limit state ``g``. The module
provides plain and importance-sampling Monte Carlo estimators, the AK-MCS
active-learning loop with EFF / U / SUR acquisition utilities, the epistemic
mean and variance of the GP-induced probability estimate, and the bivariate
normal CDF those moments need.
"""

import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.linalg import solve_triangular

from . import design, kernels
from .distributions import IndependentProduct
from .errors import ConditioningError, FittingError
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec
from .stats import norm_cdf, norm_pdf

_WEIGHT_OVERFLOW = 1e12


class LimitState:
    """Callable limit state with an exact evaluation counter.

    The wrapped evaluator must accept an (n, d) array and return n values;
    the counter increases by exactly one per evaluated point.
    """

    def __init__(self, evaluator):
        self._evaluator = evaluator
        self.n_evals = 0

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.asarray(self._evaluator(X), dtype=float).ravel()
        if out.shape[0] != X.shape[0]:
            raise ValueError("limit state evaluator returned the wrong number of values")
        self.n_evals += X.shape[0]
        return out


@dataclass(frozen=True)
class FailureEstimate:
    """Failure probability with its epistemic moments and budget accounting.

    For the plain Monte Carlo estimators the "epistemic" variance is the
    classical sampling variance ``p (1 - p) / N``.
    """

    p_hat: float
    epistemic_mean: float
    epistemic_variance: float
    n_model_evals: int
    n_mc: int
    utility_used: str
    converged: bool = True

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "epistemic_mean": self.epistemic_mean,
            "epistemic_variance": self.epistemic_variance,
            "n_model_evals": self.n_model_evals,
            "n_mc": self.n_mc,
            "utility_used": self.utility_used,
            "converged": self.converged,
        }


def mc_failure_prob(limit_state, pi, N, seed):
    """Plain Monte Carlo estimate of P[g(x) < 0]."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    X = pi.sample(rng, N)
    before = limit_state.n_evals
    g = limit_state(X)
    p = float(np.mean(g < 0))
    return FailureEstimate(
        p_hat=p,
        epistemic_mean=p,
        epistemic_variance=p * (1.0 - p) / N,
        n_model_evals=limit_state.n_evals - before,
        n_mc=N,
        utility_used="none",
    )


def is_failure_prob(limit_state, pi, pi_star, N, seed):
    """Importance-sampling estimate with proposal ``pi_star``.

    ``p_hat = mean(I[g < 0] * pi/pi_star)`` over N draws from pi_star.
    Weights above 1e12 trigger a diagnostic warning (the proposal is then
    badly matched to the target in the failure region).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    X = pi_star.sample(rng, N)
    before = limit_state.n_evals
    g = limit_state(X)
    logw = pi.logpdf(X) - pi_star.logpdf(X)
    w = np.exp(logw)
    if np.any(w > _WEIGHT_OVERFLOW):
        warnings.warn(
            f"importance weights exceed {_WEIGHT_OVERFLOW:.0e}; proposal poorly matched",
            RuntimeWarning,
        )
    vals = np.where(g < 0, w, 0.0)
    p = float(np.mean(vals))
    return FailureEstimate(
        p_hat=p,
        epistemic_mean=p,
        epistemic_variance=float(np.var(vals) / N),
        n_model_evals=limit_state.n_evals - before,
        n_mc=N,
        utility_used="none",
    )


# ---------------------------------------------------------------------------
# Acquisition utilities
# ---------------------------------------------------------------------------

def eff(u, sigma, eps):
    """Expected feasibility: E[(eps - |Z|) 1{|Z| <= eps}] for Z ~ N(u, sigma^2).

    Measures how much probability mass the GP puts within a band of width
    eps around the limit state g = 0.
    """
    u = np.asarray(u, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("eff requires sigma > 0")
    if np.any(eps <= 0):
        raise ValueError("eff requires eps > 0")
    z0 = -u / sigma
    zp = (eps - u) / sigma
    zm = (-eps - u) / sigma
    return (
        u * (2.0 * norm_cdf(z0) - norm_cdf(zm) - norm_cdf(zp))
        - sigma * (2.0 * norm_pdf(z0) - norm_pdf(zm) - norm_pdf(zp))
        + eps * (norm_cdf(zp) - norm_cdf(zm))
    )


def u_function(u, sigma):
    """Learning function U = |u| / sigma (small near the limit state)."""
    u = np.asarray(u, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("u_function requires sigma > 0")
    return np.abs(u) / sigma


def sur_utility(gp, x_candidate, integration_nodes):
    """Expected remaining misclassification mass after adding a candidate.

    The candidate's response is unknown, so only the variance is updated
    (the posterior mean is frozen); the node-averaged misclassification
    probability is ``mean over x' of Phi(-|u(x')| / sigma_new(x'))``, with
    tau = 0 wherever the updated variance degenerates to zero.
    """
    nodes = np.atleast_2d(np.asarray(integration_nodes, dtype=float))
    mean_nodes, _ = gp.predict_batch(nodes)
    var_new = design.variance_after_add(gp, x_candidate)(nodes)
    sig = np.sqrt(var_new)
    tau = np.where(sig > 0, norm_cdf(-np.abs(mean_nodes) / np.where(sig > 0, sig, 1.0)), 0.0)
    return float(np.mean(tau))


# ---------------------------------------------------------------------------
# Bivariate normal CDF
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _bvnd(dh, dk, r):
    """P[X > dh, Y > dk] for a standard bivariate normal, vectorized.

    Drezner-Wesolowsky single-integral reduction with the sine substitution
    and fixed-order Gauss-Legendre quadrature; correlations beyond 0.925 use
    the complementary expansion so accuracy stays near machine precision.
    """
    dh, dk, r = np.broadcast_arrays(
        np.asarray(dh, dtype=float), np.asarray(dk, dtype=float), np.asarray(r, dtype=float)
    )
    out = np.empty(dh.shape)
    flat_h, flat_k, flat_r = dh.ravel(), dk.ravel(), r.ravel()
    res = np.empty(flat_h.shape)

    mA = np.abs(flat_r) <= 0.925
    if np.any(mA):
        h, k, rr = flat_h[mA], flat_k[mA], flat_r[mA]
        hk = h * k
        hs = 0.5 * (h * h + k * k)
        asr = np.arcsin(rr)
        sn = np.sin(0.5 * asr[:, None] * (_GL_X[None, :] + 1.0))
        integ = np.exp((sn * hk[:, None] - hs[:, None]) / (1.0 - sn * sn))
        bvn = (integ @ _GL_W) * asr / (4.0 * np.pi)
        res[mA] = bvn + norm_cdf(-h) * norm_cdf(-k)

    mB = ~mA
    if np.any(mB):
        # guarded branches below still evaluate both sides of np.where;
        # silence the spurious overflow warnings from the dead side
        err = np.errstate(over="ignore", invalid="ignore")
        err.__enter__()
        h, k, rr = flat_h[mB], flat_k[mB], flat_r[mB]
        k = np.where(rr < 0, -k, k)
        hk = h * k
        bvn = np.zeros(h.shape)
        nd = np.abs(rr) < 1.0
        if np.any(nd):
            hn, kn, hkn = h[nd], k[nd], hk[nd]
            a_s = (1.0 - rr[nd]) * (1.0 + rr[nd])
            a = np.sqrt(a_s)
            bs = (hn - kn) ** 2
            c = (4.0 - hkn) / 8.0
            d = (12.0 - hkn) / 16.0
            asr0 = -0.5 * (bs / a_s + hkn)
            t1 = np.where(
                asr0 > -100.0,
                a * np.exp(asr0) * (1.0 - c * (bs - a_s) * (1.0 - 0.2 * d * bs) / 3.0 + 0.2 * c * d * a_s * a_s),
                0.0,
            )
            b = np.sqrt(bs)
            t2 = np.where(
                -hkn < 100.0,
                np.exp(-0.5 * hkn) * np.sqrt(2.0 * np.pi) * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - 0.2 * d * bs) / 3.0),
                0.0,
            )
            acc = t1 - t2
            a2 = 0.5 * a
            xs = (a2[:, None] * (_GL_X[None, :] + 1.0)) ** 2
            rs = np.sqrt(1.0 - xs)
            asr1 = -0.5 * (bs[:, None] / xs + hkn[:, None])
            integ = np.where(
                asr1 > -100.0,
                np.exp(asr1)
                * (
                    np.exp(-hkn[:, None] * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                    - (1.0 + c[:, None] * xs * (1.0 + d[:, None] * xs))
                ),
                0.0,
            )
            acc = acc + a2 * (integ @ _GL_W)
            bvn[nd] = -acc / (2.0 * np.pi)
        pos = rr > 0
        bvn = np.where(pos, bvn + norm_cdf(-np.maximum(h, k)), -bvn + np.where(k > h, norm_cdf(k) - norm_cdf(h), 0.0))
        res[mB] = bvn
        err.__exit__(None, None, None)

    out.ravel()[:] = np.clip(res, 0.0, 1.0)
    return out


def bivariate_normal_cdf(h, k, rho):
    """P[Z1 <= h, Z2 <= k] for standard normals with correlation rho."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < -1.0) or np.any(rho_arr > 1.0):
        raise ValueError("rho must lie in [-1, 1]")
    out = _bvnd(-np.asarray(h, dtype=float), -np.asarray(k, dtype=float), rho_arr)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Epistemic moments of the GP-induced failure probability
# ---------------------------------------------------------------------------

def _phi_of_minus_ratio(mean, sig):
    """Phi(-u/sigma) with the sigma -> 0 indicator limit."""
    out = np.empty(mean.shape)
    pos = sig > 0
    out[pos] = norm_cdf(-mean[pos] / sig[pos])
    z = ~pos
    out[z] = np.where(mean[z] < 0, 1.0, np.where(mean[z] > 0, 0.0, 0.5))
    return out


def _distinct_pairs(n, max_pairs, rng):
    total = n * (n - 1) // 2
    if total <= max_pairs:
        iu = np.triu_indices(n, k=1)
        return iu[0], iu[1]
    ii = rng.integers(0, n, size=int(max_pairs * 2.5))
    jj = rng.integers(0, n, size=int(max_pairs * 2.5))
    lo, hi = np.minimum(ii, jj), np.maximum(ii, jj)
    keep = lo < hi
    pairs = np.unique(np.column_stack([lo[keep], hi[keep]]), axis=0)
    pairs = pairs[:max_pairs]
    return pairs[:, 0], pairs[:, 1]


def ptilde_moments(gp, pi, N_outer, seed, max_pairs=100_000):
    """Mean and variance of the GP-induced failure probability.

    ``E[P] = mean over nodes of Phi(-u/sigma)`` and ``E[P^2]`` is the
    average of the bivariate normal orthant probability over distinct node
    pairs (capped at ``max_pairs`` by seeded subsampling), with the pair
    correlation taken from the posterior covariance.
    """
    if N_outer < 2:
        raise ValueError("N_outer must be >= 2")
    rng = np.random.default_rng(seed)
    nodes = pi.sample(rng, N_outer) if hasattr(pi, "sample") else pi(rng, N_outer)
    nodes = np.atleast_2d(nodes)
    mean, var = gp.predict_batch(nodes)
    sig = np.sqrt(var)
    terms = _phi_of_minus_ratio(mean, sig)
    e_p = float(np.mean(terms))

    ii, jj = _distinct_pairs(N_outer, max_pairs, rng)
    if gp.m > 0:
        V = solve_triangular(gp.factor, gp._cross(nodes), lower=True)
        cross = np.sum(V[:, ii] * V[:, jj], axis=0)
    else:
        cross = 0.0
    cov = kernels.kernel_pairs(gp.kernel, nodes[ii], nodes[jj]) - cross

    si, sj = sig[ii], sig[jj]
    both = (si > 0) & (sj > 0)
    vals = np.empty(ii.shape)
    if np.any(both):
        rho = np.clip(cov[both] / (si[both] * sj[both]), -1.0, 1.0)
        zi = np.clip(-mean[ii][both] / si[both], -40.0, 40.0)
        zj = np.clip(-mean[jj][both] / sj[both], -40.0, 40.0)
        vals[both] = bivariate_normal_cdf(zi, zj, rho)
    deg = ~both
    if np.any(deg):
        vals[deg] = terms[ii][deg] * terms[jj][deg]
    e_p2 = float(np.mean(vals))
    return e_p, max(e_p2 - e_p * e_p, 0.0)


# ---------------------------------------------------------------------------
# AK-MCS
# ---------------------------------------------------------------------------

@dataclass
class AkmcsRecord:
    iteration: int
    x: np.ndarray
    g_value: float
    utility_value: float
    p_hat_current: float


_DEFAULT_THRESHOLDS = {"U": 2.0, "EFF": 1e-3, "SUR": 1e-4}


def _default_template(S, y=None):
    scales = np.std(S, axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    sv = float(np.var(y)) if y is not None and np.var(y) > 0 else 1.0
    return KernelSpec("SE", sv, tuple(scales.tolist()))


def akmcs_run(
    limit_state,
    pi,
    N,
    n_initial,
    budget,
    utility="U",
    stop_threshold=None,
    seed=0,
    kernel_template=None,
    restarts=1,
    sur_nodes=256,
    moment_nodes=2000,
):
    """Active-Kriging Monte Carlo simulation of a failure probability.

    Generates an N-point Monte Carlo population S from pi, evaluates the
    limit state on a random initial subset, then repeatedly refits the GP
    and queries the population point chosen by the utility (argmax EFF,
    argmin U, or argmin SUR) until the utility's stopping threshold is met
    or the evaluation budget is exhausted. The final probability is the
    fraction of S classified as failing by the GP mean; epistemic moments
    come from :func:`ptilde_moments` on a node subsample of S.

    Returns ``(FailureEstimate, audit)`` where audit is a list of
    :class:`AkmcsRecord`, one per model evaluation.
    """
    if utility not in ("U", "EFF", "SUR"):
        raise ValueError("utility must be one of 'U', 'EFF', 'SUR'")
    if budget < n_initial:
        raise ValueError("budget must cover the initial design")
    threshold = _DEFAULT_THRESHOLDS[utility] if stop_threshold is None else stop_threshold

    rng = np.random.default_rng(seed)
    S = pi.sample(rng, N)
    d = S.shape[1]
    if n_initial < d + 1:
        raise ValueError("n_initial must be at least d + 1")

    chosen = list(rng.choice(N, size=n_initial, replace=False))
    evaluated = np.zeros(N, dtype=bool)
    evaluated[chosen] = True
    g_vals = list(limit_state(S[chosen]))
    audit = [
        AkmcsRecord(0, S[idx].copy(), float(gv), np.nan, np.nan)
        for idx, gv in zip(chosen, g_vals)
    ]

    template = kernel_template or _default_template(S, np.asarray(g_vals))
    prior = PriorMean("Constant")
    gp = None
    converged = False
    iteration = 0

    while True:
        data = Dataset(S[chosen], np.asarray(g_vals))
        template, gp = fit_hyperparameters(
            template, prior, data, objective="MLE", restarts=restarts, seed=seed + iteration
        )
        mean, var = gp.predict_batch(S)
        p_current = float(np.mean(mean < 0))
        free = ~evaluated
        if not np.any(free) or len(chosen) >= budget:
            converged = not np.any(free)
            break

        sig = np.sqrt(var)
        if utility == "U":
            scores = np.where(sig > 0, np.abs(mean) / np.where(sig > 0, sig, 1.0), np.inf)
            scores[evaluated] = np.inf
            best = int(np.argmin(scores))
            best_score = float(scores[best])
            if best_score >= threshold:
                converged = True
                break
        elif utility == "EFF":
            pos = sig > 0
            scores = np.full(N, -np.inf)
            scores[pos] = eff(mean[pos], sig[pos], 2.0 * sig[pos])
            scores[evaluated] = -np.inf
            best = int(np.argmax(scores))
            best_score = float(scores[best])
            if best_score <= threshold:
                converged = True
                break
        else:  # SUR
            node_idx = rng.choice(N, size=min(sur_nodes, N), replace=False)
            nodes = S[node_idx]
            mean_nodes = np.abs(mean[node_idx])[:, None]
            free_idx = np.flatnonzero(free)
            free_scores = np.empty(free_idx.size)
            chunk = max(1, 2_000_000 // max(1, nodes.shape[0]))
            for c0 in range(0, free_idx.size, chunk):
                cand = S[free_idx[c0 : c0 + chunk]]
                sig_new = np.sqrt(design._updated_variance_matrix(gp, cand, nodes))
                tau = np.where(sig_new > 0, norm_cdf(-mean_nodes / np.where(sig_new > 0, sig_new, 1.0)), 0.0)
                free_scores[c0 : c0 + chunk] = np.mean(tau, axis=0)
            scores = np.full(N, np.inf)
            scores[free_idx] = free_scores
            best = int(np.argmin(scores))
            best_score = float(scores[best])
            if best_score <= threshold:
                converged = True
                break

        g_new = float(limit_state(S[best : best + 1])[0])
        chosen.append(best)
        evaluated[best] = True
        g_vals.append(g_new)
        iteration += 1
        audit.append(AkmcsRecord(iteration, S[best].copy(), g_new, best_score, p_current))

    p_hat = float(np.mean(mean < 0))
    sub = rng.choice(N, size=min(moment_nodes, N), replace=False)
    e_p, var_p = ptilde_moments(gp, lambda r, n: S[sub[:n]], min(moment_nodes, N), seed + 10_000)
    estimate = FailureEstimate(
        p_hat=p_hat,
        epistemic_mean=e_p,
        epistemic_variance=var_p,
        n_model_evals=len(chosen),
        n_mc=N,
        utility_used=utility,
        converged=converged,
    )
    return estimate, audit
