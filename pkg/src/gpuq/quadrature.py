"""Bayesian quadrature: Gaussian posteriors over integrals of a GP surrogate.

For an integrand modeled by a fitted GP, the integral against a weight
density pi is itself Gaussian with

    mean = int u_pr pi + w' Sigma_y^-1 (y* - u_pr(X*))
    var  = int int k(x, x') pi(x) pi(x') dx dx' - w' Sigma_y^-1 w

where ``w_j = int k(x_j*, x) pi(x) dx`` are the kernel mean embeddings.
Embeddings are closed-form for the isotropic SE kernel under a standard
Gaussian weight, and Monte Carlo otherwise.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .distributions import IndependentProduct, Normal

_MAX_PAIR_BLOCK = 2_000_000  # elements per Gram chunk in the MC double integral


@dataclass(frozen=True)
class EmbeddingVector:
    """Kernel mean embeddings of the design points plus the double integral."""

    w: np.ndarray
    double_integral: float
    method: str  # "analytic-se-standard-gaussian" or "monte-carlo"
    node_count: int = 0


@dataclass(frozen=True)
class IntegralEstimate:
    """Gaussian belief about an integral value."""

    mean: float
    variance: float
    method: str
    design_size: int

    def to_dict(self):
        return {
            "mean": self.mean,
            "variance": self.variance,
            "method": self.method,
            "design_size": self.design_size,
        }


def is_standard_gaussian(pi):
    return isinstance(pi, IndependentProduct) and all(
        isinstance(m, Normal) and m.mean == 0.0 and m.std == 1.0 for m in pi.marginals
    )


def _require_se_isotropic(spec):
    if spec.family != "SE":
        raise ValueError("analytic embeddings require the SE kernel")
    if len(spec.length_scales) != 1:
        raise ValueError("analytic embeddings require an isotropic length-scale")


def se_embedding_analytic(gp):
    """Closed-form embeddings for an isotropic-SE GP under standard Gaussian pi.

        w_j = s0 (l^2/(l^2+1))^(d/2) exp(-||x_j*||^2 / (2 (l^2+1)))

    and the double integral is ``s0 (l^2/(l^2+2))^(d/2)``.
    """
    _require_se_isotropic(gp.kernel)
    ell2 = gp.kernel.length_scales[0] ** 2
    s0 = gp.kernel.signal_variance
    d = gp.d
    X = gp.data.inputs
    sq = np.sum(X * X, axis=1) if gp.m > 0 else np.zeros(0)
    w = s0 * (ell2 / (ell2 + 1.0)) ** (d / 2.0) * np.exp(-sq / (2.0 * (ell2 + 1.0)))
    di = s0 * (ell2 / (ell2 + 2.0)) ** (d / 2.0)
    return EmbeddingVector(w, float(di), "analytic-se-standard-gaussian")


def _draw(pi, rng, n):
    if hasattr(pi, "sample"):
        return np.atleast_2d(pi.sample(rng, n))
    return np.atleast_2d(pi(rng, n))


def _pair_mean_kernel(spec, X1, X2):
    """Mean of k over all (row of X1, row of X2) pairs, chunked."""
    n1, n2 = X1.shape[0], X2.shape[0]
    chunk = max(1, _MAX_PAIR_BLOCK // max(1, n2))
    total = 0.0
    for i0 in range(0, n1, chunk):
        total += float(np.sum(kernels.gram_matrix(spec, X1[i0 : i0 + chunk], X2)))
    return total / (n1 * n2)


def embedding_mc(gp, pi, n, seed):
    """Monte Carlo kernel mean embeddings under an arbitrary sampler ``pi``.

    ``w_j`` is the average of ``k(x_j*, x)`` over n nodes drawn from pi; the
    double integral uses a second, independent batch of n nodes so that the
    pairwise average stays unbiased. Deterministic given the seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    nodes = _draw(pi, rng, n)
    nodes2 = _draw(pi, rng, n)
    if gp.m > 0:
        w = np.mean(kernels.gram_matrix(gp.kernel, gp.data.inputs, nodes), axis=1)
    else:
        w = np.zeros(0)
    di = _pair_mean_kernel(gp.kernel, nodes, nodes2)
    return EmbeddingVector(w, di, "monte-carlo", node_count=n)


def prior_mean_integral(prior_mean, pi=None, nodes=None):
    """Integral of the prior mean against pi.

    Exact for Zero/Constant/Linear prior means whenever pi exposes marginal
    means (any IndependentProduct); otherwise falls back to averaging over
    the supplied Monte Carlo nodes.
    """
    if prior_mean.family == "Zero":
        return 0.0
    if isinstance(pi, IndependentProduct):
        c = np.asarray(prior_mean.coefficients)
        if prior_mean.family == "Constant":
            return float(c[0])
        return float(c[0] + c[1:] @ pi.means)
    if nodes is not None:
        return float(np.mean(prior_mean(nodes)))
    raise ValueError("need pi marginals or MC nodes to integrate a non-zero prior mean")


def bq_estimate(gp, embedding, pi=None, prior_mean_nodes=None):
    """Gaussian integral estimate from a fitted GP and its embeddings."""
    pm_int = prior_mean_integral(gp.prior_mean, pi, prior_mean_nodes)
    if gp.m == 0:
        return IntegralEstimate(pm_int, max(embedding.double_integral, 0.0), embedding.method, 0)
    mean = pm_int + float(embedding.w @ gp.alpha)
    v = solve_triangular(gp.factor, embedding.w, lower=True)
    var = embedding.double_integral - float(v @ v)
    return IntegralEstimate(mean, max(var, 0.0), embedding.method, gp.m)


def _embedding_values(spec, points, pi, nodes):
    """w(x) = int k(x, x') pi(x') dx' at arbitrary points."""
    points = np.atleast_2d(points)
    if nodes is None:
        _require_se_isotropic(spec)
        ell2 = spec.length_scales[0] ** 2
        d = points.shape[1]
        sq = np.sum(points * points, axis=1)
        return (
            spec.signal_variance
            * (ell2 / (ell2 + 1.0)) ** (d / 2.0)
            * np.exp(-sq / (2.0 * (ell2 + 1.0)))
        )
    return np.mean(kernels.gram_matrix(spec, points, nodes), axis=1)


def bq_design_select(gp, pool, pi, n_mc=4096, seed=0):
    """Pick the pool point whose addition most reduces the integral variance.

    Maximizes ``U(x) = w_{m+1}' K_{m+1}^-1 w_{m+1}``; by the block-inverse
    identity this is the current quadratic form plus

        (w(x) - k(x, X*)' K^-1 w)^2 / (sigma2(x) + nu^2),

    so only the candidate-dependent gain needs scoring. Function values are
    never required. Candidates that duplicate a design point with zero noise
    are excluded.
    """
    pts = np.atleast_2d(pool.points if hasattr(pool, "points") else pool)
    if pts.shape[0] == 0:
        raise ValueError("empty candidate pool")
    analytic = is_standard_gaussian(pi) and gp.kernel.family == "SE" and len(gp.kernel.length_scales) == 1
    nodes = None if analytic else _draw(pi, np.random.default_rng(seed), n_mc)

    w_cand = _embedding_values(gp.kernel, pts, pi, nodes)
    _, var_cand = gp.predict_batch(pts)
    denom = var_cand + gp.kernel.noise_variance
    if gp.m == 0:
        kdiag = kernels.kernel_diag(gp.kernel, pts) + gp.kernel.noise_variance
        gain = w_cand**2 / kdiag
    else:
        w_design = _embedding_values(gp.kernel, gp.data.inputs, pi, nodes)
        v_w = solve_triangular(gp.factor, w_design, lower=True)
        V_c = solve_triangular(gp.factor, gp._cross(pts), lower=True)
        cross = V_c.T @ v_w  # k(x, X*)' K^-1 w per candidate
        gain = (w_cand - cross) ** 2 / np.where(denom > 0, denom, np.inf)
    ok = denom > 1e-14 * max(1.0, gp.kernel.signal_variance)
    gain = np.where(ok, gain, -np.inf)
    if not np.any(np.isfinite(gain)):
        raise ValueError("all candidates duplicate the design with zero noise")
    return int(np.argmax(gain))


def importance_reweight(f, pi_density, q):
    """Rewrite ``int f pi`` as ``int f' q`` with ``f' = f * pi / q``.

    ``q`` must be a strictly positive (Gaussian) density wherever pi has
    mass; an underflowing q at an evaluation point raises immediately rather
    than silently returning inf.
    """
    pi_pdf = pi_density.pdf if hasattr(pi_density, "pdf") else pi_density
    q_pdf = q.pdf if hasattr(q, "pdf") else q

    def reweighted(x):
        qv = np.asarray(q_pdf(x), dtype=float)
        if np.any(qv < 1e-300):
            raise ValueError("importance density q underflowed at an evaluation point")
        return np.asarray(f(x), dtype=float) * np.asarray(pi_pdf(x), dtype=float) / qv

    return reweighted
