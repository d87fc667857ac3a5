"""Variance-based (Sobol) sensitivity analysis.

Pick-freeze Monte Carlo estimators over paired sample matrices A and B with
column-swapped hybrids; the GP variant substitutes the surrogate mean for
the model and spends zero model evaluations. The MUSIC utility directs
active refinement toward points that matter for the index estimates.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import design
from .distributions import IndependentProduct
from .errors import DegenerateOutputError
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec

_CLAMP_LO, _CLAMP_HI = -0.1, 1.1


@dataclass(frozen=True)
class PickFreezeMatrices:
    """Independent sample matrices A and B (both n x d)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape:
            raise ValueError("A and B must have equal shapes")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    def ab(self, i):
        """A with column i replaced by B's column i."""
        out = self.A.copy()
        out[:, i] = self.B[:, i]
        return out


@dataclass(frozen=True)
class SobolResult:
    """First-order and total indices plus bookkeeping.

    Reported indices are clamped to [-0.1, 1.1] (Monte Carlo noise can exit
    [0, 1]); the raw values are kept in ``diagnostics``.
    """

    first_order: np.ndarray
    total: np.ndarray
    total_variance: float
    n_evals: int
    ci_half_width: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "first_order": list(self.first_order),
            "total": list(self.total),
            "variance": self.total_variance,
            "n_evals": self.n_evals,
        }
        if self.ci_half_width is not None:
            out["ci"] = list(self.ci_half_width)
        return out


def pick_freeze(marginals, n, seed):
    """Two independent (n, d) sample matrices from the product of marginals."""
    if n < 2:
        raise ValueError("n must be >= 2")
    pi = marginals if isinstance(marginals, IndependentProduct) else IndependentProduct(marginals)
    rng = np.random.default_rng(seed)
    return PickFreezeMatrices(pi.sample(rng, n), pi.sample(rng, n))


def _indices_from_outputs(y_a, y_b, y_ab_list, n_evals, bootstrap=0, seed=0):
    n = y_a.shape[0]
    mean_a = np.mean(y_a)
    v_y = float(np.mean(y_a**2) - mean_a**2)
    # treat round-off-scale variance of a constant output as degenerate
    if v_y <= 1e-12 * (1.0 + mean_a**2):
        raise DegenerateOutputError("output variance is not positive; indices undefined")

    d = len(y_ab_list)
    first = np.empty(d)
    total = np.empty(d)
    for i, y_ab in enumerate(y_ab_list):
        v_i = float(np.mean(y_b * (y_ab - y_a)))
        v_noti = float(np.mean(y_a * y_ab) - mean_a**2)
        first[i] = v_i / v_y
        total[i] = 1.0 - v_noti / v_y

    ci = None
    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        fo = np.empty((bootstrap, d))
        to = np.empty((bootstrap, d))
        for b in range(bootstrap):
            rows = rng.integers(0, n, size=n)
            ya, yb = y_a[rows], y_b[rows]
            ma = np.mean(ya)
            vy = np.mean(ya**2) - ma**2
            if vy <= 0:
                fo[b] = np.nan
                to[b] = np.nan
                continue
            for i, y_ab in enumerate(y_ab_list):
                yab = y_ab[rows]
                fo[b, i] = np.mean(yb * (yab - ya)) / vy
                to[b, i] = 1.0 - (np.mean(ya * yab) - ma**2) / vy
        lo_f = np.nanpercentile(fo, 2.5, axis=0)
        hi_f = np.nanpercentile(fo, 97.5, axis=0)
        ci = (hi_f - lo_f) / 2.0

    diagnostics = {"first_order_raw": first.copy(), "total_raw": total.copy()}
    return SobolResult(
        first_order=np.clip(first, _CLAMP_LO, _CLAMP_HI),
        total=np.clip(total, _CLAMP_LO, _CLAMP_HI),
        total_variance=v_y,
        n_evals=n_evals,
        ci_half_width=ci,
        diagnostics=diagnostics,
    )


def sobol_mc(f, matrices, bootstrap=200, seed=0):
    """Pick-freeze Monte Carlo Sobol indices of a model evaluator.

    Costs exactly (d + 2) n model evaluations. Bootstrap confidence
    half-widths use row resampling (set ``bootstrap=0`` to skip).
    """
    y_a = np.asarray(f(matrices.A), dtype=float).ravel()
    y_b = np.asarray(f(matrices.B), dtype=float).ravel()
    y_ab = [np.asarray(f(matrices.ab(i)), dtype=float).ravel() for i in range(matrices.d)]
    n_evals = (matrices.d + 2) * matrices.n
    return _indices_from_outputs(y_a, y_b, y_ab, n_evals, bootstrap, seed)


def sobol_gp(gp, matrices, bootstrap=200, seed=0):
    """Sobol indices of the GP posterior mean; zero true-model evaluations."""
    def u(X):
        return gp.predict_batch(X)[0]

    y_a = u(matrices.A)
    y_b = u(matrices.B)
    y_ab = [u(matrices.ab(i)) for i in range(matrices.d)]
    return _indices_from_outputs(y_a, y_b, y_ab, 0, bootstrap, seed)


def conditional_moments(gp, marginals, i, xi_value, n_inner, seed):
    """Mean and variance of the GP mean over x_{-i}, with x_i frozen.

    Inputs are independent, so the conditional distribution of the other
    coordinates is just their marginal product; both moments are estimated
    from n_inner Monte Carlo draws of x_{-i}.
    """
    if n_inner < 2:
        raise ValueError("n_inner must be >= 2")
    pi = marginals if isinstance(marginals, IndependentProduct) else IndependentProduct(marginals)
    rng = np.random.default_rng(seed)
    X = pi.sample(rng, n_inner)
    X[:, i] = xi_value
    u = gp.predict_batch(X)[0]
    mu = float(np.mean(u))
    return mu, max(float(np.mean(u**2) - mu**2), 0.0)


def music_utility(gp, x, training_data, weights, prefactor="D1", n_inner=64, seed=0, marginals=None):
    """Utility directing refinement toward uncertain Sobol-index territory.

    ``MUSIC(x) = D(x) . M(x)`` where M_i is the per-dimension expected
    improvement for global fit of the conditional mean,

        M_i = (mu_i(x_i) - mu_i(x_i*))^2 + upsilon_i^2(x_i),

    with x* the nearest training point, and D is a distance prefactor:
    D1_i = w_i |x_i - x_i*| or D2_i = w_i ||x - x*||^2. The same inner node
    seed is shared between mu_i(x_i) and the reference mu_i(x_i*).
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != d or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    if prefactor not in ("D1", "D2"):
        raise ValueError("prefactor must be 'D1' or 'D2'")
    if marginals is None:
        raise ValueError("marginals are required to integrate out x_{-i}")

    diff = training_data.inputs - x
    nearest = int(np.argmin(np.sum(diff * diff, axis=1)))
    x_star = training_data.inputs[nearest]

    if prefactor == "D1":
        D = weights * np.abs(x - x_star)
    else:
        D = weights * float(np.sum((x - x_star) ** 2))

    M = np.empty(d)
    for i in range(d):
        mu_x, ups2 = conditional_moments(gp, marginals, i, x[i], n_inner, seed + i)
        mu_ref, _ = conditional_moments(gp, marginals, i, x_star[i], n_inner, seed + i)
        M[i] = (mu_x - mu_ref) ** 2 + ups2
    return float(D @ M)


def _music_scores(gp, pool, training_data, weights, prefactor, n_inner, seed, pi):
    """Vectorized MUSIC over a pool (shared inner nodes per dimension)."""
    n, d = pool.shape
    rng = np.random.default_rng(seed)
    diff = pool[:, None, :] - training_data.inputs[None, :, :]
    nearest = np.argmin(np.sum(diff * diff, axis=2), axis=1)
    x_star = training_data.inputs[nearest]

    if prefactor == "D1":
        D = weights[None, :] * np.abs(pool - x_star)
    else:
        D = weights[None, :] * np.sum((pool - x_star) ** 2, axis=1)[:, None]

    M = np.empty((n, d))
    for i in range(d):
        base = pi.sample(rng, n_inner)
        both = np.concatenate([pool[:, i], x_star[:, i]])
        X = np.repeat(base[None, :, :], both.size, axis=0)
        X[:, :, i] = both[:, None]
        u = gp.predict_batch(X.reshape(-1, d))[0].reshape(both.size, n_inner)
        mu = np.mean(u, axis=1)
        ups2 = np.maximum(np.mean(u**2, axis=1) - mu**2, 0.0)
        M[:, i] = (mu[:n] - mu[n:]) ** 2 + ups2[:n]
    return np.sum(D * M, axis=1)


def active_sa_run(
    f,
    marginals,
    m0,
    M,
    n,
    weights=None,
    prefactor="D1",
    seed=0,
    pool_size=128,
    n_inner=64,
    restarts=2,
    bootstrap=200,
):
    """Actively refined GP-based Sobol estimation.

    LHS initial design over the marginal quantile box, then MUSIC-guided
    refinement until M model evaluations; the final indices come from
    :func:`sobol_gp` on fresh pick-freeze matrices of size n.

    Returns ``(SobolResult, audit)`` where audit lists the actively selected
    points (length M - m0).
    """
    if M < m0:
        raise ValueError("M must be >= m0")
    pi = marginals if isinstance(marginals, IndependentProduct) else IndependentProduct(marginals)
    d = pi.dim
    weights = np.full(d, 1.0 / d) if weights is None else np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    rng = np.random.default_rng(seed)

    box = design.Domain.from_quantiles(pi, 1e-6)
    X = design.lhs_sample(box, m0, seed).points
    y = np.asarray(f(X), dtype=float).ravel()

    def refit(step):
        scales = np.std(X, axis=0)
        scales = np.where(scales > 0, scales, 1.0)
        sv = float(np.var(y)) if np.var(y) > 0 else 1.0
        template = KernelSpec("SE", sv, tuple(scales.tolist()))
        return fit_hyperparameters(
            template, PriorMean("Constant"), Dataset(X, y),
            objective="MLE", restarts=restarts, seed=seed + step,
        )[1]

    gp = refit(0)
    audit = []
    while X.shape[0] < M:
        pool = pi.sample(rng, pool_size)
        scores = _music_scores(
            gp, pool, gp.data, weights, prefactor, n_inner, int(rng.integers(2**63)), pi
        )
        nxt = int(np.argmax(scores))
        x_new = pool[nxt]
        y_new = float(np.asarray(f(x_new.reshape(1, -1)), dtype=float).ravel()[0])
        X = np.vstack([X, x_new])
        y = np.append(y, y_new)
        audit.append({"x": x_new.copy(), "score": float(scores[nxt]), "y": y_new})
        gp = refit(X.shape[0])

    matrices = pick_freeze(pi, n, seed + 999_331)
    result = sobol_gp(gp, matrices, bootstrap=bootstrap, seed=seed)
    result = SobolResult(
        first_order=result.first_order,
        total=result.total,
        total_variance=result.total_variance,
        n_evals=M,
        ci_half_width=result.ci_half_width,
        diagnostics=result.diagnostics,
    )
    return result, audit
