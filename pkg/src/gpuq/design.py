"""Space-filling designs and active-learning point selection.

Selection is pool-based: every criterion scores a finite candidate set and
returns the index of the winner (ties to the lowest index), which keeps the
module solver-free and deterministic.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConditioningError


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, optionally with a weight distribution over it.

    ``pi=None`` means uniform weighting; otherwise ``pi`` is an
    :class:`gpuq.distributions.IndependentProduct` whose samples are used as
    integration nodes by criteria that integrate over the domain.
    """

    bounds: np.ndarray
    pi: Optional[object] = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must be a (d, 2) array of (lower, upper) pairs")
        if not np.all(np.isfinite(b)):
            raise ValueError("bounds must be finite")
        if not np.all(b[:, 0] < b[:, 1]):
            raise ValueError("each lower bound must be below its upper bound")
        object.__setattr__(self, "bounds", b)
        if self.pi is not None and self.pi.dim != b.shape[0]:
            raise ValueError("weight distribution dimension does not match bounds")

    @property
    def d(self):
        return self.bounds.shape[0]

    @property
    def lower(self):
        return self.bounds[:, 0]

    @property
    def upper(self):
        return self.bounds[:, 1]

    def contains(self, X):
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    @staticmethod
    def from_quantiles(pi, eps=1e-6):
        """Box spanning the [eps, 1-eps] marginal quantiles of ``pi``.

        Dimensions with zero spread (point masses) are padded by a tiny
        width so the box stays valid.
        """
        box = pi.quantile_box(eps)
        widths = box[:, 1] - box[:, 0]
        pad = np.maximum(1e-9, 1e-9 * np.abs(box[:, 0]))
        box[:, 0] = np.where(widths <= 0, box[:, 0] - pad, box[:, 0])
        box[:, 1] = np.where(widths <= 0, box[:, 1] + pad, box[:, 1])
        return Domain(box)

    def sample_nodes(self, n, seed):
        """Integration nodes from the weight distribution (uniform default)."""
        rng = np.random.default_rng(seed)
        if self.pi is None:
            return self.lower + rng.random((n, self.d)) * (self.upper - self.lower)
        return self.pi.sample(rng, n)


@dataclass(frozen=True)
class CandidatePool:
    """Finite pool of candidate points plus how it was generated."""

    points: np.ndarray
    provenance: str = "MonteCarlo"

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", P)

    @property
    def n(self):
        return self.points.shape[0]


def lhs_sample(domain, n, seed):
    """Latin hypercube sample of the domain box.

    Every 1-D projection hits each of the n equal-width strata exactly once;
    positions within strata are uniform. Deterministic given the seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    d = domain.d
    u = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        u[:, j] = (perm + rng.random(n)) / n
    pts = domain.lower + u * (domain.upper - domain.lower)
    return CandidatePool(pts, "LHS")


def alm_select(gp, pool):
    """Index of the pool point with the largest posterior variance."""
    if pool.n == 0:
        raise ValueError("empty candidate pool")
    _, var = gp.predict_batch(pool.points)
    return int(np.argmax(var))


def variance_after_add(gp, x_new):
    """Posterior-variance function of the design augmented with ``x_new``.

    The response at ``x_new`` does not affect the variance, so the update is
    a rank-one downdate of the current posterior:

        sigma2_new(x) = sigma2(x) - cov(x, x_new)^2 / (sigma2(x_new) + nu^2)

    Returns a vectorized evaluator over (n, d) arrays.
    """
    x_new = np.asarray(x_new, dtype=float).reshape(1, -1)
    _, var_new = gp.predict_batch(x_new)
    denom = float(var_new[0]) + gp.kernel.noise_variance
    if denom <= 1e-14 * max(1.0, gp.kernel.signal_variance):
        raise ConditioningError("new point duplicates the design with zero noise")

    def evaluator(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, var = gp.predict_batch(X)
        c = gp.cov_matrix(X, x_new)[:, 0]
        return np.maximum(var - c * c / denom, 0.0)

    return evaluator


def _updated_variance_matrix(gp, pool_points, nodes):
    """Variance at each node after adding each candidate: (n_nodes, n_cand).

    Columns where the candidate duplicates the design (zero denominator)
    are set to +inf so those candidates are never preferred.
    """
    _, var_nodes = gp.predict_batch(nodes)
    _, var_cand = gp.predict_batch(pool_points)
    denom = var_cand + gp.kernel.noise_variance
    C = gp.cov_matrix(nodes, pool_points)
    ok = denom > 1e-14 * max(1.0, gp.kernel.signal_variance)
    out = np.full((nodes.shape[0], pool_points.shape[0]), np.inf)
    if np.any(ok):
        out[:, ok] = np.maximum(var_nodes[:, None] - C[:, ok] ** 2 / denom[ok], 0.0)
    return out


def alc_select(gp, pool, integration_nodes):
    """Index minimizing the integrated posterior variance after the update.

    The node set is shared across candidates within one call (common random
    numbers), so comparisons are noise-free.
    """
    nodes = np.atleast_2d(np.asarray(integration_nodes, dtype=float))
    if nodes.shape[0] == 0:
        raise ValueError("empty integration node set")
    if pool.n == 0:
        raise ValueError("empty candidate pool")
    scores = np.mean(_updated_variance_matrix(gp, pool.points, nodes), axis=0)
    return int(np.argmin(scores))


def eigf_select(gp, pool, training_data):
    """Expected-improvement-for-global-fit selection.

    Scores ``(u(x) - y(x_dagger))^2 + sigma2(x)`` where ``x_dagger`` is the
    nearest training point (Euclidean; ties to the lowest training index).
    """
    if training_data.m == 0:
        raise ValueError("EIGF needs a non-empty training set")
    if pool.n == 0:
        raise ValueError("empty candidate pool")
    mean, var = gp.predict_batch(pool.points)
    diff = pool.points[:, None, :] - training_data.inputs[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    nearest = np.argmin(d2, axis=1)
    y_near = training_data.responses[nearest]
    scores = (mean - y_near) ** 2 + var
    return int(np.argmax(scores))
