"""One-dimensional input distributions and independent products of them.

These are deliberately small: enough to sample with a seeded
``numpy.random.Generator``, evaluate log densities, and map quantiles.
Heavier distributional machinery belongs to scipy; the UQ drivers only ever
need independent Normal / Uniform / PointMass marginals.
"""

from dataclasses import dataclass

import numpy as np

from .stats import norm_logpdf, norm_ppf


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be >= 0")

    @property
    def var(self):
        return self.std**2

    def sample(self, rng, n):
        return self.mean + self.std * rng.standard_normal(n)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.std == 0:
            return np.where(x == self.mean, 0.0, -np.inf)
        z = (x - self.mean) / self.std
        return norm_logpdf(z) - np.log(self.std)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        if self.std == 0:
            return self.mean
        return self.mean + self.std * norm_ppf(p)


@dataclass(frozen=True)
class Uniform:
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("need low < high")

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def var(self):
        return (self.high - self.low) ** 2 / 12.0

    def sample(self, rng, n):
        return rng.uniform(self.low, self.high, n)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.low) & (x <= self.high)
        return np.where(inside, -np.log(self.high - self.low), -np.inf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        return self.low + p * (self.high - self.low)


@dataclass(frozen=True)
class PointMass:
    value: float = 0.0

    @property
    def mean(self):
        return self.value

    @property
    def var(self):
        return 0.0

    def sample(self, rng, n):
        return np.full(n, self.value)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x == self.value, 0.0, -np.inf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, p):
        return self.value


class IndependentProduct:
    """Product distribution of independent 1-D marginals.

    Parameters
    ----------
    marginals : sequence
        One distribution object per input dimension.
    """

    def __init__(self, marginals):
        self.marginals = list(marginals)
        if not self.marginals:
            raise ValueError("need at least one marginal")

    @property
    def dim(self):
        return len(self.marginals)

    @property
    def means(self):
        return np.array([m.mean for m in self.marginals])

    @property
    def variances(self):
        return np.array([m.var for m in self.marginals])

    def sample(self, rng, n):
        """Draw an (n, d) matrix of independent rows.

        Sampling is inverse-CDF on a single uniform block, so the stream of
        random numbers consumed by dimension i does not depend on the other
        marginals (permuting labels permutes columns exactly).
        """
        u = rng.random((n, self.dim))
        cols = [m.quantile(u[:, i]) for i, m in enumerate(self.marginals)]
        return np.column_stack([np.broadcast_to(c, (n,)) for c in cols])

    def logpdf(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        for i, m in enumerate(self.marginals):
            out = out + m.logpdf(x[:, i])
        return out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile_box(self, eps=1e-6):
        """Axis-aligned box spanning the [eps, 1-eps] marginal quantiles."""
        lo = [m.quantile(eps) for m in self.marginals]
        hi = [m.quantile(1.0 - eps) for m in self.marginals]
        return np.column_stack([lo, hi])


def standard_gaussian(d):
    """Standard multivariate normal as an IndependentProduct."""
    return IndependentProduct([Normal(0.0, 1.0) for _ in range(d)])
