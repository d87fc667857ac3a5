"""Standard-normal helpers used throughout the toolkit.

Vectorized wrappers around ``scipy.special``; all accept scalars or arrays.
"""

import numpy as np
from scipy import special

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_cdf(x):
    """Standard normal CDF, via the complementary error function."""
    x = np.asarray(x, dtype=float)
    return 0.5 * special.erfc(-x / _SQRT2)


def norm_ppf(p):
    """Standard normal quantile function."""
    return special.ndtri(p)


def norm_logpdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - 0.5 * np.log(2.0 * np.pi)
