"""One-time generators for the frozen oracle values used by the test suite.

Run ``python3 -m tests.make_frozen_oracles`` from the repository root to
recompute everything (several minutes); paste the printed dict into
``tests/frozen_oracles.py``. Each entry records its generator arguments so
the numbers are reproducible bit for bit.
"""

import numpy as np

from gpuq.pendulum import pendulum_final_state
from gpuq.stats import norm_cdf

GRID_SEED = 20250810
N_BVN = 100_000_000  # total MC samples per grid point (antithetic pairs)
CHUNK = 2_000_000


def bvn_grid():
    """125-point (h, k, rho) grid for the bivariate-normal CDF check."""
    rng = np.random.default_rng(GRID_SEED)
    hs = np.sort(rng.uniform(-2.5, 2.5, 5))
    ks = np.sort(rng.uniform(-2.5, 2.5, 5))
    rhos = np.sort(rng.uniform(-0.95, 0.95, 5))
    return hs, ks, rhos


N_STRATA = 100_000
PER_STRATUM = N_BVN // N_STRATA
STRATA_CHUNK = 5_000


def bvn_mc_oracle():
    """Stratified MC of P[Z1<=h, Z2<=k] at 1e8 samples per grid point.

    Rao-Blackwellize over Z2: P = E_z[1{z<=k} Phi((h - rho z)/c)] with
    z ~ N(0, 1), then stratify z on 1e5 equal-probability strata (1e3 draws
    each). A raw-indicator estimator at 1e8 samples has sigma up to 5e-5 --
    the size of the acceptance tolerance -- while stratification pushes the
    standard error below 1e-6. The strata are ordered, so the indicator
    cut z <= k is a prefix: accumulate per-stratum block sums of
    Phi((h - rho z)/c) and resolve each k by block prefix plus a partial
    sum inside its boundary stratum. Draws are shared across the (h, k)
    grid for each rho (common random numbers).
    """
    from gpuq.stats import norm_ppf

    hs, ks, rhos = bvn_grid()
    out = np.zeros((5, 5, 5))
    for r, rho in enumerate(rhos):
        rng = np.random.default_rng(GRID_SEED + 100 + r)
        c = np.sqrt(1.0 - rho * rho)
        block_sums = np.zeros((5, N_STRATA))
        partials = np.zeros((5, 5))  # (h, k) partial sums in the boundary stratum
        k_stratum = np.empty(5, dtype=int)
        for s0 in range(0, N_STRATA, STRATA_CHUNK):
            s_idx = np.arange(s0, s0 + STRATA_CHUNK)
            u = (s_idx[:, None] + rng.random((STRATA_CHUNK, PER_STRATUM))) / N_STRATA
            z = norm_ppf(u)
            for i, h in enumerate(hs):
                vals = norm_cdf((h - rho * z) / c)
                block_sums[i, s0 : s0 + STRATA_CHUNK] = np.sum(vals, axis=1)
                for j, k in enumerate(ks):
                    st = int(norm_cdf(k) * N_STRATA)  # stratum containing k
                    k_stratum[j] = st
                    if s0 <= st < s0 + STRATA_CHUNK:
                        row = st - s0
                        partials[i, j] = np.sum(vals[row][z[row] <= k])
        cum = np.cumsum(block_sums, axis=1)
        for i in range(5):
            for j in range(5):
                st = k_stratum[j]
                below = cum[i, st - 1] if st > 0 else 0.0
                out[r, i, j] = (below + partials[i, j]) / (N_STRATA * PER_STRATUM)
    return out


def pendulum_re_oracle(n=1_000_000, seed=123_001, theta_max=0.23):
    """Direct 1e6-run MC of P[theta(T) >= theta_max] at the default task spec."""
    rng = np.random.default_rng(seed)
    th0 = 0.2 + 0.01 * rng.standard_normal(n)
    L = 1.0 + 0.01 * rng.standard_normal(n)
    g = 9.81 + 0.05 * rng.standard_normal(n)
    p = 0.0
    for i0 in range(0, n, 200_000):
        th, _ = pendulum_final_state(th0[i0:i0 + 200_000], L[i0:i0 + 200_000], g[i0:i0 + 200_000], 2.0, 1e-3)
        p += np.sum(th >= theta_max)
    return p / n


def pendulum_up_oracle(n=100_000, seed=123_002):
    """Direct 1e5-run MC of E[theta(T)] and Var[theta(T)] at the defaults."""
    rng = np.random.default_rng(seed)
    th0 = 0.2 + 0.01 * rng.standard_normal(n)
    L = 1.0 + 0.01 * rng.standard_normal(n)
    g = 9.81 + 0.05 * rng.standard_normal(n)
    th, _ = pendulum_final_state(th0, L, g, 2.0, 1e-3)
    return float(np.mean(th)), float(np.var(th))


def pendulum_sa_oracle(n=100_000, seed=123_003):
    """Direct pick-freeze Sobol indices of theta(T) at the default spec."""
    from gpuq import sensitivity
    from gpuq.distributions import IndependentProduct, Normal

    pi = IndependentProduct([Normal(0.2, 0.01), Normal(1.0, 0.01), Normal(9.81, 0.05)])
    mats = sensitivity.pick_freeze(pi, n, seed)

    def f(X):
        out = np.empty(X.shape[0])
        for i0 in range(0, X.shape[0], 200_000):
            th, _ = pendulum_final_state(X[i0:i0 + 200_000, 0], X[i0:i0 + 200_000, 1], X[i0:i0 + 200_000, 2], 2.0, 1e-3)
            out[i0:i0 + 200_000] = th
        return out

    res = sensitivity.sobol_mc(f, mats, bootstrap=0)
    return list(res.first_order), list(res.total)


if __name__ == "__main__":
    hs, ks, rhos = bvn_grid()
    print("BVN_GRID_H =", repr(hs.tolist()))
    print("BVN_GRID_K =", repr(ks.tolist()))
    print("BVN_GRID_RHO =", repr(rhos.tolist()))
    print("computing bvn mc oracle (~minutes)...")
    vals = bvn_mc_oracle()
    print("BVN_MC =", repr(vals.tolist()))
    print("computing pendulum RE oracle...")
    print("RE_P =", repr(pendulum_re_oracle()))
    print("computing pendulum UP oracle...")
    print("UP_MEAN_VAR =", repr(pendulum_up_oracle()))
    print("computing pendulum SA oracle...")
    print("SA_FIRST_TOTAL =", repr(pendulum_sa_oracle()))
