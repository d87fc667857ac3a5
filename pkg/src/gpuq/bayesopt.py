"""Bayesian optimization with EI / PI / UCB acquisitions and PoF constraints.

The loop follows the standard scheme: space-filling initial design, then
refit -> acquire -> evaluate until the budget is spent. Acquisition is
maximized over a seeded Latin-hypercube candidate pool refreshed each
iteration, which keeps the method derivative-free and deterministic.
Maximization convention throughout; feed a negated objective to minimize.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import design
from .errors import ConditioningError, FittingError
from .gp import Dataset, PriorMean, fit_hyperparameters
from .kernels import KernelSpec
from .stats import norm_cdf, norm_pdf


@dataclass(frozen=True)
class AcquisitionSpec:
    """Acquisition kind plus exploration and constraint-handling knobs."""

    kind: str = "EI"  # EI | PI | UCB
    xi: float = 0.0
    constraint_mode: str = "None"  # None | ProductPoF | PoFThreshold
    epsilon: float = 0.5

    def __post_init__(self):
        if self.kind not in ("EI", "PI", "UCB"):
            raise ValueError("kind must be EI, PI or UCB")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")
        if self.constraint_mode not in ("None", "ProductPoF", "PoFThreshold"):
            raise ValueError("unknown constraint mode")
        if self.constraint_mode == "PoFThreshold" and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")


@dataclass
class BoState:
    """Current state of a Bayesian-optimization run."""

    objective_gp: object
    constraint_gps: List[object]
    x_best: Optional[np.ndarray]
    y_best: Optional[float]
    history: List[dict] = field(default_factory=list)
    diagnostic: Optional[str] = None

    @property
    def n_evals(self):
        return len(self.history)


def ei(u, sigma, y_best):
    """Expected improvement over ``y_best`` of N(u, sigma^2); zero-noise safe."""
    u = np.asarray(u, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    imp = u - y_best
    out = np.maximum(imp, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = imp[pos] / sigma[pos]
        out = np.array(out, dtype=float)
        out[pos] = imp[pos] * norm_cdf(z) + sigma[pos] * norm_pdf(z)
    return out


def pi(u, sigma, y_best, xi=0.0):
    """Probability of improving on ``y_best`` by at least ``xi``."""
    u = np.asarray(u, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    imp = u - y_best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), np.nan)
    return np.where(sigma > 0, norm_cdf(z), (imp >= 0).astype(float))


def ucb(u, sigma, xi):
    """Upper confidence bound u + xi * sigma."""
    if np.any(np.asarray(sigma) < 0) or xi < 0:
        raise ValueError("ucb requires sigma >= 0 and xi >= 0")
    return np.asarray(u, dtype=float) + xi * np.asarray(sigma, dtype=float)


def pof(u_g, sigma_g):
    """Probability of feasibility P[g <= 0] = Phi(-u_g / sigma_g)."""
    u_g = np.asarray(u_g, dtype=float)
    sigma_g = np.asarray(sigma_g, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma_g > 0, -u_g / np.where(sigma_g > 0, sigma_g, 1.0), np.nan)
    return np.where(sigma_g > 0, norm_cdf(z), (u_g <= 0).astype(float))


def _pool_pof(state, pts):
    total = np.ones(pts.shape[0])
    for cgp in state.constraint_gps:
        m, v = cgp.predict_batch(pts)
        total = total * pof(m, np.sqrt(v))
    return total


def acquire(state, pool, spec):
    """Index of the next query point in the pool.

    ProductPoF multiplies the acquisition by the joint feasibility
    probability; PoFThreshold maximizes the acquisition over candidates with
    joint PoF >= epsilon, falling back to the most-feasible candidate when
    that set is empty. Without a feasible incumbent, EI/PI degenerate to
    pure feasibility search. Ties break to the lowest index.
    """
    pts = np.atleast_2d(pool.points if hasattr(pool, "points") else pool)
    if pts.shape[0] == 0:
        raise ValueError("empty candidate pool")
    feas = _pool_pof(state, pts)

    if state.y_best is None and spec.kind in ("EI", "PI"):
        return int(np.argmax(feas))

    mean, var = state.objective_gp.predict_batch(pts)
    sig = np.sqrt(var)
    if spec.kind == "EI":
        a = ei(mean, sig, state.y_best)
    elif spec.kind == "PI":
        a = pi(mean, sig, state.y_best, spec.xi)
    else:
        a = ucb(mean, sig, spec.xi)

    if spec.constraint_mode == "None" or not state.constraint_gps:
        return int(np.argmax(a))
    if spec.constraint_mode == "ProductPoF":
        return int(np.argmax(a * feas))
    ok = feas >= spec.epsilon
    if not np.any(ok):
        return int(np.argmax(feas))
    masked = np.where(ok, a, -np.inf)
    return int(np.argmax(masked))


def _default_template(X, y, noisy):
    scales = np.std(X, axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    sv = float(np.var(y)) if np.var(y) > 0 else 1.0
    noise = 1e-4 * sv if noisy else 0.0
    return KernelSpec("SE", sv, tuple(scales.tolist()), noise_variance=noise)


def _update_incumbent(state, X, y, G, noisy):
    feasible = np.all(G <= 0, axis=1) if G.size else np.ones(len(y), dtype=bool)
    if not np.any(feasible):
        state.x_best, state.y_best = None, None
        return
    idx = np.flatnonzero(feasible)
    if noisy and state.objective_gp is not None:
        # raw noisy maxima bias y_best upward; rank by posterior mean instead
        vals, _ = state.objective_gp.predict_batch(X[idx])
    else:
        vals = y[idx]
    best = idx[int(np.argmax(vals))]
    state.x_best = X[best].copy()
    state.y_best = float(np.max(vals))


def bo_run(
    objective,
    constraints,
    domain,
    m0,
    M,
    spec,
    pool_size=2048,
    seed=0,
    noisy=False,
    kernel_template=None,
    restarts=1,
):
    """Run Bayesian optimization under an evaluation budget of M points.

    ``objective`` and each constraint take an (n, d) array and return n
    values (constraints feasible at <= 0). The initial m0 points come from a
    Latin hypercube over the domain; every subsequent point maximizes the
    acquisition over a fresh seeded LHS pool. With ``noisy=True`` the
    observation-noise variance is fitted as a hyperparameter and the
    returned incumbent is chosen by posterior mean instead of raw best
    observation. A fitting failure mid-run returns the state with its
    ``diagnostic`` set and the history intact.
    """
    if m0 < 2 or M < m0:
        raise ValueError("need m0 >= 2 and M >= m0")
    constraints = list(constraints or [])
    rng = np.random.default_rng(seed)

    X = design.lhs_sample(domain, m0, seed).points
    y = np.asarray(objective(X), dtype=float).ravel()
    G = (
        np.column_stack([np.asarray(c(X), dtype=float).ravel() for c in constraints])
        if constraints
        else np.zeros((m0, 0))
    )

    state = BoState(None, [], None, None, [])
    prior = PriorMean("Constant")

    def log_history():
        state.history.clear()
        best = -np.inf
        for i in range(len(y)):
            feas = bool(np.all(G[i] <= 0)) if G.size else True
            if feas:
                best = max(best, y[i])
            state.history.append(
                {
                    "iter": i,
                    "x": X[i].copy(),
                    "y": float(y[i]),
                    "constraints": G[i].copy(),
                    "is_feasible": feas,
                    "y_best_so_far": best if best > -np.inf else np.nan,
                }
            )

    it = 0
    while True:
        template = kernel_template or _default_template(X, y, noisy)
        try:
            _, ogp = fit_hyperparameters(
                template, prior, Dataset(X, y), objective="MLE",
                restarts=restarts, seed=seed + 31 * it,
                include_noise=noisy or None,
            )
            cgps = []
            for ci in range(G.shape[1]):
                ct = kernel_template or _default_template(X, G[:, ci], noisy)
                _, cgp = fit_hyperparameters(
                    ct, prior, Dataset(X, G[:, ci]), objective="MLE",
                    restarts=restarts, seed=seed + 31 * it + 7 + ci,
                    include_noise=noisy or None,
                )
                cgps.append(cgp)
        except (ConditioningError, FittingError) as exc:
            state.diagnostic = f"fitting failure at iteration {it}: {exc}"
            log_history()
            _update_incumbent(state, X, y, G, noisy)
            return state

        state.objective_gp = ogp
        state.constraint_gps = cgps
        _update_incumbent(state, X, y, G, noisy)

        if len(y) >= M:
            break

        pool = design.lhs_sample(domain, pool_size, rng.integers(2**63))
        nxt = acquire(state, pool, spec)
        x_new = pool.points[nxt : nxt + 1]
        y_new = float(np.asarray(objective(x_new), dtype=float).ravel()[0])
        g_new = (
            np.array([float(np.asarray(c(x_new), dtype=float).ravel()[0]) for c in constraints])
            if constraints
            else np.zeros(0)
        )
        X = np.vstack([X, x_new])
        y = np.append(y, y_new)
        G = np.vstack([G, g_new]) if G.size or g_new.size else np.zeros((len(y), 0))
        it += 1

    log_history()
    return state
