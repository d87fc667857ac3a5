import numpy as np
import pytest

from gpuq import bayesopt, design
from gpuq.gp import Dataset, PriorMean, fit
from gpuq.kernels import KernelSpec
from gpuq.stats import norm_cdf, norm_pdf

UNIT = design.Domain(np.array([[0.0, 1.0]]))


# ---------------------------------------------------------------------------
# acquisition values
# ---------------------------------------------------------------------------

def test_ei_at_incumbent_mean():
    assert float(bayesopt.ei(1.0, 1.0, 1.0)) == pytest.approx(norm_pdf(0.0), abs=1e-12)


def test_ei_zero_noise_below_incumbent():
    assert float(bayesopt.ei(0.5, 0.0, 1.0)) == 0.0
    assert float(bayesopt.ei(1.5, 0.0, 1.0)) == pytest.approx(0.5)


def test_ei_against_mc_oracle():
    rng = np.random.default_rng(0)
    draws = 1.0 + 0.5 * rng.standard_normal(10_000_000)
    mc = np.mean(np.maximum(draws - 0.0, 0.0))
    assert abs(float(bayesopt.ei(1.0, 0.5, 0.0)) - mc) < 1e-3


def test_ei_nonnegative_everywhere():
    rng = np.random.default_rng(1)
    u = rng.uniform(-3, 3, 200)
    s = rng.uniform(0, 2, 200)
    assert np.all(bayesopt.ei(u, s, 0.3) >= 0.0)


def test_pi_values():
    assert float(bayesopt.pi(1.0, 1.0, 1.0, 0.0)) == pytest.approx(0.5)
    assert float(bayesopt.pi(1.0, 1.0, 0.0, 1e9)) == pytest.approx(0.0)
    assert float(bayesopt.pi(1.0, 2.0, 0.0, 0.5)) == pytest.approx(norm_cdf(0.25), abs=1e-12)
    # sigma = 0 falls back to an indicator
    assert float(bayesopt.pi(1.0, 0.0, 0.5, 0.2)) == 1.0
    assert float(bayesopt.pi(0.5, 0.0, 0.5, 0.2)) == 0.0


def test_ucb_values():
    assert float(bayesopt.ucb(1.0, 2.0, 0.0)) == 1.0
    assert float(bayesopt.ucb(1.0, 0.0, 3.0)) == 1.0
    assert float(bayesopt.ucb(1.0, 2.0, 1.96)) == pytest.approx(4.92)


def test_pof_values():
    assert float(bayesopt.pof(0.0, 1.0)) == pytest.approx(0.5)
    assert float(bayesopt.pof(-3.0, 1.0)) == pytest.approx(norm_cdf(3.0), abs=1e-12)
    u = np.linspace(-2, 2, 50)
    vals = bayesopt.pof(u, 0.7)
    assert np.all(np.diff(vals) < 0)  # decreasing in the constraint mean
    assert float(bayesopt.pof(-0.1, 0.0)) == 1.0
    assert float(bayesopt.pof(0.1, 0.0)) == 0.0


# ---------------------------------------------------------------------------
# acquire
# ---------------------------------------------------------------------------

def _state_1d(noise=0.0):
    X = np.array([[0.2], [0.5], [0.8]])
    y = np.array([0.1, 0.4, 0.2])
    gp = fit(KernelSpec("SE", 0.1, (0.15,), noise_variance=noise), PriorMean("Zero"), Dataset(X, y))
    return bayesopt.BoState(gp, [], X[1].copy(), 0.4, []), X, y


def test_acquire_single_candidate():
    state, _, _ = _state_1d()
    pool = design.CandidatePool(np.array([[0.33]]))
    assert bayesopt.acquire(state, pool, bayesopt.AcquisitionSpec("EI")) == 0


def test_acquire_never_picks_noise_free_incumbent():
    state, X, y = _state_1d()
    rng = np.random.default_rng(2)
    pool_pts = np.vstack([X[1], rng.uniform(0, 1, size=(30, 1))])
    pool = design.CandidatePool(pool_pts)
    idx = bayesopt.acquire(state, pool, bayesopt.AcquisitionSpec("EI"))
    assert idx != 0  # EI at the evaluated incumbent is exactly 0


def test_acquire_constrained_matches_brute_force():
    state, X, y = _state_1d()
    cg = fit(KernelSpec("SE", 0.1, (0.2,)), PriorMean("Zero"),
             Dataset(np.array([[0.1], [0.6], [0.9]]), np.array([-0.2, 0.1, 0.4])))
    state.constraint_gps = [cg]
    rng = np.random.default_rng(3)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(40, 1)))
    spec = bayesopt.AcquisitionSpec("EI", constraint_mode="ProductPoF")
    idx = bayesopt.acquire(state, pool, spec)
    mean, var = state.objective_gp.predict_batch(pool.points)
    a = bayesopt.ei(mean, np.sqrt(var), state.y_best)
    gm, gv = cg.predict_batch(pool.points)
    scores = a * bayesopt.pof(gm, np.sqrt(gv))
    assert idx == int(np.argmax(scores))


def test_product_pof_without_constraints_degenerates():
    state, _, _ = _state_1d()
    rng = np.random.default_rng(4)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(50, 1)))
    a = bayesopt.acquire(state, pool, bayesopt.AcquisitionSpec("EI", constraint_mode="ProductPoF"))
    b = bayesopt.acquire(state, pool, bayesopt.AcquisitionSpec("EI", constraint_mode="None"))
    assert a == b


def test_pof_threshold_falls_back_when_infeasible():
    state, X, y = _state_1d()
    # constraint GP that deems everything infeasible
    cg = fit(KernelSpec("SE", 0.01, (0.3,)), PriorMean("Constant"),
             Dataset(np.array([[0.2], [0.8]]), np.array([5.0, 5.0])))
    state.constraint_gps = [cg]
    rng = np.random.default_rng(5)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(30, 1)))
    spec = bayesopt.AcquisitionSpec("EI", constraint_mode="PoFThreshold", epsilon=0.99)
    idx = bayesopt.acquire(state, pool, spec)
    gm, gv = cg.predict_batch(pool.points)
    feas = bayesopt.pof(gm, np.sqrt(gv))
    assert idx == int(np.argmax(feas))


# ---------------------------------------------------------------------------
# bo_run
# ---------------------------------------------------------------------------

def test_bo_parabola_locates_maximum():
    state = bayesopt.bo_run(
        lambda X: -(np.atleast_2d(X)[:, 0] - 0.3) ** 2, [], UNIT, 4, 15,
        bayesopt.AcquisitionSpec("EI"), seed=0,
    )
    assert abs(state.x_best[0] - 0.3) < 0.02


def test_bo_monotone_objective_reaches_top_decile():
    state = bayesopt.bo_run(
        lambda X: np.atleast_2d(X)[:, 0], [], UNIT, 4, 15,
        bayesopt.AcquisitionSpec("EI"), seed=1,
    )
    assert state.x_best[0] > 0.9


def test_bo_constrained_toy():
    state = bayesopt.bo_run(
        lambda X: np.atleast_2d(X)[:, 0],
        [lambda X: np.atleast_2d(X)[:, 0] - 0.7],
        UNIT, 4, 15,
        bayesopt.AcquisitionSpec("EI", constraint_mode="PoFThreshold", epsilon=0.95),
        seed=0,
    )
    assert 0.6 <= state.x_best[0] <= 0.72


def test_bo_history_budget_and_incumbent_monotonicity():
    state = bayesopt.bo_run(
        lambda X: np.sin(3 * np.atleast_2d(X)[:, 0]), [], UNIT, 4, 12,
        bayesopt.AcquisitionSpec("EI"), seed=2,
    )
    assert state.n_evals == 12
    bests = [h["y_best_so_far"] for h in state.history]
    assert np.all(np.diff(bests) >= -1e-12)


def test_bo_deterministic():
    def run():
        return bayesopt.bo_run(
            lambda X: -(np.atleast_2d(X)[:, 0] - 0.62) ** 2, [], UNIT, 4, 10,
            bayesopt.AcquisitionSpec("UCB", xi=2.0), seed=9,
        )

    a, b = run(), run()
    assert a.x_best[0] == b.x_best[0]
    assert [h["y"] for h in a.history] == [h["y"] for h in b.history]


def test_bo_noisy_uses_posterior_mean_incumbent():
    rng_holder = {"rng": np.random.default_rng(123)}

    def noisy_obj(X):
        X = np.atleast_2d(X)
        return -((X[:, 0] - 0.4) ** 2) + 0.05 * rng_holder["rng"].standard_normal(X.shape[0])

    state = bayesopt.bo_run(noisy_obj, [], UNIT, 6, 20,
                            bayesopt.AcquisitionSpec("EI"), seed=3, noisy=True)
    assert state.x_best is not None
    assert abs(state.x_best[0] - 0.4) < 0.15
    assert state.objective_gp.kernel.noise_variance > 0


def test_acquisition_spec_validation():
    with pytest.raises(ValueError):
        bayesopt.AcquisitionSpec("BAD")
    with pytest.raises(ValueError):
        bayesopt.AcquisitionSpec("EI", xi=-1.0)
    with pytest.raises(ValueError):
        bayesopt.AcquisitionSpec("EI", constraint_mode="PoFThreshold", epsilon=1.5)
