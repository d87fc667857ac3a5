import numpy as np
import pytest

from gpuq import calibrate, design
from gpuq.stats import norm_logpdf

BOX = design.Domain(np.array([[-6.0, 6.0]]))

# conjugate pair: N(x; 1, 0.5^2) likelihood x N(x; 0, 2^2) prior
POST_MEAN = 16.0 / 17.0
POST_STD = float(np.sqrt(4.0 / 17.0))


def _log_joint_fn(x):
    x = float(np.atleast_1d(x)[0])
    lik = float(norm_logpdf((x - 1.0) / 0.5)) - np.log(0.5)
    pri = float(norm_logpdf(x / 2.0)) - np.log(2.0)
    return lik + pri


# ---------------------------------------------------------------------------
# Metropolis-Hastings
# ---------------------------------------------------------------------------

def test_mh_standard_normal_moments():
    chain = calibrate.mh_sample(lambda x: -0.5 * float(x[0]) ** 2, np.zeros(1),
                                np.array([1.2]), 50_000, 5_000, 0)
    assert abs(np.mean(chain.samples)) < 0.05
    assert abs(np.var(chain.samples) - 1.0) < 0.1


def test_mh_tiny_proposal_accepts_everything():
    chain = calibrate.mh_sample(lambda x: -0.5 * float(x[0]) ** 2, np.zeros(1),
                                np.array([1e-12]), 2_000, 0, 1)
    assert chain.acceptance_rate > 0.999


def test_mh_deterministic_given_seed():
    a = calibrate.mh_sample(lambda x: -abs(float(x[0])), np.zeros(1), np.array([0.5]), 3_000, 500, 3)
    b = calibrate.mh_sample(lambda x: -abs(float(x[0])), np.zeros(1), np.array([0.5]), 3_000, 500, 3)
    assert np.array_equal(a.samples, b.samples)
    assert a.acceptance_rate == b.acceptance_rate


def test_mh_invariant_to_constant_shift():
    a = calibrate.mh_sample(lambda x: -0.5 * float(x[0]) ** 2, np.zeros(1), np.array([0.8]), 2_000, 100, 4)
    b = calibrate.mh_sample(lambda x: -0.5 * float(x[0]) ** 2 + 1234.5, np.zeros(1), np.array([0.8]), 2_000, 100, 4)
    assert np.array_equal(a.samples, b.samples)


def test_mh_validates_inputs():
    with pytest.raises(ValueError):
        calibrate.mh_sample(lambda x: 0.0, np.zeros(1), np.array([0.5]), 100, 100, 0)
    with pytest.raises(ValueError):
        calibrate.mh_sample(lambda x: 0.0, np.zeros(1), np.array([-0.5]), 100, 10, 0)
    with pytest.raises(ValueError):
        calibrate.mh_sample(lambda x: -np.inf, np.zeros(1), np.array([0.5]), 100, 10, 0)


def test_mh_chain_length_excludes_burn_in():
    chain = calibrate.mh_sample(lambda x: -0.5 * float(x[0]) ** 2, np.zeros(1),
                                np.array([1.0]), 1_000, 300, 5)
    assert chain.length == 700


# ---------------------------------------------------------------------------
# utilities
# ---------------------------------------------------------------------------

def test_ev_values():
    assert float(calibrate.ev_utility(0.3, 0.0)) == 0.0
    assert float(calibrate.ev_utility(0.0, 1.0)) == pytest.approx(np.e * (np.e - 1.0), rel=1e-12)


def test_ev_against_mc_oracle():
    rng = np.random.default_rng(6)
    draws = np.exp(1.0 + 0.5 * rng.standard_normal(10_000_000))
    assert abs(float(calibrate.ev_utility(1.0, 0.25)) - np.var(draws)) / np.var(draws) < 1e-2


def test_ev_log_domain_survives_huge_means():
    # exp(2u) would overflow; the log form must stay ordered and finite
    vals = calibrate.log_ev_utility(np.array([1e15, 1e15]), np.array([0.5, 2.0]))
    assert np.all(np.isfinite(vals)) and vals[1] > vals[0]


def test_ee_values():
    s2 = 1.0 / (2.0 * np.pi * np.e)
    assert float(calibrate.ee_utility(0.77, s2)) == pytest.approx(0.77, abs=1e-12)
    assert float(calibrate.ee_utility(0.0, 1.0)) == pytest.approx(0.5 * np.log(2 * np.pi * np.e), rel=1e-9)
    assert float(calibrate.ee_utility(0.0, 1.0)) == pytest.approx(1.418939, abs=1e-6)
    assert calibrate.ee_utility(0.0, 0.0) == -np.inf


def test_ev_ee_increase_with_variance():
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = rng.uniform(-5, 5)
        v1, v2 = np.sort(rng.uniform(0.1, 3.0, 2))
        if v1 == v2:
            continue
        assert calibrate.log_ev_utility(u, v2) > calibrate.log_ev_utility(u, v1)
        assert calibrate.ee_utility(u, v2) > calibrate.ee_utility(u, v1)


def test_ee_increasing_in_mean():
    assert calibrate.ee_utility(1.0, 0.5) > calibrate.ee_utility(0.0, 0.5)


# ---------------------------------------------------------------------------
# BAPE
# ---------------------------------------------------------------------------

def test_bape_recovers_conjugate_posterior():
    log_joint = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
    gp = calibrate.bape_run(log_joint, BOX, 8, 25, utility="EV", seed=0)
    chain = calibrate.mh_sample(lambda x: gp.predict(np.atleast_1d(x))[0],
                                np.zeros(1), np.array([0.8]), 20_000, 5_000, 1)
    assert abs(np.mean(chain.samples) - POST_MEAN) < 0.05
    assert abs(np.std(chain.samples) - POST_STD) / POST_STD < 0.10
    assert log_joint.n_evals == 25


def test_bape_queries_distinct_and_inside_domain():
    log_joint = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
    gp = calibrate.bape_run(log_joint, BOX, 6, 18, utility="EE", seed=2)
    X = gp.data.inputs
    assert np.unique(X, axis=0).shape[0] == X.shape[0]
    assert np.all(design.Domain(BOX.bounds).contains(X))


def test_bape_deterministic_query_sequence():
    def run():
        lj = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
        return calibrate.bape_run(lj, BOX, 6, 14, utility="EV", seed=5).data.inputs

    assert np.array_equal(run(), run())


def test_bape_budget_accounting():
    log_joint = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
    calibrate.bape_run(log_joint, BOX, 7, 19, utility="EV", seed=3)
    assert log_joint.n_evals == 19


def test_bape_floors_infinite_log_joint():
    def spiky(x):
        v = float(np.atleast_1d(x)[0])
        return -np.inf if abs(v) > 4.0 else _log_joint_fn(x)

    log_joint = calibrate.LogJointModel(lambda x: 0.0, spiky)
    gp = calibrate.bape_run(log_joint, BOX, 8, 16, utility="EV", seed=4)
    assert np.all(np.isfinite(gp.data.responses))
    finite_min = gp.data.responses[gp.data.responses > gp.data.responses.min()].min()
    assert gp.data.responses.min() <= finite_min


# ---------------------------------------------------------------------------
# AGP
# ---------------------------------------------------------------------------

def test_agp_residual_constant_when_q_is_posterior():
    # g = l - log q is the constant log evidence when q equals the posterior
    q = calibrate.GaussianDensity(np.array([POST_MEAN]), np.array([[POST_STD**2]]))
    grid = np.linspace(-3, 3, 101).reshape(-1, 1)
    l_vals = np.array([_log_joint_fn(x) for x in grid])
    resid = l_vals - q.logpdf(grid)
    assert np.var(resid) < 1e-6


def test_agp_matches_conjugate_posterior_at_equal_budget():
    log_joint = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
    rounds = calibrate.agp_iterate(log_joint, BOX, n_rounds=5, samples_per_round=1500,
                                   utility="EV", seed=0, m0=10, queries_per_round=3)
    assert log_joint.n_evals == 25  # 10 + 5 rounds x 3
    q, gp = rounds[-1].q, rounds[-1].gp

    def target(x):
        xa = np.atleast_1d(x)
        return gp.predict(xa)[0] + float(q.logpdf(xa.reshape(1, -1))[0])

    chain = calibrate.mh_sample(target, np.zeros(1), np.array([0.8]), 20_000, 5_000, 1)
    assert abs(np.mean(chain.samples) - POST_MEAN) < 0.05
    assert abs(np.std(chain.samples) - POST_STD) / POST_STD < 0.10


def test_agp_reuses_stored_evaluations_across_rounds():
    log_joint = calibrate.LogJointModel(lambda x: 0.0, _log_joint_fn)
    rounds = calibrate.agp_iterate(log_joint, BOX, n_rounds=4, samples_per_round=800,
                                   utility="EV", seed=1, m0=6, queries_per_round=2)
    # counter equals m0 + rounds * queries: stored values are never re-queried
    assert log_joint.n_evals == 6 + 4 * 2
    assert rounds[-1].gp.m == 6 + 4 * 2


def test_agp_degenerate_covariance_falls_back_inflated():
    prev = calibrate.GaussianDensity(np.zeros(2), np.eye(2))
    samples = np.tile(np.array([[0.5, -0.3]]), (50, 1))  # zero sample covariance
    q = calibrate._moment_match(samples, prev)
    assert np.allclose(q.cov, 1.5 * np.eye(2))
