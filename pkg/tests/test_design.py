import numpy as np
import pytest

from gpuq import design
from gpuq.errors import ConditioningError
from gpuq.gp import Dataset, PriorMean, fit
from gpuq.kernels import KernelSpec


def _toy_gp(noise=0.0, seed=0, m=2):
    rng = np.random.default_rng(seed)
    X = np.linspace(0.1, 0.9, m).reshape(-1, 1)
    y = np.sin(3 * X[:, 0]) + 0.01 * rng.standard_normal(m)
    spec = KernelSpec("SE", 1.0, (0.25,), noise_variance=noise)
    return fit(spec, PriorMean("Zero"), Dataset(X, y))


# ---------------------------------------------------------------------------
# LHS
# ---------------------------------------------------------------------------

def test_lhs_unit_box_stratification():
    dom = design.Domain(np.array([[0.0, 1.0]]))
    pts = np.sort(design.lhs_sample(dom, 4, 0).points[:, 0])
    for i, p in enumerate(pts):
        assert i / 4 <= p < (i + 1) / 4


def test_lhs_marginal_bin_occupancy():
    dom = design.Domain(np.array([[0.0, 1.0], [-2.0, 2.0], [5.0, 6.0]]))
    pool = design.lhs_sample(dom, 100, 3)
    for j in range(3):
        lo, hi = dom.bounds[j]
        bins = np.floor((pool.points[:, j] - lo) / (hi - lo) * 100).astype(int)
        assert sorted(bins) == list(range(100))


def test_lhs_deterministic():
    dom = design.Domain(np.array([[0.0, 1.0], [0.0, 1.0]]))
    a = design.lhs_sample(dom, 50, 7).points
    b = design.lhs_sample(dom, 50, 7).points
    assert np.array_equal(a, b)


def test_domain_validation():
    with pytest.raises(ValueError):
        design.Domain(np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        design.Domain(np.array([[0.0, np.inf]]))


# ---------------------------------------------------------------------------
# ALM
# ---------------------------------------------------------------------------

def test_alm_prefers_far_point_over_training_point():
    gp = _toy_gp()
    pool = design.CandidatePool(np.array([[0.1], [0.5]]))  # training point vs gap
    assert design.alm_select(gp, pool) == 1


def test_alm_tie_breaks_to_lowest_index():
    gp = _toy_gp()
    pool = design.CandidatePool(np.array([[0.5], [0.5], [0.5]]))
    assert design.alm_select(gp, pool) == 0


def test_alm_matches_brute_force_scan():
    gp = _toy_gp()
    grid = np.linspace(0.0, 1.0, 200).reshape(-1, 1)
    pool = design.CandidatePool(grid)
    _, var = gp.predict_batch(grid)
    assert design.alm_select(gp, pool) == int(np.argmax(var))


# ---------------------------------------------------------------------------
# variance_after_add
# ---------------------------------------------------------------------------

def test_variance_after_add_zero_at_new_point():
    gp = _toy_gp()
    ev = design.variance_after_add(gp, np.array([0.5]))
    assert abs(ev(np.array([[0.5]]))[0]) < 1e-8


def test_variance_after_add_never_increases():
    gp = _toy_gp()
    ev = design.variance_after_add(gp, np.array([0.4]))
    grid = np.linspace(0, 1, 100).reshape(-1, 1)
    _, before = gp.predict_batch(grid)
    after = ev(grid)
    assert np.all(after <= before + 1e-10)


def test_variance_after_add_matches_refit_oracle():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 1, size=(5, 2))
    y = rng.standard_normal(5)
    spec = KernelSpec("SE", 1.3, (0.4, 0.6), noise_variance=0.01)
    gp = fit(spec, PriorMean("Zero"), Dataset(X, y))
    x_new = rng.uniform(0, 1, size=2)
    ev = design.variance_after_add(gp, x_new)
    # response value is irrelevant to the variance; refit with any value
    gp2 = fit(spec, PriorMean("Zero"), Dataset(np.vstack([X, x_new]), np.append(y, 0.0)))
    grid = rng.uniform(0, 1, size=(50, 2))
    _, oracle = gp2.predict_batch(grid)
    assert np.max(np.abs(ev(grid) - oracle)) < 1e-9


def test_variance_after_add_duplicate_zero_noise_fails():
    gp = _toy_gp(noise=0.0)
    with pytest.raises(ConditioningError):
        design.variance_after_add(gp, gp.data.inputs[0])


# ---------------------------------------------------------------------------
# ALC
# ---------------------------------------------------------------------------

def test_alc_single_candidate():
    gp = _toy_gp()
    pool = design.CandidatePool(np.array([[0.33]]))
    nodes = np.linspace(0, 1, 50).reshape(-1, 1)
    assert design.alc_select(gp, pool, nodes) == 0


def test_alc_matches_refit_and_integrate_oracle():
    gp = _toy_gp(noise=0.01)
    rng = np.random.default_rng(5)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(20, 1)))
    nodes = rng.uniform(0, 1, size=(500, 1))
    scores = []
    for cand in pool.points:
        gp2 = fit(gp.kernel, gp.prior_mean, gp.data.add(cand, 0.0))
        _, var = gp2.predict_batch(nodes)
        scores.append(np.mean(var))
    assert design.alc_select(gp, pool, nodes) == int(np.argmin(scores))


def test_alc_does_not_prefer_existing_training_point():
    gp = _toy_gp(noise=0.05)
    rng = np.random.default_rng(6)
    pool_pts = np.vstack([gp.data.inputs[0], rng.uniform(0.3, 0.7, size=(10, 1))])
    pool = design.CandidatePool(pool_pts)
    nodes = rng.uniform(0, 1, size=(400, 1))
    chosen = design.alc_select(gp, pool, nodes)
    assert chosen != 0  # re-observing a known point reduces less variance


def test_alc_beats_alm_on_integrated_variance():
    gp = _toy_gp(noise=0.01)
    rng = np.random.default_rng(7)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(30, 1)))
    nodes = rng.uniform(0, 1, size=(300, 1))
    i_alc = design.alc_select(gp, pool, nodes)
    i_alm = design.alm_select(gp, pool)

    def integrated(cand):
        return float(np.mean(design.variance_after_add(gp, cand)(nodes)))

    assert integrated(pool.points[i_alc]) <= integrated(pool.points[i_alm]) + 1e-12


# ---------------------------------------------------------------------------
# EIGF
# ---------------------------------------------------------------------------

def test_eigf_zero_at_training_point():
    gp = _toy_gp()
    pool = design.CandidatePool(np.vstack([gp.data.inputs[0], [[0.5]]]))
    mean, var = gp.predict_batch(pool.points)
    assert design.eigf_select(gp, pool, gp.data) == 1


def test_eigf_reduces_to_alm_for_flat_data():
    X = np.array([[0.2], [0.8]])
    y = np.array([1.0, 1.0])
    gp = fit(KernelSpec("SE", 1.0, (0.3,)), PriorMean("Zero"), Dataset(X, y))
    rng = np.random.default_rng(8)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(40, 1)))
    # flat responses: first term is near zero wherever the mean reverts...
    # use a constant prior so the GP mean equals y everywhere it matters
    gp_flat = fit(KernelSpec("SE", 1.0, (0.3,)), PriorMean("Constant"), Dataset(X, y))
    assert design.eigf_select(gp_flat, pool, gp_flat.data) == design.alm_select(gp_flat, pool)


def test_eigf_matches_brute_force():
    gp = _toy_gp(seed=9, m=4)
    rng = np.random.default_rng(9)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(60, 1)))
    mean, var = gp.predict_batch(pool.points)
    d2 = (pool.points[:, None, :] - gp.data.inputs[None, :, :]) ** 2
    nearest = np.argmin(d2.sum(axis=2), axis=1)
    scores = (mean - gp.data.responses[nearest]) ** 2 + var
    assert design.eigf_select(gp, pool, gp.data) == int(np.argmax(scores))


def test_selectors_return_in_pool_indices_and_are_deterministic():
    gp = _toy_gp(noise=0.01, m=3)
    rng = np.random.default_rng(10)
    pool = design.CandidatePool(rng.uniform(0, 1, size=(25, 1)))
    nodes = rng.uniform(0, 1, size=(100, 1))
    for _ in range(2):
        assert 0 <= design.alm_select(gp, pool) < 25
        assert 0 <= design.alc_select(gp, pool, nodes) < 25
        assert 0 <= design.eigf_select(gp, pool, gp.data) < 25
    assert design.alm_select(gp, pool) == design.alm_select(gp, pool)
