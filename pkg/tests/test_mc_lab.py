import math

import numpy as np
import pytest

from orlicz_sup import mc_lab
from orlicz_sup.errors import InvalidParameterError
from orlicz_sup.ou_model import OUModel

MODEL = OUModel(1.0, 1.0, 0.8, 0.9)


@pytest.fixture(scope="module")
def big_batch():
    return mc_lab.sample_ou_batch(MODEL, 9, 100_000, 2024)


def test_lag_one_correlation(big_batch):
    rho = math.exp(-MODEL.tau * MODEL.T / 8)
    x = big_batch.values
    for i in (0, 4, 7):
        r = np.corrcoef(x[:, i], x[:, i + 1])[0, 1]
        assert abs(r - rho) < 3 / math.sqrt(big_batch.n_paths)


def test_marginal_variance(big_batch):
    var = big_batch.values.var(axis=0)
    se = math.sqrt(2.0 / big_batch.n_paths)
    assert np.all(np.abs(var - 1.0) < 3 * se)


def test_covariance_at_random_pairs(big_batch):
    rng = np.random.default_rng(1)
    x = big_batch.values
    n = big_batch.n_paths
    for _ in range(20):
        i, j = rng.integers(0, 9, size=2)
        exact = math.exp(-MODEL.tau * abs(big_batch.grid.points[i] - big_batch.grid.points[j]))
        prod = x[:, i] * x[:, j]
        assert abs(prod.mean() - exact) < 3 * prod.std() / math.sqrt(n) + 1e-12


def test_same_seed_same_batch():
    a = mc_lab.sample_ou_batch(MODEL, 17, 50, 3)
    b = mc_lab.sample_ou_batch(MODEL, 17, 50, 3)
    np.testing.assert_array_equal(a.values, b.values)


def test_refinement_keeps_coarse_values_and_raises_sup():
    b = mc_lab.sample_ou_batch(MODEL, 33, 400, 8)
    r = mc_lab.refine_batch(MODEL, b)
    rr = mc_lab.refine_batch(MODEL, r)
    np.testing.assert_array_equal(r.values[:, ::2], b.values)
    assert rr.grid.n == 129
    assert np.all(mc_lab.sup_statistic(r) >= mc_lab.sup_statistic(b))
    assert np.all(mc_lab.sup_statistic(rr) >= mc_lab.sup_statistic(r))


def test_refined_midpoints_have_the_right_covariance():
    b = mc_lab.sample_ou_batch(MODEL, 3, 100_000, 4)
    r = mc_lab.refine_batch(MODEL, b).values
    n = r.shape[0]
    for i, j in [(0, 1), (1, 2), (1, 3), (1, 1)]:
        exact = math.exp(-abs(i - j) * 0.25)
        prod = r[:, i] * r[:, j]
        assert abs(prod.mean() - exact) < 3 * prod.std() / math.sqrt(n)


def test_empirical_tail_edges():
    b = mc_lab.sample_ou_batch(MODEL, 33, 500, 1)
    top = mc_lab.sup_statistic(b).max()
    rep = mc_lab.empirical_sup_tail(b, None, [0.0, 0.5, 1.0, top + 1.0])
    assert rep.empirical[0] == 1.0
    assert rep.empirical[-1] == 0.0
    assert np.all(np.diff(rep.empirical) <= 0)
    with pytest.raises(InvalidParameterError):
        mc_lab.empirical_sup_tail(b, None, [1.0, 0.5])


def test_averaged_deviation_cases():
    b = mc_lab.sample_ou_batch(MODEL, 17, 20, 1)
    const = mc_lab.PathBatch(20, b.grid, np.full((20, 17), 2.5), 0)
    np.testing.assert_allclose(mc_lab.averaged_deviation_stat(const), 0.0, atol=1e-15)
    assert np.all(mc_lab.averaged_deviation_stat(b) >= 0)
    one = mc_lab.PathBatch(1, b.grid, b.values[:1], 0)
    assert mc_lab.averaged_deviation_stat(one, b.values[0])[0] == 0.0


def test_domination_report_shapes_and_vacuous_rows():
    b = mc_lab.sample_ou_batch(MODEL, 33, 1000, 1)
    xs = [0.5, 1.0, 2.0, 3.0]
    rep = mc_lab.domination_report(b, None, lambda x: 1.0, xs)
    assert len(rep.dominated) == 4 and all(d is None for d in rep.dominated)
    assert rep.all_dominated
    rep = mc_lab.domination_report(b, None, lambda x: 0.0, xs)
    assert rep.dominated[0] is False and not rep.all_dominated


def test_wilson_halfwidth_known_value():
    # z/(1+z^2/n) * sqrt(p(1-p)/n + z^2/(4n^2)) at k=50, n=100
    z = mc_lab.WILSON_Z99
    expected = z / (1 + z * z / 100) * math.sqrt(0.25 / 100 + z * z / 40000)
    assert mc_lab.wilson_halfwidth(50, 100) == pytest.approx(expected, rel=1e-15)


def test_batch_validation():
    with pytest.raises(InvalidParameterError):
        mc_lab.sample_ou_batch(MODEL, 1, 10, 0)
    with pytest.raises(InvalidParameterError):
        mc_lab.sample_ou_batch(MODEL, 10, 0, 0)
