import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import dblquad, quad

from orlicz_sup import bound_engine as be
from orlicz_sup import nfunc
from orlicz_sup.errors import CapabilityError, DivergenceError, InvalidParameterError
from orlicz_sup.orlicz_norms import MeasureGrid

UNIT = MeasureGrid.trapezoid(1.0, 17)
SQRT_SIGMA = be.SigmaModulus.power(math.sqrt(2.0), 0.5)


def ou_like(beta2=0.9, alpha=2.3, tau=1.0):
    return be.SigmaModulus.power(math.sqrt(2.0) * tau ** (beta2 / 2), beta2 / 2), be.ZetaPower(alpha)


def test_zeta1_values():
    z = be.ZetaPower(1.0)
    assert be.zeta1(0.0, UNIT, SQRT_SIGMA, z) == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    assert be.zeta1(1.0, UNIT, SQRT_SIGMA, z) == be.zeta1(0.0, UNIT, SQRT_SIGMA, z)
    ts = np.linspace(0, 1, 101)
    assert ts[np.argmin(be.zeta1(ts, UNIT, SQRT_SIGMA, z))] == pytest.approx(0.5)


def test_sigma_inverse_by_bisection():
    sm = be.SigmaModulus(lambda h: np.sqrt(h) + h)
    ys = np.array([0.0, 0.1, 1.0, 5.0])
    back = sm(sm.inverse(ys))
    assert np.all(back <= ys + 1e-10)
    np.testing.assert_allclose(back, ys, atol=1e-10)


def test_zeta_gamma_product():
    z = be.ZetaPower(0.7)
    u = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(z.gamma(u) * z.zeta(u), u, rtol=1e-15)
    assert z.gamma(0.0) == 0.0


def ball_oracle(t, r, T, n=2_000_001):
    grid = np.linspace(0.0, T, n)
    return np.count_nonzero(np.abs(grid - t) <= r) * T / (n - 1)


def test_nu_t_against_fine_grid_count():
    rng = np.random.default_rng(2)
    sm, z = ou_like()
    for _ in range(20):
        t, u = rng.uniform(0, 1), rng.uniform(0.01, 3.0)
        r = float(be.ball_radius(u, sm, z))
        assert be.nu_t(t, u, UNIT, sm, z) == pytest.approx(ball_oracle(t, r, 1.0), abs=2e-6)


def test_nu_t_saturates():
    sm, z = ou_like()
    assert be.nu_t(0.3, 1e6, UNIT, sm, z) == 1.0


@given(st.floats(0.0, 1.0), st.floats(1e-4, 10.0), st.floats(1e-4, 10.0))
def test_nu_t_nondecreasing(t, u1, u2):
    sm, z = ou_like()
    lo, hi = sorted([u1, u2])
    assert be.nu_t(t, lo, UNIT, sm, z) <= be.nu_t(t, hi, UNIT, sm, z)


def test_nu_t_discrete_counts_weights():
    g = MeasureGrid.discrete([0.0, 0.5, 1.0], [0.2, 0.3, 0.5])
    sm, z = be.SigmaModulus.power(1.0, 1.0), be.ZetaPower(1.0)
    assert be.nu_t(0.0, 0.5, g, sm, z) == pytest.approx(0.2)   # radius 0.25
    assert be.nu_t(0.0, 1.0, g, sm, z) == pytest.approx(0.5)   # radius 0.5
    assert be.nu_t(0.0, 2.0, g, sm, z) == pytest.approx(1.0)


def d_pq_oracle(p, q, g, sm_exponent, sm, z):
    """quad with an algebraic weight for the power-law singularity at u = 0."""
    k = 1.0 / (z.alpha * sm_exponent)  # ball radius grows like u^k near 0
    s = -2.0 * k / q
    best = 0.0
    for t in be.sup_candidates(g):
        top = p * be.zeta1(t, g, sm, z)
        cuts = [0.0] + [float(c) for c in be._kinks(t, g, sm, z) if 0 < c < top] + [top]
        nu = lambda u: be.nu_t(t, u, g, sm, z)
        total, _ = quad(lambda u: nu(max(u, 1e-300)) ** (-2.0 / q) * max(u, 1e-300) ** -s, 0.0, cuts[1], weight="alg",
                        wvar=(s, 0.0), epsabs=0, epsrel=1e-12)
        for a, b in zip(cuts[1:-1], cuts[2:]):
            total += quad(lambda u: nu(u) ** (-2.0 / q), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
        best = max(best, total)
    return best / (p * (1 - p))


@pytest.mark.parametrize("p,q", [(0.5, 2.0), (0.2, 3.0), (0.8, 2.0)])
def test_d_pq_matches_quad(p, q):
    sm, z = ou_like()
    g = MeasureGrid.trapezoid(1.0, 5)
    assert be.d_pq_quad(p, q, g, sm, z, 1e-9) == pytest.approx(d_pq_oracle(p, q, g, 0.45, sm, z), rel=1e-6)


def test_d_pq_large_q_limit():
    sm, z = ou_like()
    g = MeasureGrid.trapezoid(1.0, 5)
    p = 0.4
    limit = p * be.zeta1(0.0, g, sm, z) / (p * (1 - p))
    assert be.d_pq_quad(p, 1e9, g, sm, z) == pytest.approx(limit, rel=1e-6)


def test_d_pq_discrete_bound():
    g = MeasureGrid.discrete([0.0, 0.4, 1.0], [0.2, 0.3, 0.5])
    sm, z = ou_like()
    p = 0.6
    zmax = be.zeta1(g.points, g, sm, z).max()
    assert be.d_pq_quad(p, 2.0, g, sm, z) <= zmax * 0.2 ** -1.0 / (1 - p)


def test_c_p_bounded_for_discrete_measure():
    g = MeasureGrid.discrete([0.0, 0.4, 1.0], [0.2, 0.3, 0.5])
    sm, z = ou_like()
    U = nfunc.exp_power(1.0, 2.0)
    p = 0.5
    zmax = be.zeta1(g.points, g, sm, z).max()
    assert be.c_p(p, g, sm, z, U) <= zmax * nfunc.generalized_inverse(U, 0.2 ** -2) / (1 - p)


def test_c_p_refinement_consistent():
    sm, z = ou_like(0.9, 2.3)
    g = MeasureGrid.trapezoid(1.0, 9)
    U = nfunc.power(1, 2)
    coarse = be.c_p(0.5, g, sm, z, U, 1e-6)
    fine = be.c_p(0.5, g, sm, z, U, 1e-8)
    assert coarse == pytest.approx(fine, rel=1e-5)


def test_c_p_times_p_one_minus_p_grows():
    sm, z = ou_like()
    g = MeasureGrid.trapezoid(1.0, 9)
    ps = np.linspace(0.05, 0.95, 10)
    vals = be.c_p(ps, g, sm, z, nfunc.power(1, 2)) * ps * (1 - ps)
    assert np.all(np.diff(vals) >= 0)


def test_c_p_reports_divergence():
    sm, z = ou_like(0.9, 2.0)  # 1/nu ~ u^(-2/(alpha beta)) is not integrable
    with pytest.raises(DivergenceError) as info:
        be.c_p(0.5, MeasureGrid.trapezoid(1.0, 3), sm, z, nfunc.power(1, 2))
    assert "chaining integral" in info.value.hypothesis


def test_weight_scaling_direction():
    sm, z = ou_like()
    g = MeasureGrid.discrete([0.0, 0.5, 1.0], [0.2, 0.3, 0.5])
    heavy = MeasureGrid.discrete([0.0, 0.5, 1.0], [0.4, 0.6, 1.0])
    assert be.d_pq_quad(0.5, 2.0, heavy, sm, z) < be.d_pq_quad(0.5, 2.0, g, sm, z)


LINEAR = be.DeviationModel.stationary(lambda h: h)


def test_z_of_x_example():
    z = be.ZetaPower(0.5)
    for x in (1.0, 2.0, 5.0):
        got = be.z_of_x(x, LINEAR, z, nfunc.power(1, 2), UNIT)
        assert got == pytest.approx(1.0 + 1.0 / (3.0 * x * x), rel=1e-9)


def test_z_of_x_matches_dblquad_with_general_model():
    z = be.ZetaPower(0.5)
    dm = be.DeviationModel(lambda u, v: np.abs(u ** 2 - v ** 2), lambda u, v: np.abs(u ** 2 - v ** 2))
    x = 1.2  # gamma(d_f) <= 1 < x everywhere, so the indicator term is identically 1
    ref, _ = dblquad(lambda v, u: 1.0 + abs(u * u - v * v) / x ** 2, 0, 1, 0, 1, epsabs=1e-12)
    got = be.z_of_x(x, dm, z, nfunc.power(1, 2), UNIT)
    assert got == pytest.approx(ref, rel=1e-6)


def test_z_of_x_needs_delta2():
    with pytest.raises(CapabilityError):
        be.z_of_x(1.0, LINEAR, be.ZetaPower(0.5), nfunc.exp_linear(), UNIT)


def test_z_of_x_tail_scaling():
    z = be.ZetaPower(0.5)
    U = nfunc.power(1, 2)
    a = be.z_of_x(10.0, LINEAR, z, U, UNIT) - 1.0
    b = be.z_of_x(20.0, LINEAR, z, U, UNIT) - 1.0
    assert a / b == pytest.approx(4.0, rel=1e-6)


def test_z_degenerate_deviation():
    dm = be.DeviationModel.stationary(lambda h: np.zeros_like(h))
    assert be.z_of_x(1.0, dm, be.ZetaPower(0.5), nfunc.power(1, 2), UNIT) == pytest.approx(1.0, rel=1e-9)


def test_class_e_tail_formula_and_monotonicity():
    z = be.ZetaPower(0.5)
    U = nfunc.power(1, 2)
    r = 1.5
    zr = be.z_of_x(r, LINEAR, z, U, UNIT)
    xs = np.linspace(2.0, 10.0, 9)
    vals = [be.eta_tail_class_e(x, r, LINEAR, z, U, UNIT) for x in xs]
    np.testing.assert_allclose(vals, zr * r * r / xs ** 2, rtol=1e-12)
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(CapabilityError):
        be.eta_tail_class_e(2.0, r, LINEAR, z, nfunc.exp_power(1, 2), UNIT)


def test_z1_dominates_z():
    z = be.ZetaPower(0.5)
    U = nfunc.power(1, 2)
    for r in (0.3, 0.7, 2.0):
        assert be.z1_of_r(r, LINEAR, z, U, UNIT) >= be.z_of_x(r, LINEAR, z, U, UNIT) * (1 - 1e-9)


def test_delta_q_examples():
    assert be.delta_q_quad(2.0, LINEAR, be.ZetaPower(0.5), UNIT) == pytest.approx(1 / 3, rel=1e-8)
    assert be.delta_q_quad(2.0, LINEAR, be.ZetaPower(1.0), UNIT) == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(DivergenceError) as info:
        be.delta_q_quad(2.0, LINEAR, be.ZetaPower(2.0), UNIT)
    assert "gamma(d_f(u, v))^q" in info.value.hypothesis


def test_delta_q_tolerance_consistency():
    dm = be.DeviationModel.stationary(lambda h: np.sqrt(-2 * np.expm1(-h)))
    z = be.ZetaPower(1.4)
    coarse = be.delta_q_quad(2.0, dm, z, UNIT, 1e-6)
    fine = be.delta_q_quad(2.0, dm, z, UNIT, 1e-9)
    assert abs(coarse - fine) <= 1e-6 * fine


def test_delta_q_discrete_excludes_diagonal():
    g = MeasureGrid.discrete([0.0, 0.5, 1.0], [0.2, 0.3, 0.5])
    got = be.delta_q_quad(2.0, LINEAR, be.ZetaPower(0.5), g)
    assert got == pytest.approx(2 * (0.06 * 0.5 + 0.1 * 1.0 + 0.15 * 0.5), rel=1e-14)


def test_lq_bound_identities():
    d_fn = lambda p: 1.0 / (p * (1 - p))
    grid = np.linspace(0.05, 0.95, 19)
    one = be.lq_bound(3.0, 2.0, 0.7, 0.4, d_fn, grid)
    two = be.lq_bound(6.0, 2.0, 0.7, 0.4, d_fn, grid)
    assert two.value == one.value / 4.0
    assert one.p_star == pytest.approx(0.5)
    assert be.lq_bound(3.0, 2.0, 0.7, 0.0, d_fn, grid).value == pytest.approx(0.7 / 9.0, rel=1e-14)
    solo = be.lq_bound(3.0, 2.0, 0.0, 0.4, d_fn, grid)
    assert solo.value == pytest.approx(solo.d_pq ** 2 * 0.4 / 9.0, rel=1e-14)


@given(st.floats(0.1, 100.0), st.floats(1.1, 5.0))
def test_lq_bound_times_x_power_is_constant(x, q):
    d_fn = lambda p: 2.0 + (p - 0.3) ** 2
    grid = np.linspace(0.05, 0.95, 7)
    res = be.lq_bound(x, q, 0.5, 0.2, d_fn, grid)
    assert res.value * x ** q == pytest.approx(res.constant, rel=1e-13)


def test_gamma_q_mc_cases():
    g = MeasureGrid.trapezoid(1.0, 5)
    fixed = np.array([0.0, 1.0, 2.0, 1.0, 0.0])
    res = be.gamma_q_mc(2.0, fixed, g, lambda n, s: np.tile(fixed, (n, 1)), 10, 0)
    assert res.value == 0.0
    with pytest.raises(InvalidParameterError):
        be.gamma_q_mc(2.0, None, g, lambda n, s: None, 0, 0)


def test_gamma_q_mc_ou_second_moment():
    from orlicz_sup import mc_lab
    from orlicz_sup.ou_model import OUModel
    m = OUModel(1.0, 1.0, 0.8, 0.9)
    g = MeasureGrid.trapezoid(1.0, 257)
    sampler = lambda n, s: mc_lab.sample_ou_batch(m, 257, n, s).values
    res = be.gamma_q_mc(2.0, lambda t: np.zeros_like(t), g, sampler, 20000, 3)
    assert abs(res.value - 2 / math.e) < 3 * res.stderr + 1e-4


def linear_process_setup(T=0.5):
    """X(t) = t xi with xi ~ N(0, 1): d(u, v) = |u - v|, mean deviation norm T / 2."""
    g = MeasureGrid.trapezoid(T, 9)
    sm = be.SigmaModulus.power(1.0, 1.0)
    return g, sm, be.ZetaPower(1.25), LINEAR, T / 2


def test_mixed_tail_bound_decreases_in_x():
    g, sm, z, dm, m = linear_process_setup()
    q = be.BoundQuery(np.array([1.0]), g, p_grid_size=7, split_grid_size=7, refine_steps=10, sweeps=1)
    U = nfunc.power(1, 2)
    raws = [be.mixed_tail_bound(x, m, dm, sm, z, U, g, q).raw for x in (2.0, 4.0, 8.0, 16.0)]
    assert np.all(np.diff(raws) <= 0)


def test_mixed_tail_bound_matches_finer_search():
    g, sm, z, dm, m = linear_process_setup()
    U = nfunc.power(1, 2)
    q = be.BoundQuery(np.array([1.0]), g)
    x = 70.0
    res = be.mixed_tail_bound(x, m, dm, sm, z, U, g, q)
    assert 0.3 < res.raw < 0.7
    fine = be.BoundQuery(np.array([1.0]), g, p_grid_size=61, split_grid_size=61, refine_steps=0, sweeps=0)
    ref = be.mixed_tail_bound(x, m, dm, sm, z, U, g, fine)
    assert res.raw == pytest.approx(ref.raw, rel=0.01)
    assert 0.05 <= res.alpha_star <= 0.95 and 0.05 <= res.p_star <= 0.95


def test_query_validation():
    with pytest.raises(InvalidParameterError):
        be.BoundQuery(np.array([2.0, 1.0]), UNIT)
    with pytest.raises(InvalidParameterError):
        be.BoundQuery(np.array([1.0]), UNIT, p_range=(0.0, 0.5))


def test_deviation_model_checks():
    dm = be.DeviationModel.stationary(lambda h: np.sqrt(-2 * np.expm1(-h)))
    pairs = np.random.default_rng(0).uniform(0, 1, size=(100, 2))
    checks = be.check_deviation_model(dm, be.SigmaModulus.power(math.sqrt(2), 0.45), pairs)
    assert all(checks.values())
