import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsfluct import effective, model
from gsfluct.effective import FixedPoint
from gsfluct.model import ModelParams

ACCEPT = ModelParams(1, 1, 0.2, 0.3, 0.05)


def mc_site_moments(eta, p, q, params):
    """Direct summation of the single-site weights, no max shift."""
    gamma = np.arange(-params.S, params.S + 1)
    field = params.beta * math.sqrt(q) * eta[:, None] + params.h
    w = np.exp(field * gamma + gamma**2 * (params.beta**2 / 2 * (p - q) + params.D))
    W = w.sum(axis=1)
    return W, (w * gamma).sum(axis=1) / W, (w * gamma**2).sum(axis=1) / W


def test_w_value_examples():
    params = ModelParams(1, 1, 0.0)
    assert effective.w_value(0.7, 0.3, 0.1, params) == pytest.approx(3.0, rel=1e-15)
    eta = np.linspace(-4, 4, 17)
    p0 = ModelParams(2, 1, 0.7, 0.0, -0.3)
    np.testing.assert_allclose(effective.w_value(eta, 1.2, 0.4, p0), effective.w_value(-eta, 1.2, 0.4, p0),
                               rtol=1e-15)


def test_w_value_against_extended_precision():
    params = ModelParams(1, 1, 0.3, 0.1, -0.2)
    p, q, eta = 0.6, 0.05, 1.0
    mpmath.mp.dps = 40
    a = mpmath.mpf(0.3) * mpmath.sqrt(mpmath.mpf(q)) * eta + mpmath.mpf(0.1)
    c = mpmath.mpf(0.3) ** 2 / 2 * (mpmath.mpf(p) - mpmath.mpf(q)) + mpmath.mpf(-0.2)
    oracle = sum(mpmath.exp(a * g + c * g * g) for g in (-1, 0, 1))
    assert effective.w_value(eta, p, q, params) == pytest.approx(float(oracle), rel=1e-14)


def test_negative_q_rejected():
    with pytest.raises(ValueError):
        effective.w_value(0.0, 0.5, -0.1, ACCEPT)
    with pytest.raises(ValueError):
        effective.site_moments(0.0, 0.5, -0.1, ACCEPT)


@pytest.mark.parametrize("S,expected_s", [(1, 2 / 3), (2, 2.0)])
def test_site_moments_decoupled(S, expected_s):
    params = ModelParams(S, 1, 0.0)
    m, s = effective.site_moments(np.array([-1.3, 0.0, 2.2]), 0.4, 0.2, params)
    assert np.all(m == 0.0)
    np.testing.assert_allclose(s, expected_s, rtol=1e-15)
    m, _ = effective.site_moments(0.5, 0.4, 0.2, ModelParams(S, 1, 0.0, 0.0, 1.7))
    assert m == 0.0


def test_site_moments_match_direct_sums():
    params = ModelParams(2, 1, 0.6, 0.4, -0.1)
    eta = np.linspace(-3, 3, 13)
    W, m_ref, s_ref = mc_site_moments(eta, 1.1, 0.3, params)
    m, s = effective.site_moments(eta, 1.1, 0.3, params)
    np.testing.assert_allclose(m, m_ref, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(s, s_ref, rtol=1e-13)
    np.testing.assert_allclose(effective.w_value(eta, 1.1, 0.3, params), W, rtol=1e-13)


@settings(max_examples=200, deadline=None)
@given(S=st.integers(1, 4), beta=st.floats(0, 2), h=st.floats(0, 3), D=st.floats(-3, 3),
       eta=st.floats(-8, 8), q=st.floats(0, 4), gap=st.floats(0, 4))
def test_site_invariants(S, beta, h, D, eta, q, gap):
    params = ModelParams(S, 1, beta, h, D)
    site = effective.effective_site(eta, q + gap, q, params)
    assert site.w >= 1.0 - 1e-15
    assert abs(site.m) <= S
    assert 0 <= site.s <= S**2 * (1 + 1e-15)
    assert site.m**2 <= site.s * (1 + 1e-12) + 1e-300


def test_gauss_hermite_moments():
    assert effective.gauss_hermite_expectation(lambda x: np.ones_like(x)) == pytest.approx(1.0, abs=1e-14)
    assert effective.gauss_hermite_expectation(lambda x: x) == pytest.approx(0.0, abs=1e-14)
    assert effective.gauss_hermite_expectation(lambda x: x**2) == pytest.approx(1.0, abs=1e-12)
    assert effective.gauss_hermite_expectation(lambda x: x**4, 128) == pytest.approx(3.0, abs=1e-11)
    assert effective.gauss_hermite_expectation(np.cos) == pytest.approx(math.exp(-0.5), abs=1e-14)


def test_gauss_hermite_errors_and_immutability():
    with pytest.raises(ValueError):
        effective.gauss_hermite_expectation(lambda x: np.where(x > 0, np.inf, 0.0), 8)
    with pytest.raises(ValueError):
        effective.gauss_hermite_rule(1)
    nodes, _ = effective.gauss_hermite_rule(16)
    with pytest.raises(ValueError):
        nodes[0] = 1.0


@pytest.mark.parametrize("S,p", [(1, 2 / 3), (2, 2.0)])
def test_fixed_point_decoupled(S, p):
    fp = effective.fixed_point_solve(ModelParams(S, 1, 0.0))
    assert fp.converged
    assert fp.p == p and fp.q == 0.0


def mc_fixed_point(params, samples=10**6, seed=0, iterations=60):
    """Undamped iteration with Monte Carlo Gaussian expectations (common random numbers)."""
    eta = np.random.default_rng(seed).standard_normal(samples)
    eta = np.concatenate([eta, -eta])
    p, q = 2 / 3, 0.0
    for _ in range(iterations):
        _, m, s = mc_site_moments(eta, p, q, params)
        p_new, q_new = s.mean(), (m * m).mean()
        if max(abs(p_new - p), abs(q_new - q)) < 1e-10:
            break
        p, q = p_new, q_new
    return p_new, q_new


def test_fixed_point_against_monte_carlo_oracle():
    params = ModelParams(1, 1, 0.2, 0.1, 0.0)
    fp = effective.fixed_point_solve(params)
    p_mc, q_mc = mc_fixed_point(params)
    assert fp.converged
    assert fp.p == pytest.approx(p_mc, abs=1e-4)
    assert fp.q == pytest.approx(q_mc, abs=1e-4)


@pytest.mark.parametrize("params", [ACCEPT, ModelParams(2, 1, 0.25, 0.2, -0.3), ModelParams(3, 1, 0.1, 1.0, 0.4)])
def test_fixed_point_consistency(params):
    fp = effective.fixed_point_solve(params)
    assert fp.converged and fp.residual <= fp.tol
    p, q = effective.fixed_point_map(fp.p, fp.q, params)
    assert abs(p - fp.p) <= fp.tol and abs(q - fp.q) <= fp.tol
    assert 0 <= fp.q <= fp.p <= params.S**2


@pytest.mark.parametrize("beta,D", [(0.1, 0.0), (0.3, -0.5), (0.2, 1.0)])
def test_zero_field_fixed_point_has_q_zero(beta, D):
    fp = effective.fixed_point_solve(ModelParams(2, 1, beta, 0.0, D))
    assert fp.converged and fp.q == 0.0


def test_fixed_point_nonconvergence_is_reported():
    fp = effective.fixed_point_solve(ACCEPT, tol=1e-12, max_iter=3)
    assert not fp.converged
    assert fp.iterations == 3 and fp.residual > fp.tol


def test_expected_log_w_examples():
    fp = effective.fixed_point_solve(ModelParams(1, 1, 0.0))
    assert effective.expected_log_w(fp, ModelParams(1, 1, 0.0)) == pytest.approx(math.log(3), rel=1e-15)


def test_cosh_form_matches_log_w():
    params = ModelParams(3, 1, 0.4, 0.7, -0.2)
    eta = np.random.default_rng(1).standard_normal(1000) * 2
    np.testing.assert_allclose(effective.log_w_cosh(eta, 1.5, 0.3, params),
                               effective.log_w(eta, 1.5, 0.3, params), rtol=0, atol=1e-12)


@pytest.mark.parametrize("params", [ACCEPT, ModelParams(2, 1, 0.25, 0.2, -0.3)])
def test_quadrature_doubling(params):
    fp = effective.fixed_point_solve(params)
    a = effective.limit_variance(fp, params, 64)
    b = effective.limit_variance(fp, params, 128)
    assert abs(a.mean_log_w - b.mean_log_w) <= 1e-10
    assert abs(a.var_log_w - b.var_log_w) <= 1e-10
    fp128 = effective.fixed_point_solve(params, node_count=128)
    assert abs(fp128.p - fp.p) <= 1e-10 and abs(fp128.q - fp.q) <= 1e-10


@pytest.mark.parametrize("S,h,D", [(1, 0.0, 0.0), (2, 0.4, -0.7), (3, 1.2, 0.3)])
def test_expected_log_w_matches_decoupled_partition_function(S, h, D):
    params = ModelParams(S, 3, 0.0, h, D)
    fp = effective.fixed_point_solve(params)
    log_z = model.log_partition(model.DisorderSample.draw(3, 0), params)
    assert effective.expected_log_w(fp, params) == pytest.approx(log_z / 3, rel=1e-14)


def test_limit_variance_degenerate_cases():
    law = effective.limit_variance(effective.fixed_point_solve(ModelParams(1, 1, 0.0, 0.5)), ModelParams(1, 1, 0.0, 0.5))
    assert law.nu_squared == 0.0 and law.centering_rate == 0.0
    params = ModelParams(1, 1, 0.2, 0.0, 0.1)
    law = effective.limit_variance(effective.fixed_point_solve(params), params)
    assert law.nu_squared == 0.0 and law.var_log_w == 0.0


def test_limit_variance_against_monte_carlo():
    params = ModelParams(1, 1, 0.2, 0.3, 0.05)
    fp = effective.fixed_point_solve(params)
    law = effective.limit_variance(fp, params)
    rng = np.random.default_rng(2024)
    sums = np.zeros(4)
    for _ in range(10):
        x = effective.log_w(rng.standard_normal(10**6), fp.p, fp.q, params) - law.mean_log_w
        sums += [x.size, x.sum(), (x**2).sum(), (x**4).sum()]
    n, s1, s2, s4 = sums
    var = s2 / n - (s1 / n) ** 2
    se = math.sqrt((s4 / n - (s2 / n) ** 2) / n)
    assert abs(var - law.var_log_w) <= 3 * se
    assert law.nu_squared == pytest.approx(law.var_log_w - 0.04 * fp.q**2 / 2, abs=1e-18)
    assert law.centering_rate == pytest.approx(0.04 * (fp.q**2 - fp.p**2) / 4, rel=1e-15)
    assert law.mean_log_w >= 0


def test_negative_limit_variance_is_flagged():
    params = ModelParams(1, 1, 1.0, 0.0, -6.0)
    fake = FixedPoint(p=0.5, q=0.5, residual=0.0, iterations=0, converged=True)
    with pytest.warns(RuntimeWarning, match="negative"):
        law = effective.limit_variance(fake, params)
    assert law.negative and law.nu_squared < -1e-10


def test_sign_policy():
    with pytest.warns(RuntimeWarning, match="clamping"):
        assert effective.sign_policy(-5e-11) == (0.0, False)
    with pytest.warns(RuntimeWarning, match="negative"):
        assert effective.sign_policy(-1e-6) == (-1e-6, True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert effective.sign_policy(2e-5) == (2e-5, False)
        assert effective.sign_policy(0.0) == (0.0, False)
