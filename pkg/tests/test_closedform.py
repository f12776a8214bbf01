import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryptonl import closedform as cf
from cryptonl import quadrature
from cryptonl.closedform import ChshQuartet, TSIRELSON
from cryptonl.geometry import angle_between

pi = math.pi
alphas = st.floats(0.0, pi / 4, allow_nan=False)
taus = st.floats(0.0, pi, allow_nan=False, exclude_max=True)


def test_quartet_construction():
    a = 0.3
    q = ChshQuartet(a)
    np.testing.assert_allclose(q.a.array, [math.sin(a), 0, math.cos(a)], atol=1e-16)
    np.testing.assert_allclose(q.b.array, [-math.sin(a), 0, math.cos(a)], atol=1e-16)
    np.testing.assert_allclose(q.a_prime.array, [-math.sin(3 * a), 0, math.cos(3 * a)], atol=1e-16)
    np.testing.assert_allclose(q.b_prime.array, [math.sin(3 * a), 0, math.cos(3 * a)], atol=1e-16)
    assert angle_between(q.a, q.b) == pytest.approx(2 * a, abs=1e-14)
    assert angle_between(q.a, q.b_prime) == pytest.approx(2 * a, abs=1e-14)
    assert angle_between(q.a_prime, q.b) == pytest.approx(2 * a, abs=1e-14)
    assert angle_between(q.a_prime, q.b_prime) == pytest.approx(6 * a, abs=1e-14)
    with pytest.raises(ValueError):
        ChshQuartet(1.0)


def test_gamma_examples():
    assert all(cf.gamma(j, 0.0) == 0.0 for j in (1, 2, 3, 4))
    a = pi / 8
    s2 = math.sin(a) ** 2
    exact = [pi * s2, pi * math.sin(3 * a) ** 2, 4 * a + pi * s2, 4 * a - pi * s2]
    for j, want in zip((1, 2, 3, 4), exact):
        assert cf.gamma(j, a) == pytest.approx(want, abs=1e-15)
    # rounded reference values agree to about 2e-5
    for j, approx in zip((1, 2, 3, 4), (0.460055, 2.681537, 2.030852, 1.110742)):
        assert cf.gamma(j, a) == pytest.approx(approx, abs=1e-4)
    assert cf.gamma(2, pi / 6) == pi


def test_chi_examples():
    for j in (1, 2, 3, 4):
        assert cf.chi(j, 0.3, pi / 2) == pytest.approx(0.0, abs=1e-16)
    for a in (0.1, pi / 8, 0.5):
        for j in (1, 2, 3, 4):
            g = cf.gamma(j, a)
            if 0 < g <= pi:
                assert cf.chi(j, a, 0.0) == pytest.approx(math.sin(g / 2), abs=1e-15)
    assert cf.chi(2, pi / 6, pi / 4) == 1.0
    assert cf.chi(2, pi / 6, 3 * pi / 4) == -1.0


@settings(max_examples=500, deadline=None)
@given(alphas, taus)
def test_chi_in_unit_interval(a, t):
    for j in (1, 2, 3, 4):
        assert -1.0 <= cf.chi(j, a, t) <= 1.0


def test_corr_ab_examples():
    for t in (0.0, 1.0, 2.5):
        assert cf.corr_ab(0.0, t) == -1.0
        assert cf.corr_ab(0.37, pi / 2) == pytest.approx(-1.0, abs=1e-15)
    assert cf.corr_ab(pi / 4, 0.0) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)


def test_corr_apbp_examples():
    assert cf.corr_apbp(0.0, 1.3) == -1.0
    assert cf.corr_apbp(pi / 6, pi / 4) == 1.0
    want = 2 * math.sin(cf.gamma(2, pi / 8) / 2) - 1
    assert cf.corr_apbp(pi / 8, 0.0) == pytest.approx(want, abs=1e-15)
    # rounded reference carries the gamma_2 rounding above
    assert cf.corr_apbp(pi / 8, 0.0) == pytest.approx(0.947343, abs=1e-4)


def test_corr_mixed_examples():
    assert cf.corr_mixed(0.0, 0.9) == -1.0
    assert cf.corr_mixed(pi / 4, 0.0) == pytest.approx(1 - math.sqrt(2), abs=1e-14)
    at = cf.alpha_tilde()
    for t in (0.1, 0.5, 1.0, 2.0, 3.0):
        low = cf.corr_mixed(at, t, branch_at=10.0)
        high = cf.corr_mixed(at, t, branch_at=0.0)
        assert low == pytest.approx(high, abs=1e-12)
        assert low == pytest.approx(-abs(cf.chi(4, at, t)), abs=1e-12)


def test_f_tau_examples():
    for t in (0.0, 0.4, 2.2):
        assert cf.f_tau(0.0, t) == -2.0
    f = cf.f_tau(pi / 8, 0.0)
    assert f == pytest.approx(-2.846, abs=5e-4)
    assert abs(f) > TSIRELSON
    assert cf.f_tau(pi / 6, pi / 2 - 1e-4) < -3.99


def test_f_tau_assembles_correlations():
    rng = np.random.default_rng(5)
    a, t = rng.uniform(0, pi / 4, 200), rng.uniform(0, pi, 200)
    want = cf.corr_ab(a, t) + 2 * cf.corr_mixed(a, t) - cf.corr_apbp(a, t)
    np.testing.assert_allclose(cf.f_tau(a, t), want, atol=1e-14)


@settings(max_examples=2000, deadline=None)
@given(alphas, taus)
def test_ranges(a, t):
    for fn in (cf.corr_ab, cf.corr_apbp, cf.corr_mixed):
        assert -1.0 - 1e-15 <= fn(a, t) <= 1.0 + 1e-15
    assert abs(cf.f_tau(a, t)) <= 4.0


def test_alpha_tilde():
    at = cf.alpha_tilde()
    assert abs(cf.alpha_tilde_equation(at)) < 1e-10
    assert at == pytest.approx(0.56222, abs=1e-5)
    assert at > pi / 6
    assert cf.branch(at - 1e-9) is cf.Branch.LOW
    assert cf.branch(at + 1e-9) is cf.Branch.HIGH
    assert cf.branch(pi / 6) is cf.Branch.LOW


def test_quoted_alpha_tilde_solves_a_different_equation():
    # 0.316 misses the defining equation by a wide margin
    assert abs(cf.alpha_tilde_equation(cf.QUOTED_ALPHA_TILDE)) > 1.0
    root = cf.bisect_root(lambda a: cf.alpha_tilde_equation(a, pi / 2), 0.2, 0.4)
    assert root == pytest.approx(0.316, abs=1e-3)


def test_bisect_root():
    r = cf.bisect_root(lambda x: x * x - 2.0, 0.0, 2.0, 1e-14)
    assert r == pytest.approx(math.sqrt(2), abs=1e-13)
    with pytest.raises(ValueError):
        cf.bisect_root(lambda x: x * x + 1.0, 0.0, 2.0)


def test_f_quantum_examples():
    assert cf.f_quantum(0.0) == -2.0
    assert abs(cf.f_quantum(pi / 8) + 2 * math.sqrt(2)) <= 1e-12
    assert cf.f_quantum(pi / 4) == pytest.approx(0.0, abs=1e-15)


def test_tau_average_abs_chi_examples():
    assert cf.tau_average_abs_chi(1, 0.0) == 0.0
    for j, want in ((1, 0.5), (3, 0.5)):
        r = quadrature.integrate_tau(lambda t: np.abs(cf.chi(j, pi / 4, t)), 1e-11)
        assert r.value == pytest.approx(want, abs=1e-9)
        assert cf.tau_average_abs_chi(j, pi / 4) == pytest.approx(want, abs=1e-15)


def test_signed_chi_integral_vanishes():
    # the signed integrand is odd about pi/2, so only the absolute form is useful
    for a in (0.2, pi / 8, 0.7):
        for j in (1, 2, 3, 4):
            r = quadrature.integrate_tau(lambda t: cf.chi(j, a, t), 1e-11)
            assert r.value == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("a", np.linspace(0.0, pi / 4, 25))
def test_tau_average_abs_chi_matches_quadrature(a):
    for j in (1, 2, 3, 4):
        r = quadrature.integrate_tau(lambda t: np.abs(cf.chi(j, a, t)), 1e-11)
        assert r.value == pytest.approx(cf.tau_average_abs_chi(j, a), abs=1e-9)


@pytest.mark.parametrize("a", np.linspace(0.0, pi / 4, 25))
def test_quantum_recovery(a):
    r = quadrature.integrate_tau(lambda t: cf.f_tau(a, t), 1e-9)
    assert r.value == pytest.approx(cf.f_quantum(a), abs=1e-6)


def test_branch_continuity_regression():
    # empirical constant C ~ 3.37, frozen with headroom as C = 4
    at, d = cf.alpha_tilde(), 1e-6
    t = np.array([0.1, 0.5, 1.0, 2.0, 3.0])
    jump = np.abs(cf.f_tau(at - d, t) - cf.f_tau(at + d, t))
    assert np.all(jump <= 4.0 * d)


def test_discontinuity_is_localized():
    # two-sided limits along tau agree away from the singular points
    rng = np.random.default_rng(11)
    a = rng.uniform(0, pi / 4, 10_000)
    t = rng.uniform(0, pi, 10_000)
    keep = (np.hypot(a - pi / 6, t - pi / 2) > 1e-2) & (np.hypot(a - cf.alpha_tilde(), t - pi / 2) > 1e-2)
    a, t = a[keep], t[keep]
    # slopes reach ~1e3 near the excluded discs, so the probe step must be
    # small for a finite difference to stand in for the limit
    h = 1e-11
    np.testing.assert_allclose(cf.f_tau(a, t - h), cf.f_tau(a, t + h), atol=1e-6)


def test_singular_point_convention():
    assert cf.f_tau(pi / 6, pi / 2) == -2.0
    # approached from below, |F| climbs toward 4
    assert cf.f_tau(pi / 6, pi / 2 - 1e-3) == pytest.approx(-3.986, abs=5e-4)


def test_vectorized_matches_scalar():
    a = np.array([0.0, 0.2, pi / 8, 0.6])
    t = np.array([0.0, 1.0, 2.0, 3.0])
    vec = cf.f_tau(a, t)
    assert [cf.f_tau(float(x), float(y)) for x, y in zip(a, t)] == list(vec)
    assert isinstance(cf.f_tau(0.2, 1.0), float)
