import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryptonl import baselines, hvmodel
from cryptonl import closedform as cf
from cryptonl.closedform import ChshQuartet
from cryptonl.geometry import Direction, HiddenPoint, X_AXIS, Z_AXIS, lambda_array, stream, sample_sphere

pi = math.pi
SINGLET = hvmodel.SingletModel()


def unit_vectors():
    comp = st.floats(-1.0, 1.0, allow_nan=False)
    return st.tuples(comp, comp, comp).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
        Direction.from_vector)


def random_pairs(n, seed):
    mu, tau = sample_sphere(stream(seed, 0), 2 * n)
    d = [Direction.from_vector(v) for v in lambda_array(mu, tau)]
    return list(zip(d[:n], d[n:]))


def test_outcome_examples():
    north = HiddenPoint(0.0, 0.0)
    assert SINGLET.outcome_a(Z_AXIS, Z_AXIS, north) == 1
    assert SINGLET.outcome_b(Z_AXIS, Z_AXIS, north) == -1

    a, b = Direction.in_xz_plane(pi / 8), Direction.in_xz_plane(-pi / 8)
    p = HiddenPoint(pi / 2, 0.0)  # lambda = x axis
    np.testing.assert_allclose(p.vector.array, X_AXIS.array, atol=1e-16)
    assert SINGLET.outcome_a(a, b, p) == 1
    assert SINGLET.outcome_b(a, b, p) == 1


@settings(max_examples=300, deadline=None)
@given(unit_vectors(), st.floats(0, 2 * pi, exclude_max=True), st.floats(0, pi, exclude_max=True))
def test_perfect_anticorrelation_for_equal_settings(a, mu, tau):
    p = HiddenPoint(mu, tau)
    if abs(a.array @ p.vector.array) < 1e-12:
        return
    assert SINGLET.outcome_a(a, a, p) * SINGLET.outcome_b(a, a, p) == -1


@settings(max_examples=300, deadline=None)
@given(unit_vectors(), unit_vectors(), st.floats(0, pi, exclude_max=True),
       st.floats(0, 2 * pi, exclude_max=True))
def test_antipode_flips_outcome_b(a, b, tau, mu):
    from cryptonl.geometry import rotated_pair
    bh = rotated_pair(a, b).b_hat.array
    if abs(bh @ lambda_array(mu, tau)) < 1e-9:
        return
    p, q = HiddenPoint(mu, tau), HiddenPoint((mu + pi) % (2 * pi), tau)
    assert SINGLET.outcome_b(a, b, p) == -SINGLET.outcome_b(a, b, q)


def test_outcomes_are_deterministic_and_order_free():
    pairs = random_pairs(5, 3)
    mu, tau = sample_sphere(stream(3, 1), 50)
    first = [(SINGLET.outcomes_a(a, b, mu, tau), SINGLET.outcomes_b(a, b, mu, tau)) for a, b in pairs]
    # evaluate Bob first, in reverse order of pairs
    again = [(None, SINGLET.outcomes_b(a, b, mu, tau)) for a, b in reversed(pairs)][::-1]
    again = [(SINGLET.outcomes_a(a, b, mu, tau), g[1]) for (a, b), g in zip(pairs, again)]
    for (fa, fb), (ga, gb) in zip(first, again):
        np.testing.assert_array_equal(fa, ga)
        np.testing.assert_array_equal(fb, gb)
    assert set(np.unique(first[0][0])) <= {-1, 1}


def test_outcome_a_depends_on_distant_setting():
    grid = [Direction.in_xz_plane(t) for t in np.linspace(0, pi, 9)]
    pts = [HiddenPoint(m, t) for m in np.linspace(0.1, 6.0, 12) for t in np.linspace(0, 3.0, 6)]
    witness = None
    for a, b, b2 in itertools.product(grid, grid, grid):
        for p in pts:
            if SINGLET.outcome_a(a, b, p) != SINGLET.outcome_a(a, b2, p):
                witness = (a, b, b2, p)
                break
        if witness:
            break
    assert witness is not None


def test_marginal_examples():
    a, b = Direction.from_vector([0.2, 0.5, -0.7]), Direction.from_vector([-0.9, 0.1, 0.3])
    for tau in (0.0, 0.9, pi / 2, 2.4):
        assert abs(hvmodel.marginal_f(SINGLET, a, b, tau)) < 1e-10
        assert abs(hvmodel.marginal_g(SINGLET, a, b, tau)) < 1e-10
    const = hvmodel.ConstantModel()
    assert hvmodel.marginal_f(const, a, b, 0.3) == pytest.approx(1.0, abs=1e-14)
    assert hvmodel.marginal_g(const, a, b, 0.3) == pytest.approx(1.0, abs=1e-14)
    hemi = hvmodel.HemisphereModel()
    assert abs(hvmodel.marginal_f(hemi, a, b, 1.1)) < 1e-10
    assert abs(hvmodel.marginal_g(hemi, a, b, 1.1)) < 1e-10


def test_crypto_nonlocality_random_settings():
    taus = np.linspace(0.0, pi, 20, endpoint=False) + 0.013
    worst = 0.0
    for a, b in random_pairs(20, 8):
        for t in taus:
            worst = max(worst, abs(hvmodel.marginal_f(SINGLET, a, b, t)),
                        abs(hvmodel.marginal_g(SINGLET, a, b, t)))
    assert worst < 1e-10


def test_intermediate_correlation_examples():
    a = Direction.from_vector([0.4, -0.4, 0.8])
    for tau in (0.0, 1.2, 2.9):
        assert hvmodel.intermediate_correlation(SINGLET, a, a, tau) == pytest.approx(-1.0, abs=1e-10)
    q = ChshQuartet(pi / 4)
    v = hvmodel.intermediate_correlation(SINGLET, q.a, q.b, 0.0)
    assert v == pytest.approx(math.sqrt(2) - 1, abs=1e-9)
    q = ChshQuartet(0.33)
    for x, y in q.pairs().values():
        assert hvmodel.intermediate_correlation(SINGLET, x, y, pi / 2) == pytest.approx(-1.0, abs=1e-10)


def test_intermediate_correlation_generic_density_path():
    class Reweighted(hvmodel.HemisphereModel):
        # same density written out explicitly, to take the generic branch
        def mu_density(self, mu, tau):
            return 0.25 * np.abs(np.sin(mu))

    m = Reweighted()
    assert hvmodel.intermediate_correlation(m, None, None, 0.7) == pytest.approx(-1.0, abs=1e-10)
    assert hvmodel.marginal_f(m, None, None, 0.7) == pytest.approx(0.0, abs=1e-10)


def test_full_expectation_examples():
    a = Direction.from_vector([0.1, 0.7, 0.2])
    assert hvmodel.full_expectation(SINGLET, a, a) == pytest.approx(-1.0, abs=1e-8)
    assert hvmodel.full_expectation(SINGLET, X_AXIS, Z_AXIS) == pytest.approx(0.0, abs=1e-8)
    q = ChshQuartet(pi / 8)
    assert hvmodel.full_expectation(SINGLET, q.a, q.b) == pytest.approx(-math.cos(pi / 4), abs=1e-8)


@pytest.mark.slow
def test_full_expectation_matches_singlet_on_random_pairs():
    worst = max(abs(hvmodel.full_expectation(SINGLET, a, b) - baselines.quantum_correlation(a, b))
                for a, b in random_pairs(50, 17))
    assert worst < 1e-8


def test_tau_breakpoints_include_kink():
    a, b = Direction.from_vector([0.3, 0.8, 0.1]), Direction.from_vector([-0.5, 0.2, 0.6])
    pts = SINGLET.tau_breakpoints(a, b)
    assert pi / 2 in pts and len(pts) == 2
    assert all(0.0 <= p < pi for p in pts)
    # coplanar xz settings: the kink coincides with a circle containing y
    q = ChshQuartet(0.3)
    assert SINGLET.tau_breakpoints(q.a, q.b) == (pi / 2,)


def test_signalling_model_changes_marginal_with_distant_setting():
    m = hvmodel.SignallingModel()
    a = Direction.from_vector([0.3, 0.1, 0.9])
    up, down = Direction.from_vector([0.2, 0.0, 0.9]), Direction.from_vector([0.2, 0.0, -0.9])
    assert hvmodel.marginal_f(m, a, up, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert abs(hvmodel.marginal_f(m, a, down, 0.5)) < 1e-10


def test_full_expectation_with_closed_form_quartet():
    # the tau average of the closed forms and of the model agree pair by pair
    a = 0.27
    q = ChshQuartet(a)
    total = sum(cf.CHSH_SIGNS[n] * hvmodel.full_expectation(SINGLET, x, y)
                for n, (x, y) in q.pairs().items())
    assert total == pytest.approx(cf.f_quantum(a), abs=4e-8)
