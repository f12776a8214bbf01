import math

import numpy as np
import pytest

from cryptonl import closedform as cf
from cryptonl import hvmodel
from cryptonl import montecarlo as mc
from cryptonl.closedform import ChshQuartet, TSIRELSON
from cryptonl.geometry import Direction, stream

pi = math.pi
SINGLET = hvmodel.SingletModel()


def cfg(n, seed=mc.DEFAULT_SEED, threads=1):
    return mc.McConfig(seed=seed, n=n, threads=threads)


def test_config_validation():
    with pytest.raises(ValueError):
        mc.McConfig(n=0)
    with pytest.raises(ValueError):
        mc.McConfig(seed=-1)
    with pytest.raises(ValueError):
        mc.McConfig(seed=2**64)
    with pytest.raises(ValueError):
        mc.McConfig(threads=0)
    mc.McConfig(seed=2**64 - 1, n=1)


def test_correlation_examples():
    a = Direction.from_vector([0.2, 0.3, 0.9])
    e = mc.estimate_correlation(SINGLET, a, a, cfg(10**5))
    assert e.mean == -1.0 and e.stderr == 0.0 and e.n == 10**5

    q = ChshQuartet(pi / 8)
    e = mc.estimate_correlation(SINGLET, q.a, q.b, cfg(10**6))
    assert e.within(-math.cos(pi / 4), 4)

    assert mc.estimate_correlation(SINGLET, q.a, q.b, cfg(5000)) == \
        mc.estimate_correlation(SINGLET, q.a, q.b, cfg(5000))


def test_marginal_examples():
    a, b = Direction.from_vector([0.5, -0.5, 0.2]), Direction.from_vector([0.1, 0.9, -0.3])
    for side in ("A", "B"):
        e = mc.estimate_marginal(SINGLET, side, a, b, cfg(10**6))
        assert e.within(0.0, 4)
        # +-1 variable with mean near zero: stderr close to 1/sqrt(n)
        assert e.stderr == pytest.approx(1 / math.sqrt(10**6), rel=0.1)
    e = mc.estimate_marginal(hvmodel.ConstantModel(), "A", a, b, cfg(1000))
    assert e.mean == 1.0
    e = mc.estimate_marginal(SINGLET, "B", a, b, cfg(10**5), tau=0.8)
    assert e.within(0.0, 4)
    with pytest.raises(ValueError):
        mc.estimate_marginal(SINGLET, "C", a, b, cfg(10))


def test_correlation_at_tau_examples():
    q = ChshQuartet(pi / 4)
    e = mc.estimate_correlation_at_tau(SINGLET, q.a, q.b, 0.0, cfg(10**6))
    assert e.within(math.sqrt(2) - 1, 4)
    q = ChshQuartet(0.4)
    for k, (x, y) in enumerate(q.pairs().values()):
        e = mc.estimate_correlation_at_tau(SINGLET, x, y, pi / 2, cfg(10**5), term=k)
        assert e.within(-1.0, 4)
    a = Direction.from_vector([0.6, 0.0, 0.8])
    e = mc.estimate_correlation_at_tau(SINGLET, a, a, 1.3, cfg(10**4))
    assert e.mean == -1.0


def test_F_examples():
    e = mc.estimate_F(SINGLET, ChshQuartet(pi / 8), cfg(10**6))
    assert e.within(-TSIRELSON, 4)
    e = mc.estimate_F(SINGLET, ChshQuartet(pi / 6), cfg(10**6), tau=pi / 2 - 1e-3)
    assert e.mean < -3.9
    assert e.within(cf.f_tau(pi / 6, pi / 2 - 1e-3), 4)
    e = mc.estimate_F(SINGLET, ChshQuartet(0.0), cfg(10**4))
    assert e.mean == -2.0


def test_reproducible_across_worker_counts():
    q = ChshQuartet(0.35)
    n = 5 * mc.CHUNK + 123
    runs = [mc.estimate_correlation(SINGLET, q.a_prime, q.b_prime, cfg(n, threads=t)) for t in (1, 3, 8)]
    assert runs[0] == runs[1] == runs[2]
    runs = [mc.estimate_F(SINGLET, q, cfg(n, threads=t), tau=1.1) for t in (1, 4)]
    assert runs[0] == runs[1]


def test_seed_changes_result():
    q = ChshQuartet(0.35)
    e1 = mc.estimate_correlation(SINGLET, q.a, q.b, cfg(10**4, seed=1))
    e2 = mc.estimate_correlation(SINGLET, q.a, q.b, cfg(10**4, seed=2))
    assert e1 != e2


def test_consistency_with_closed_form_at_random_points():
    pts = stream(99, 0).random((10, 2)) * np.array([pi / 4, pi])
    for k, (a, t) in enumerate(pts):
        q = ChshQuartet(float(a))
        refs = {"AB": cf.corr_ab(a, t), "A'B'": cf.corr_apbp(a, t), "AB'": cf.corr_mixed(a, t)}
        for j, name in enumerate(refs):
            x, y = q.pairs()[name]
            e = mc.estimate_correlation_at_tau(SINGLET, x, y, float(t), cfg(2 * 10**5), term=4 * k + j)
            assert abs(e.mean - refs[name]) < 5 * e.stderr


def test_stderr_scales_as_inverse_sqrt_n():
    q = ChshQuartet(0.2)
    e4 = mc.estimate_correlation(SINGLET, q.a, q.b_prime, cfg(10**4))
    e6 = mc.estimate_correlation(SINGLET, q.a, q.b_prime, cfg(10**6))
    assert e4.stderr / e6.stderr == pytest.approx(10.0, rel=0.15)


def test_generic_path_matches_kernel_path():
    class Generic(hvmodel.SingletModel):
        def sign_normals(self, a, b):
            return None

    q = ChshQuartet(0.3)
    n = 2 * mc.CHUNK
    e1 = mc.estimate_correlation(SINGLET, q.a, q.b_prime, cfg(n))
    e2 = mc.estimate_correlation(Generic(), q.a, q.b_prime, cfg(n))
    assert e1 == e2
