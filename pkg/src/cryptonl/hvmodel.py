"""Two-level hidden-variable models and their partial averages.

A model assigns deterministic outcomes ``+-1`` to both parties as functions
of the two settings and the hidden point ``(mu, tau)``.  ``tau`` is the
upper-level variable with density ``rho(tau)``; ``mu`` is the deep-level
variable with conditional density ``rho(mu | tau)``.  Averaging over ``mu``
alone gives the tau-level quantities (:func:`marginal_f`, :func:`marginal_g`,
:func:`intermediate_correlation`); averaging over ``tau`` as well gives
:func:`full_expectation`.
"""

from __future__ import annotations

import abc
import functools
import math

import numpy as np

from . import quadrature
from .geometry import (
    Direction,
    HiddenPoint,
    lambda_array,
    rotated_pair,
    sample_mu_given_tau,
    sample_sphere,
)
from .quadrature import ConvergenceError, QuadResult


def _pm1(x) -> np.ndarray:
    return np.where(np.asarray(x) >= 0.0, 1, -1)


_cached_pair = functools.lru_cache(maxsize=1024)(rotated_pair)


def _pair(a, b):
    # integrands call the outcome functions many times per setting pair
    try:
        return _cached_pair(a, b)
    except TypeError:  # unhashable input such as an ndarray
        return rotated_pair(a, b)


class TwoLevelModel(abc.ABC):
    """Outcome functions plus the two densities of a two-level model.

    Subclasses implement the vectorized ``outcomes_a`` / ``outcomes_b``
    (broadcasting over ``mu`` and ``tau``).  Densities and samplers default
    to the uniform sphere in ``(mu, tau)`` coordinates.
    """

    @abc.abstractmethod
    def outcomes_a(self, a, b, mu, tau) -> np.ndarray: ...

    @abc.abstractmethod
    def outcomes_b(self, a, b, mu, tau) -> np.ndarray: ...

    def outcome_a(self, a, b, p: HiddenPoint) -> int:
        return int(self.outcomes_a(a, b, np.float64(p.mu), np.float64(p.tau)))

    def outcome_b(self, a, b, p: HiddenPoint) -> int:
        return int(self.outcomes_b(a, b, np.float64(p.mu), np.float64(p.tau)))

    def tau_density(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), 1.0 / math.pi)

    def mu_density(self, mu, tau):
        return quadrature.mu_weight(mu)

    def sample_hidden(self, rng, size):
        return sample_sphere(rng, size)

    def sample_mu(self, rng, tau, size):
        return sample_mu_given_tau(rng, size)

    def sign_normals(self, a, b):
        """``((n_a, s_a), (n_b, s_b))`` if outcomes are ``s sign(n . lambda)``, else None."""
        return None

    def tau_breakpoints(self, a, b) -> tuple[float, ...]:
        """``tau`` values where the tau-level correlation may have kinks."""
        return (0.5 * math.pi,)


class SingletModel(TwoLevelModel):
    """The singlet instance: ``sign(a_hat . lambda)`` and ``-sign(b_hat . lambda)``.

    ``(a_hat, b_hat)`` come from :func:`~cryptonl.geometry.rotated_pair`, so
    each outcome depends on both settings.
    """

    def sign_normals(self, a, b):
        rp = _pair(a, b)
        return (rp.a_hat.array, 1), (rp.b_hat.array, -1)

    def tau_breakpoints(self, a, b):
        # the two outcome boundaries meet on the mu-circle that contains
        # a_hat x b_hat; E_tau has a kink at that circle's tau
        rp = _pair(a, b)
        n = np.cross(rp.a_hat.array, rp.b_hat.array)
        pts = [0.5 * math.pi]
        if np.hypot(n[0], n[1]) > 1e-12:
            pts.append(math.atan2(n[1], n[0]) % math.pi)
        return tuple(sorted(set(pts)))

    def outcomes_a(self, a, b, mu, tau):
        rp = _pair(a, b)
        return _pm1(lambda_array(mu, tau) @ rp.a_hat.array)

    def outcomes_b(self, a, b, mu, tau):
        rp = _pair(a, b)
        return -_pm1(lambda_array(mu, tau) @ rp.b_hat.array)

    def __repr__(self):
        return "SingletModel()"


# --- manufactured models for exercising the averaging machinery -------------

class ConstantModel(TwoLevelModel):
    """Both outcomes fixed to ``value`` (default +1)."""

    def __init__(self, value: int = 1):
        self.value = int(value)

    def outcomes_a(self, a, b, mu, tau):
        return np.full(np.broadcast(np.asarray(mu), np.asarray(tau)).shape, self.value)

    outcomes_b = outcomes_a


class HemisphereModel(TwoLevelModel):
    """Setting-independent outcomes ``sign(cos mu)`` and ``-sign(cos mu)``."""

    def outcomes_a(self, a, b, mu, tau):
        return _pm1(np.cos(mu) + 0.0 * np.asarray(tau))

    def outcomes_b(self, a, b, mu, tau):
        return -self.outcomes_a(a, b, mu, tau)


class SignallingModel(SingletModel):
    """Alice's outcome is +1 outright when ``b . z > 0``; signals through ``b``."""

    def sign_normals(self, a, b):
        return None

    def outcomes_a(self, a, b, mu, tau):
        base = super().outcomes_a(a, b, mu, tau)
        if np.asarray(b, dtype=float)[2] > 0.0:
            return np.ones_like(base)
        return base

    def __repr__(self):
        return "SignallingModel()"


# --- partial and full averages ----------------------------------------------

def _checked(r: QuadResult, tol: float) -> float:
    if r.error_bound > tol:
        raise ConvergenceError(r, tol)
    return r.value


def _mu_average(model: TwoLevelModel, g, tau: float, tol: float) -> QuadResult:
    if type(model).mu_density is TwoLevelModel.mu_density:
        return quadrature.integrate_mu(g, tol)
    return quadrature.integrate(
        lambda m: g(m) * model.mu_density(m, tau), 0.0, 2.0 * math.pi, tol,
        breakpoints=(math.pi,), factors=(g,),
    )


def _marginal(model, a, b, tau, tol, side):
    lin = model.sign_normals(a, b)
    if lin is not None and type(model).mu_density is TwoLevelModel.mu_density:
        n, s = lin[0] if side == "a" else lin[1]
        return quadrature.sign_integral_mu(n, s, tau, tol)
    out = model.outcomes_a if side == "a" else model.outcomes_b
    return _mu_average(model, lambda m: out(a, b, m, tau), tau, tol)


def marginal_f_result(model, a, b, tau, tol=quadrature.MU_TOL) -> QuadResult:
    return _marginal(model, a, b, tau, tol, "a")


def marginal_g_result(model, a, b, tau, tol=quadrature.MU_TOL) -> QuadResult:
    return _marginal(model, a, b, tau, tol, "b")


def marginal_f(model: TwoLevelModel, a, b, tau: float, tol: float = quadrature.MU_TOL) -> float:
    """Alice's tau-level marginal ``int outcome_a rho(mu|tau) dmu``."""
    return _checked(marginal_f_result(model, a, b, tau, tol), tol)


def marginal_g(model: TwoLevelModel, a, b, tau: float, tol: float = quadrature.MU_TOL) -> float:
    """Bob's tau-level marginal ``int outcome_b rho(mu|tau) dmu``."""
    return _checked(marginal_g_result(model, a, b, tau, tol), tol)


def intermediate_correlation_result(model, a, b, tau, tol=quadrature.MU_TOL) -> QuadResult:
    if type(model).mu_density is TwoLevelModel.mu_density:
        return quadrature.pair_correlation_oracle(a, b, tau, tol, model=model)

    def fa(m):
        return model.outcomes_a(a, b, m, tau)

    def fb(m):
        return model.outcomes_b(a, b, m, tau)

    return quadrature.integrate(
        lambda m: fa(m) * fb(m) * model.mu_density(m, tau), 0.0, 2.0 * math.pi, tol,
        breakpoints=(math.pi,), factors=(fa, fb),
    )


def intermediate_correlation(model: TwoLevelModel, a, b, tau: float,
                             tol: float = quadrature.MU_TOL) -> float:
    """``E_tau(A, B)``: the ``mu`` average of ``outcome_a * outcome_b``."""
    return _checked(intermediate_correlation_result(model, a, b, tau, tol), tol)


def full_expectation_result(model, a, b, tol=quadrature.TAU_TOL,
                            inner_tol=quadrature.MU_TOL) -> QuadResult:
    def e_tau(taus):
        taus = np.atleast_1d(taus)
        vals = np.array([intermediate_correlation(model, a, b, t, inner_tol) for t in taus])
        return vals * model.tau_density(taus) * math.pi

    # E_tau is continuous (kinks only), so no flip scan
    return quadrature.integrate_tau(e_tau, tol, breakpoints=model.tau_breakpoints(a, b), scan_n=0)


def full_expectation(model: TwoLevelModel, a, b, tol: float = quadrature.TAU_TOL) -> float:
    """``<A B>``: the ``tau`` average of :func:`intermediate_correlation`."""
    return _checked(full_expectation_result(model, a, b, tol), tol)
