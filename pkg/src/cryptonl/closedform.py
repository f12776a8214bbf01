"""Closed-form tau-level correlations for the coplanar CHSH quartet.

The quartet is generated by one angle ``alpha`` in [0, pi/4]::

    a  = ( sin a,  0, cos a)      a' = (-sin 3a, 0, cos 3a)
    b  = (-sin a,  0, cos a)      b' = ( sin 3a, 0, cos 3a)

After averaging the deep-level variable ``mu`` at fixed ``tau`` every pair
correlation is expressed through

    chi_j(alpha, tau) = cos tau / sqrt(cos^2 tau + cot^2(gamma_j(alpha) / 2))

with the four angles returned by :func:`gamma`.  The mixed pairs switch
formula at ``alpha_tilde``, the root of ``4 alpha + pi sin^2 alpha = pi``
(where ``gamma_3 = pi``).  That root is about 0.56222.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Direction

QUARTER_PI = 0.25 * math.pi
HALF_PI = 0.5 * math.pi
SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

# a value sometimes quoted for alpha_tilde; it solves the equation with
# pi/2 on the right-hand side, not pi
QUOTED_ALPHA_TILDE = 0.316


class Branch(enum.Enum):
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class ChshQuartet:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= QUARTER_PI + 1e-15:
            raise ValueError(f"alpha must lie in [0, pi/4], got {self.alpha!r}")

    @property
    def a(self) -> Direction:
        return Direction.in_xz_plane(self.alpha)

    @property
    def a_prime(self) -> Direction:
        return Direction.in_xz_plane(-3.0 * self.alpha)

    @property
    def b(self) -> Direction:
        return Direction.in_xz_plane(-self.alpha)

    @property
    def b_prime(self) -> Direction:
        return Direction.in_xz_plane(3.0 * self.alpha)

    def pairs(self) -> dict[str, tuple[Direction, Direction]]:
        """The four CHSH pairs keyed ``AB``, ``AB'``, ``A'B``, ``A'B'``."""
        return {
            "AB": (self.a, self.b),
            "AB'": (self.a, self.b_prime),
            "A'B": (self.a_prime, self.b),
            "A'B'": (self.a_prime, self.b_prime),
        }


# sign of each pair in F = E(A,B) + E(A,B') + E(A',B) - E(A',B')
CHSH_SIGNS = {"AB": 1.0, "AB'": 1.0, "A'B": 1.0, "A'B'": -1.0}


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any((a < 0.0) | (a > QUARTER_PI + 1e-15)) or np.any(np.isnan(a)):
        raise ValueError("alpha must lie in [0, pi/4]")
    return a


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def gamma(j: int, alpha):
    """Effective half-plane angle ``gamma_j(alpha)`` for ``j`` in 1..4."""
    a = _check_alpha(alpha)
    s1 = np.sin(a) ** 2
    if j == 1:
        g = math.pi * s1
    elif j == 2:
        g = math.pi * np.sin(3.0 * a) ** 2
    elif j == 3:
        g = 4.0 * a + math.pi * s1
    elif j == 4:
        g = 4.0 * a - math.pi * s1
    else:
        raise ValueError(f"j must be 1, 2, 3 or 4, got {j!r}")
    return _out(g)


def _chi_from_gamma(g, tau):
    # cos tau and cot(g/2) written as sin/tan of a difference so the
    # exact zeros at tau = pi/2 and g = pi survive rounding
    g = np.asarray(g, dtype=float)
    c = np.sin(HALF_PI - np.asarray(tau, dtype=float))
    k = np.tan(0.5 * (math.pi - g))
    d = c * c + k * k
    with np.errstate(invalid="ignore", divide="ignore"):
        x = c / np.sqrt(d)
    return np.where((g == 0.0) | (d == 0.0), 0.0, x)


def chi(j: int, alpha, tau):
    """``chi_j(alpha, tau)`` in [-1, 1].

    Conventions: 0 when ``gamma_j = 0``; ``sign(cos tau)`` when
    ``gamma_j = pi``; 0 at the joint point ``gamma_j = pi, tau = pi/2``.
    """
    return _out(_chi_from_gamma(gamma(j, alpha), tau))


def branch(alpha) -> Branch:
    return Branch.LOW if alpha <= alpha_tilde() else Branch.HIGH


def corr_ab(alpha, tau):
    return _out(2.0 * np.abs(chi(1, alpha, tau)) - 1.0)


def corr_apbp(alpha, tau):
    return _out(2.0 * np.abs(chi(2, alpha, tau)) - 1.0)


def corr_mixed(alpha, tau, *, branch_at: float | None = None):
    """Shared correlation of the pairs ``(A, B')`` and ``(A', B)``.

    ``branch_at`` overrides the branch point (defaults to :func:`alpha_tilde`).
    """
    at = alpha_tilde() if branch_at is None else branch_at
    x3 = chi(3, alpha, tau)
    x4 = chi(4, alpha, tau)
    low = np.abs(x3 - x4) - 1.0
    high = 1.0 - np.abs(x3 + x4)
    return _out(np.where(np.asarray(alpha) <= at, low, high))


def f_tau(alpha, tau, *, branch_at: float | None = None):
    """CHSH combination at fixed ``tau``; broadcasts over arrays.

    Range [-4, 4].  Discontinuous only where some ``gamma_j = pi`` meets
    ``tau = pi/2``: at ``(pi/6, pi/2)`` (|F| -> 4 nearby, value -2 on the
    point itself) and at ``(alpha_tilde, pi/2)``.
    """
    e_ab = corr_ab(alpha, tau)
    e_apbp = corr_apbp(alpha, tau)
    e_mix = corr_mixed(alpha, tau, branch_at=branch_at)
    return _out(e_ab + 2.0 * e_mix - e_apbp)


def f_quantum(alpha):
    """Singlet CHSH value on the quartet: ``-3 cos 2alpha + cos 6alpha``."""
    a = np.asarray(alpha, dtype=float)
    return _out(-3.0 * np.cos(2.0 * a) + np.cos(6.0 * a))


def tau_average_abs_chi(j: int, alpha):
    """``(1/pi) int_0^pi |chi_j| dtau``: ``gamma_j/pi``, reflected above pi."""
    g = np.asarray(gamma(j, alpha))
    return _out(np.where(g <= math.pi, g, 2.0 * math.pi - g) / math.pi)


def alpha_tilde_equation(alpha, rhs: float = math.pi):
    """Residual ``4 alpha + pi sin^2 alpha - rhs``."""
    a = np.asarray(alpha, dtype=float)
    return _out(4.0 * a + math.pi * np.sin(a) ** 2 - rhs)


def bisect_root(f, lo: float, hi: float, xtol: float = 1e-12) -> float:
    """Plain bisection for a sign change of ``f`` on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ValueError("root is not bracketed")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@functools.cache
def alpha_tilde() -> float:
    """Branch point between the two mixed-pair formulas (about 0.56222)."""
    return bisect_root(alpha_tilde_equation, 0.5, 0.6, 1e-12)
