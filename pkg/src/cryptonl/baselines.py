"""Reference correlation sources: singlet, PR box, local deterministic strategies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .closedform import QUARTER_PI, f_quantum
from .geometry import _vec


def quantum_correlation(a, b) -> float:
    """Singlet correlation ``-a . b``."""
    return -float(_vec(a) @ _vec(b))


# --- Popescu-Rohrlich box ---------------------------------------------------

@dataclass(frozen=True)
class PrBox:
    """Bits in, bits out: outputs are uniform and obey ``a XOR b = x AND y``."""

    @staticmethod
    def probability(a: int, b: int, x: int, y: int) -> float:
        return 0.5 if (a ^ b) == (x & y) else 0.0

    @staticmethod
    def sample(x: int, y: int, rng: np.random.Generator, size=None):
        return pr_sample(x, y, rng, size)


def _check_bit(*bits):
    for v in bits:
        if v not in (0, 1):
            raise ValueError(f"expected a bit, got {v!r}")


def to_pm1(bit):
    """Output remap ``a' = 1 - 2a``."""
    return 1 - 2 * np.asarray(bit)


def pr_correlation(x: int, y: int) -> float:
    """Exact ``E(x, y)`` of the PR box in the +-1 remap."""
    _check_bit(x, y)
    return math.fsum(
        PrBox.probability(a, b, x, y) * int(to_pm1(a)) * int(to_pm1(b))
        for a in (0, 1) for b in (0, 1)
    )


def pr_F() -> float:
    """``E(0,0) + E(0,1) + E(1,0) - E(1,1)``."""
    return pr_correlation(0, 0) + pr_correlation(0, 1) + pr_correlation(1, 0) - pr_correlation(1, 1)


def pr_sample(x: int, y: int, rng: np.random.Generator, size=None):
    """Draw output bits ``(a, b)``: ``a`` uniform, ``b = a XOR (x AND y)``."""
    _check_bit(x, y)
    a = rng.integers(0, 2, size=size)
    b = a ^ (x & y)
    return a, b


# --- local deterministic strategies -----------------------------------------

@dataclass(frozen=True)
class LocalStrategy:
    A: int
    A_prime: int
    B: int
    B_prime: int

    def F(self) -> int:
        return (self.A * self.B + self.A * self.B_prime
                + self.A_prime * self.B - self.A_prime * self.B_prime)


def local_strategies():
    for signs in itertools.product((1, -1), repeat=4):
        yield LocalStrategy(*signs)


def local_max_F() -> tuple[float, LocalStrategy]:
    """Largest ``|F|`` over the 16 deterministic local strategies, with a witness."""
    best = max(local_strategies(), key=lambda s: (abs(s.F()), s.F()))
    return float(abs(best.F())), best


def quantum_max_F(n_scan: int = 2001) -> tuple[float, float]:
    """``max |f_quantum|`` over the quartet family: grid scan then golden section.

    Returns ``(value, alpha_at_max)``.
    """
    alpha = np.linspace(0.0, QUARTER_PI, n_scan)
    vals = np.abs(f_quantum(alpha))
    i = int(np.argmax(vals))
    if i in (0, n_scan - 1):
        # no interior bracket; the endpoint is the maximum on the closed range
        return float(vals[i]), float(alpha[i])
    lo = alpha[max(i - 1, 0)]
    hi = alpha[min(i + 1, n_scan - 1)]
    res = optimize.minimize_scalar(
        lambda t: -abs(f_quantum(t)), bracket=(lo, alpha[i], hi), method="golden",
        tol=1e-12,
    )
    return float(-res.fun), float(res.x)
