"""Numerical integration oracles over ``mu`` and ``tau``.

The integrands met here are piecewise constant (products of signs) times a
smooth weight, so plain high-order quadrature converges badly across the
jumps.  The strategy is:

1. scan the integrand (or each sign factor separately) on a uniform grid of
   ``scan_n`` cells and record every cell where the sign flips;
2. bisect each flip down to ``xtol``;
3. split the range at the flips, at the caller's breakpoints and at the kinks
   of the weight, then run adaptive Gauss-Kronrod (7/15) on each panel.

Results carry an a-posteriori error bound (sum of ``|K15 - G7|`` over
panels).  A bound above the requested tolerance is reported, not hidden.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .geometry import TWO_PI

GK_NODES = _kernels.GK_NODES
GK_KWEIGHTS = _kernels.GK_KWEIGHTS
GK_GWEIGHTS = _kernels.GK_GWEIGHTS

MU_TOL = 1e-10
TAU_TOL = 1e-8
SCAN_N = 4096
ROOT_XTOL = 1e-13
MAX_PANELS = 4000


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_bound: float
    evaluations: int

    def converged(self, tol: float) -> bool:
        return self.error_bound <= tol


class ConvergenceError(ArithmeticError):
    """Raised by callers that need a plain float when quadrature missed ``tol``."""

    def __init__(self, result: QuadResult, tol: float):
        super().__init__(
            f"quadrature error bound {result.error_bound:.3e} exceeds tolerance {tol:.3e}"
        )
        self.result = result
        self.tol = tol


def _sgn(x: np.ndarray) -> np.ndarray:
    # sign with sign(0) := +1
    return np.where(np.asarray(x) >= 0.0, 1, -1)


def find_sign_changes(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    scan_n: int = SCAN_N,
    xtol: float = ROOT_XTOL,
) -> np.ndarray:
    """Locate sign flips of a vectorized ``f`` on ``[a, b]``.

    Flips closer together than one scan cell, or an even number inside one
    cell, are invisible; that is the price of a finite scan.
    """
    grid = a + (b - a) * np.arange(scan_n + 1) / scan_n
    s = _sgn(f(grid))
    idx = np.nonzero(s[1:] != s[:-1])[0]
    if idx.size == 0:
        return np.empty(0)
    lo, hi, s_lo = grid[idx], grid[idx + 1], s[idx]
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        if np.all(stuck):
            break
        same = _sgn(f(mid)) == s_lo
        lo = np.where(same & ~stuck, mid, lo)
        hi = np.where(~same & ~stuck, mid, hi)
    return 0.5 * (lo + hi)


def gauss_kronrod(f, lo, hi):
    """One 7/15-point Gauss-Kronrod pass on each panel ``[lo_i, hi_i]``.

    ``f`` must be vectorized.  Returns ``(K15, |K15 - G7|)`` per panel.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * GK_NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (fx @ GK_KWEIGHTS)
    g = half * (fx @ GK_GWEIGHTS)
    return k, np.abs(k - g)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    breakpoints: Sequence[float] = (),
    factors: Sequence[Callable] | None = None,
    scan_n: int = SCAN_N,
    xtol: float = ROOT_XTOL,
    max_panels: int = MAX_PANELS,
) -> QuadResult:
    """Adaptive integral of a vectorized ``f`` over ``[a, b]``.

    Parameters
    ----------
    breakpoints
        Known kinks or jumps; always used as panel edges.
    factors
        If given, sign flips are searched in each factor separately instead
        of in ``f``.  Use it when ``f`` is a product of sign functions whose
        flips may sit closer than one scan cell.
    scan_n
        Scan resolution; ``0`` disables the flip search.

    Panels whose error exceeds their share ``tol * width / (b - a)`` are
    halved, in batches, until the total bound is below ``tol`` or
    ``max_panels`` is reached.  The final sum runs left to right.
    """
    if not b > a:
        raise ValueError("need a < b")
    edges = [a, b]
    edges += [p for p in breakpoints if a < p < b]
    n_evals = 0
    if scan_n:
        for g in (factors if factors is not None else (f,)):
            edges += list(find_sign_changes(g, a, b, scan_n, xtol))
            n_evals += scan_n + 1
    edges = np.unique(np.asarray(edges, dtype=float))

    lo, hi = edges[:-1], edges[1:]
    k, e = gauss_kronrod(f, lo, hi)
    n_evals += 15 * lo.size
    panels = list(zip(lo, hi, k, e))
    length = b - a

    while len(panels) < max_panels:
        total_err = math.fsum(p[3] for p in panels)
        if total_err <= tol:
            break
        bad = [i for i, p in enumerate(panels)
               if p[3] > tol * (p[1] - p[0]) / length and p[1] - p[0] > 1e-14]
        if not bad:
            # errors are spread thin; halve the worst few
            bad = [i for _, i in heapq.nlargest(8, ((p[3], i) for i, p in enumerate(panels)))]
        bad = bad[: max(1, (max_panels - len(panels)) // 2)]
        sub_lo, sub_hi = [], []
        for i in bad:
            l_, h_ = panels[i][0], panels[i][1]
            m_ = 0.5 * (l_ + h_)
            sub_lo += [l_, m_]
            sub_hi += [m_, h_]
        k, e = gauss_kronrod(f, sub_lo, sub_hi)
        n_evals += 15 * len(sub_lo)
        drop = set(bad)
        panels = [p for i, p in enumerate(panels) if i not in drop]
        panels += list(zip(sub_lo, sub_hi, k, e))

    panels.sort(key=lambda p: p[0])
    value = math.fsum(p[2] for p in panels)
    err = math.fsum(p[3] for p in panels)
    return QuadResult(float(value), float(err), int(n_evals))


def mu_weight(mu):
    """Conditional hidden-variable density ``|sin mu| / 4`` on [0, 2pi)."""
    return 0.25 * np.abs(np.sin(mu))


def integrate_mu(
    f: Callable[[np.ndarray], np.ndarray],
    tol: float = MU_TOL,
    *,
    factors: Sequence[Callable] | None = None,
    scan_n: int = SCAN_N,
) -> QuadResult:
    """``int_0^{2pi} f(mu) |sin mu| / 4 dmu``, split at the kink ``mu = pi``."""
    return integrate(
        lambda m: f(m) * mu_weight(m), 0.0, TWO_PI, tol,
        breakpoints=(math.pi,), factors=factors if factors is not None else (f,),
        scan_n=scan_n,
    )


def integrate_tau(
    f: Callable[[np.ndarray], np.ndarray],
    tol: float = TAU_TOL,
    *,
    breakpoints: Sequence[float] = (0.5 * math.pi,),
    scan_n: int = SCAN_N,
) -> QuadResult:
    """``(1/pi) int_0^pi f(tau) dtau``.

    ``tau = pi/2`` is a default breakpoint: the tau-level correlations have
    kinks there and isolated jumps on it, and no Gauss-Kronrod node may sit
    on that line.
    """
    r = integrate(f, 0.0, math.pi, tol * math.pi, breakpoints=breakpoints, scan_n=scan_n)
    return QuadResult(r.value / math.pi, r.error_bound / math.pi, r.evaluations)


def sign_integral_mu(normals, prefactor: float, tau: float, tol: float = MU_TOL,
                     scan_n: int = SCAN_N) -> QuadResult:
    """``int prefactor * prod_k sign(n_k . lambda) |sin mu|/4 dmu`` via the kernel."""
    v, e, n = _kernels.sign_mu_integral(
        np.asarray(normals, dtype=float).reshape(-1, 3), float(prefactor), float(tau),
        int(scan_n), ROOT_XTOL, float(tol), MAX_PANELS,
    )
    return QuadResult(v, e, n)


def pair_correlation_oracle(a, b, tau: float, tol: float = MU_TOL, model=None) -> QuadResult:
    """Brute-force ``mu`` average of ``outcome_a * outcome_b`` at fixed ``tau``.

    ``model`` defaults to the singlet model.  Models whose outcomes are signs
    of linear forms in lambda go through the compiled kernel; anything else
    is integrated generically.  Either way each outcome factor is scanned for
    flips on its own, so nearly coincident settings are still resolved.
    """
    from .hvmodel import SingletModel

    model = SingletModel() if model is None else model
    lin = model.sign_normals(a, b)
    if lin is not None:
        (na, sa), (nb, sb) = lin
        return sign_integral_mu(np.stack([na, nb]), sa * sb, tau, tol)

    def fa(mu):
        return model.outcomes_a(a, b, mu, tau)

    def fb(mu):
        return model.outcomes_b(a, b, mu, tau)

    return integrate_mu(lambda mu: fa(mu) * fb(mu), tol, factors=(fa, fb))
