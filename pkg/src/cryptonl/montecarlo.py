"""Monte Carlo estimates of model correlations and marginals.

Samples are drawn in fixed-size chunks; chunk ``i`` of term ``t`` uses the
stream keyed by ``(seed, t, i)``.  Chunk results are integer sums merged in
chunk order, so an estimate depends on ``(seed, n)`` only, never on the
number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .closedform import CHSH_SIGNS, ChshQuartet
from .geometry import lambda_array, stream
from .hvmodel import TwoLevelModel

CHUNK = 1 << 16
DEFAULT_SEED = 20100525

# stream-index namespaces, one per estimated quantity
_TERM_FULL = 0
_TERM_TAU = 1
_TERM_MARGINAL = 2


@dataclass(frozen=True)
class McConfig:
    seed: int = DEFAULT_SEED
    n: int = 1_000_000
    threads: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    def within(self, target: float, k: float = 4.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr


def _pm1_estimate(total: int, n: int) -> Estimate:
    # values are +-1, so sum of squares is n
    mean = total / n
    if n < 2:
        return Estimate(mean, 0.0, n)
    var = max(0.0, (n - total * total / n) / (n - 1))
    return Estimate(mean, math.sqrt(var / n), n)


def _run_chunks(cfg: McConfig, term: tuple[int, ...], chunk_sum) -> int:
    n_chunks = -(-cfg.n // CHUNK)

    def job(i):
        size = min(CHUNK, cfg.n - i * CHUNK)
        return chunk_sum(stream(cfg.seed, *term, i), size)

    if cfg.threads == 1 or n_chunks == 1:
        parts = [job(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            parts = list(ex.map(job, range(n_chunks)))
    return int(sum(parts))


def _product_sum(model, a, b, mu, tau, side="ab") -> int:
    lin = model.sign_normals(a, b)
    if lin is not None:
        lam = lambda_array(mu, tau)
        (na, sa), (nb, sb) = lin
        if side == "a":
            return _kernels.sign_sum(lam, na, sa)
        if side == "b":
            return _kernels.sign_sum(lam, nb, sb)
        return _kernels.sign_sum(lam, np.stack([na, nb]), sa * sb)
    if side == "a":
        v = model.outcomes_a(a, b, mu, tau)
    elif side == "b":
        v = model.outcomes_b(a, b, mu, tau)
    else:
        v = model.outcomes_a(a, b, mu, tau) * model.outcomes_b(a, b, mu, tau)
    return int(np.sum(v, dtype=np.int64))


def estimate_correlation(model: TwoLevelModel, a, b, cfg: McConfig, *, term: int = 0) -> Estimate:
    """``<A B>`` by sampling lambda uniformly on the sphere."""
    def chunk(rng, size):
        mu, tau = model.sample_hidden(rng, size)
        return _product_sum(model, a, b, mu, tau)

    return _pm1_estimate(_run_chunks(cfg, (_TERM_FULL, term), chunk), cfg.n)


def estimate_correlation_at_tau(model: TwoLevelModel, a, b, tau: float, cfg: McConfig,
                                *, term: int = 0) -> Estimate:
    """``E_tau(A, B)`` by sampling ``mu`` from ``rho(mu | tau)`` at fixed ``tau``."""
    def chunk(rng, size):
        mu = model.sample_mu(rng, tau, size)
        return _product_sum(model, a, b, mu, np.float64(tau))

    return _pm1_estimate(_run_chunks(cfg, (_TERM_TAU, term), chunk), cfg.n)


def estimate_marginal(model: TwoLevelModel, side: str, a, b, cfg: McConfig,
                      tau: float | None = None) -> Estimate:
    """Single-party average of ``outcome_a`` (``side='A'``) or ``outcome_b``.

    Over the whole sphere by default, or at fixed ``tau``.
    """
    s = side.lower()
    if s not in ("a", "b"):
        raise ValueError("side must be 'A' or 'B'")

    def chunk(rng, size):
        if tau is None:
            mu, t = model.sample_hidden(rng, size)
        else:
            mu, t = model.sample_mu(rng, tau, size), np.float64(tau)
        return _product_sum(model, a, b, mu, t, side=s)

    key = (_TERM_MARGINAL, 0 if s == "a" else 1, 0 if tau is None else 1)
    return _pm1_estimate(_run_chunks(cfg, key, chunk), cfg.n)


def estimate_F(model: TwoLevelModel, quartet: ChshQuartet, cfg: McConfig,
               tau: float | None = None) -> Estimate:
    """CHSH combination from four independent correlation estimates.

    ``cfg.n`` samples per term; standard errors add in quadrature.
    """
    mean, var = 0.0, 0.0
    for k, (name, (x, y)) in enumerate(quartet.pairs().items()):
        if tau is None:
            e = estimate_correlation(model, x, y, cfg, term=k)
        else:
            e = estimate_correlation_at_tau(model, x, y, tau, cfg, term=k)
        mean += CHSH_SIGNS[name] * e.mean
        var += e.stderr ** 2
    return Estimate(mean, math.sqrt(var), cfg.n)
