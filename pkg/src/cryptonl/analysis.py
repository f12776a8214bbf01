"""Region maps, supremum search, no-signalling audit and the consistency suite."""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, baselines, closedform, hvmodel, montecarlo, quadrature
from .closedform import HALF_PI, QUARTER_PI, TSIRELSON, ChshQuartet
from .geometry import Direction, sample_sphere, lambda_vector, HiddenPoint, stream

F_MAX = 4.0
BOUND_SLACK = 1e-9


class RegionLabel(enum.Enum):
    LOCAL = "local"
    QUANTUM = "quantum"
    SUPERQUANTUM = "superquantum"


_LABELS = (RegionLabel.LOCAL, RegionLabel.QUANTUM, RegionLabel.SUPERQUANTUM)


def classify(F: float) -> RegionLabel:
    """Region of a CHSH value; boundaries belong to the lower region."""
    x = abs(F)
    if x > F_MAX + BOUND_SLACK:
        raise ValueError(f"|F| = {x!r} exceeds 4; upstream evaluation is wrong")
    if x <= 2.0:
        return RegionLabel.LOCAL
    if x <= TSIRELSON:
        return RegionLabel.QUANTUM
    return RegionLabel.SUPERQUANTUM


def classify_codes(F) -> np.ndarray:
    """Vectorized :func:`classify`: 0 local, 1 quantum, 2 superquantum."""
    x = np.abs(np.asarray(F, dtype=float))
    if np.any(x > F_MAX + BOUND_SLACK):
        raise ValueError("|F| exceeds 4; upstream evaluation is wrong")
    return (x > 2.0).astype(np.int8) + (x > TSIRELSON).astype(np.int8)


def singular_points() -> list[tuple[float, float]]:
    """Known discontinuities of ``f_tau``.

    ``(pi/6, pi/2)`` is where ``gamma_2 = pi``; ``(alpha_tilde, pi/2)`` is
    where ``gamma_3 = pi`` and the mixed pairs flip branch.
    """
    return [(math.pi / 6.0, HALF_PI), (closedform.alpha_tilde(), HALF_PI)]


def near_singular(alpha, tau, radius: float) -> np.ndarray:
    a, t = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(tau, float))
    out = np.zeros(a.shape, dtype=bool)
    for sa, st in singular_points():
        out |= np.hypot(a - sa, t - st) <= radius
    return out


def alpha_grid(steps: int) -> np.ndarray:
    return np.linspace(0.0, QUARTER_PI, steps)


def tau_grid(steps: int) -> np.ndarray:
    # [0, pi) without the right endpoint, which duplicates tau = 0
    return math.pi * np.arange(steps) / steps


@dataclass
class ScanResult:
    alpha: np.ndarray
    tau: np.ndarray
    F: np.ndarray
    codes: np.ndarray
    singular: np.ndarray

    @property
    def steps(self) -> tuple[int, int]:
        return self.alpha.size, self.tau.size

    @property
    def counts(self) -> dict[str, int]:
        c = np.bincount(self.codes.ravel(), minlength=3)
        return {lab.value: int(c[i]) for i, lab in enumerate(_LABELS)}

    @property
    def fractions(self) -> dict[str, float]:
        total = self.codes.size
        return {k: v / total for k, v in self.counts.items()}

    @property
    def max_abs_F(self) -> float:
        return float(np.max(np.abs(self.F)))

    @property
    def arg_max(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(np.abs(self.F))), self.F.shape)
        return float(self.alpha[i]), float(self.tau[j])

    def label(self, i: int, j: int) -> RegionLabel:
        return _LABELS[int(self.codes[i, j])]

    def summary(self) -> dict:
        return {
            "steps": {"alpha": int(self.alpha.size), "tau": int(self.tau.size)},
            "counts": self.counts,
            "fractions": self.fractions,
            "max_abs_F": self.max_abs_F,
            "arg_max": {"alpha": self.arg_max[0], "tau": self.arg_max[1]},
            "singular_cells": [
                {"alpha": float(self.alpha[i]), "tau": float(self.tau[j])}
                for i, j in zip(*np.nonzero(self.singular))
            ],
        }

    def write_csv(self, fh) -> int:
        """Write ``alpha,tau,F,abs_F,region`` rows (alpha-major); returns row count."""
        names = np.array([lab.value for lab in _LABELS])
        fh.write("alpha,tau,F,abs_F,region\n")
        n = 0
        for i, a in enumerate(self.alpha):
            row_F = self.F[i]
            row_lab = names[self.codes[i]]
            a_s = f"{a:.17g}"
            fh.writelines(
                f"{a_s},{t:.17g},{f:.17g},{abs(f):.17g},{lab}\n"
                for t, f, lab in zip(self.tau, row_F, row_lab)
            )
            n += row_F.size
        return n


def scan(alpha_steps: int, tau_steps: int, threads: int = 1) -> ScanResult:
    """Evaluate and classify ``f_tau`` on the uniform ``[0, pi/4] x [0, pi)`` grid."""
    if alpha_steps < 2 or tau_steps < 2:
        raise ValueError("steps must be >= 2")
    alpha, tau = alpha_grid(alpha_steps), tau_grid(tau_steps)
    at = closedform.alpha_tilde()
    blocks = np.array_split(np.arange(alpha_steps), max(1, min(threads, alpha_steps)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda idx: _kernels.f_tau_grid(alpha[idx], tau, at), blocks))
    else:
        parts = [_kernels.f_tau_grid(alpha[idx], tau, at) for idx in blocks]
    F = np.vstack(parts)
    sing = near_singular(alpha[:, None], tau[None, :], 1e-12)
    return ScanResult(alpha, tau, F, classify_codes(F), sing)


@dataclass(frozen=True)
class SupPoint:
    epsilon: float
    alpha: float
    tau: float
    F: float


def sup_search(epsilons) -> list[SupPoint]:
    """``f_tau`` at ``(pi/6, pi/2 - eps)`` along a decreasing ``eps`` sequence."""
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    a = math.pi / 6.0
    return [SupPoint(e, a, HALF_PI - e, closedform.f_tau(a, HALF_PI - e)) for e in eps]


# --- no-signalling audit ----------------------------------------------------

@dataclass
class AuditReport:
    max_abs_f: float
    max_abs_g: float
    max_shift_f: float
    max_shift_g: float
    max_error_bound: float
    tol: float
    n_settings: int
    n_tau: int

    @property
    def max_marginal(self) -> float:
        return max(self.max_abs_f, self.max_abs_g)

    @property
    def max_shift(self) -> float:
        return max(self.max_shift_f, self.max_shift_g)

    @property
    def passed(self) -> bool:
        return self.max_marginal < self.tol and self.max_shift < self.tol


def _random_directions(rng, n) -> list[Direction]:
    mu, tau = sample_sphere(rng, n)
    return [lambda_vector(HiddenPoint(m, t)) for m, t in zip(mu, tau)]


def no_signalling_audit(model, n_settings: int = 20, n_tau: int = 20, *,
                        seed: int = montecarlo.DEFAULT_SEED, tol: float = 1e-10) -> AuditReport:
    """Tau-level marginals by quadrature over random settings and ``tau`` values.

    For each pair ``(a, b)`` the distant setting is also swapped (``b -> b'``
    for Alice, ``a -> a'`` for Bob) and the change of the marginal recorded.
    """
    if n_settings < 1 or n_tau < 1:
        raise ValueError("counts must be >= 1")
    rng = stream(seed, 7)
    a_s, b_s = _random_directions(rng, n_settings), _random_directions(rng, n_settings)
    a2_s, b2_s = _random_directions(rng, n_settings), _random_directions(rng, n_settings)
    taus = math.pi * rng.random(n_tau)

    mf = mg = sf = sg = eb = 0.0
    for a, b, a2, b2 in zip(a_s, b_s, a2_s, b2_s):
        for t in taus:
            f1 = hvmodel.marginal_f_result(model, a, b, t)
            f2 = hvmodel.marginal_f_result(model, a, b2, t)
            g1 = hvmodel.marginal_g_result(model, a, b, t)
            g2 = hvmodel.marginal_g_result(model, a2, b, t)
            mf = max(mf, abs(f1.value), abs(f2.value))
            mg = max(mg, abs(g1.value), abs(g2.value))
            sf = max(sf, abs(f1.value - f2.value))
            sg = max(sg, abs(g1.value - g2.value))
            eb = max(eb, f1.error_bound, f2.error_bound, g1.error_bound, g2.error_bound)
    return AuditReport(mf, mg, sf, sg, eb, tol, n_settings, n_tau)


# --- consistency suite ------------------------------------------------------

@dataclass
class Check:
    name: str
    achieved: float
    tolerance: float
    # "max": achieved must not exceed tolerance; "min": achieved must exceed it
    mode: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.achieved):
            return False
        if self.mode == "max":
            return self.achieved <= self.tolerance
        return self.achieved > self.tolerance

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status,
                "achieved": float(self.achieved), "tolerance": float(self.tolerance)}


@dataclass
class SuiteReport:
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_json(self) -> list[dict]:
        return [c.as_dict() for c in self.checks]


DEFAULT_TOLERANCES = {
    "closed_form": 1e-7,
    "marginal": 1e-10,
    "quantum_recovery": 1e-6,
    "abs_chi": 1e-9,
    "branch_continuity": 1e-4,
    "full_expectation": 1e-8,
    "mc_sigma": 5.0,
}


def closed_form_oracle_gap(alpha_steps: int = 101, tau_steps: int = 101,
                           exclude: float = 1e-3) -> tuple[float, int]:
    """Max ``|closed form - mu quadrature|`` over all four pairs on the grid.

    Cells within ``exclude`` of a singular point are skipped.  Returns
    ``(max_gap, cells_compared)``.
    """
    at = closedform.alpha_tilde()
    singlet = hvmodel.SingletModel()
    worst, cells = 0.0, 0
    for a in alpha_grid(alpha_steps):
        q = ChshQuartet(float(a))
        pairs = q.pairs()
        taus = tau_grid(tau_steps)
        keep = ~near_singular(a, taus, exclude)
        closed = {
            "AB": closedform.corr_ab(a, taus),
            "A'B'": closedform.corr_apbp(a, taus),
            "AB'": closedform.corr_mixed(a, taus, branch_at=at),
        }
        closed["A'B"] = closed["AB'"]
        for name, (x, y) in pairs.items():
            (na, sa), (nb, sb) = singlet.sign_normals(x, y)
            normals = np.stack([na, nb])
            ref = np.broadcast_to(closed[name], taus.shape)
            for j in np.nonzero(keep)[0]:
                r = quadrature.sign_integral_mu(normals, sa * sb, float(taus[j]))
                worst = max(worst, abs(r.value - float(ref[j])))
        cells += int(keep.sum())
    return worst, cells


def quantum_recovery_gap(alphas) -> float:
    worst = 0.0
    for a in alphas:
        r = quadrature.integrate_tau(lambda t: closedform.f_tau(float(a), t), 1e-9)
        worst = max(worst, abs(r.value - closedform.f_quantum(float(a))))
    return worst


def abs_chi_gap(alphas) -> float:
    worst = 0.0
    for a in alphas:
        for j in (1, 2, 3, 4):
            r = quadrature.integrate_tau(lambda t: np.abs(closedform.chi(j, float(a), t)), 1e-11)
            worst = max(worst, abs(r.value - closedform.tau_average_abs_chi(j, float(a))))
    return worst


def branch_continuity_gap(delta: float = 1e-6, taus=(0.1, 0.5, 1.0, 2.0, 3.0)) -> float:
    at = closedform.alpha_tilde()
    t = np.asarray(taus)
    return float(np.max(np.abs(closedform.f_tau(at - delta, t) - closedform.f_tau(at + delta, t))))


def consistency_suite(tolerances: dict | None = None, *, grid: int = 101, mc_n: int = 200_000,
                      seed: int = montecarlo.DEFAULT_SEED, threads: int = 1,
                      scan_steps: int = 1001) -> SuiteReport:
    """Cross-check closed forms, quadrature, Monte Carlo and baselines."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    t0 = time.perf_counter()
    checks: list[Check] = []
    add = checks.append
    singlet = hvmodel.SingletModel()
    alphas25 = np.linspace(0.0, QUARTER_PI, 25)

    # constants and bounds
    add(Check("quantum_saturation_closed_form",
              abs(closedform.f_quantum(math.pi / 8) + TSIRELSON), 1e-12))
    qmax, _ = baselines.quantum_max_F()
    add(Check("quantum_max_over_quartet", abs(qmax - TSIRELSON), 1e-9))
    at = closedform.alpha_tilde()
    add(Check("alpha_tilde_residual", abs(closedform.alpha_tilde_equation(at)), 1e-10))
    add(Check("alpha_tilde_above_pi_over_6", at - math.pi / 6, 0.0, "min"))
    add(Check("local_bound", abs(baselines.local_max_F()[0] - 2.0), 0.0))
    add(Check("pr_box_F", abs(baselines.pr_F() - 4.0), 0.0))

    # closed forms against mu quadrature
    gap, _ = closed_form_oracle_gap(grid, grid)
    add(Check("closed_form_vs_mu_quadrature", gap, tol["closed_form"]))
    mixed = 0.0
    for a in alpha_grid(21)[1:]:
        q = ChshQuartet(float(a))
        for t in tau_grid(21):
            if near_singular(a, t, 1e-3):
                continue
            r1 = quadrature.pair_correlation_oracle(q.a, q.b_prime, float(t))
            r2 = quadrature.pair_correlation_oracle(q.a_prime, q.b, float(t))
            mixed = max(mixed, abs(r1.value - r2.value))
    add(Check("mixed_pairs_agree", mixed, tol["closed_form"]))

    # tau averages
    add(Check("quantum_recovery", quantum_recovery_gap(alphas25), tol["quantum_recovery"]))
    add(Check("abs_chi_tau_average", abs_chi_gap(alphas25), tol["abs_chi"]))
    add(Check("branch_continuity", branch_continuity_gap(), tol["branch_continuity"]))

    # the model against the singlet baseline
    rng = stream(seed, 11)
    dirs = _random_directions(rng, 20)
    fe = max(abs(hvmodel.full_expectation(singlet, a, b) - baselines.quantum_correlation(a, b))
             for a, b in zip(dirs[:10], dirs[10:]))
    add(Check("model_vs_singlet_full_expectation", fe, tol["full_expectation"]))

    # no-signalling
    audit = no_signalling_audit(singlet, 20, 20, seed=seed, tol=tol["marginal"])
    add(Check("crypto_nonlocality_marginals", audit.max_marginal, tol["marginal"]))
    add(Check("no_signalling_setting_shift", audit.max_shift, tol["marginal"]))
    bad = no_signalling_audit(hvmodel.SignallingModel(), 5, 5, seed=seed, tol=tol["marginal"])
    add(Check("signalling_detector_sensitivity", bad.max_shift, tol["marginal"], "min"))

    # region map and supremum
    sc = scan(scan_steps, scan_steps, threads)
    add(Check("scan_bound_abs_F_le_4", sc.max_abs_F - F_MAX, BOUND_SLACK))
    add(Check("scan_all_regions_nonempty", float(min(sc.counts.values())), 0.0, "min"))
    add(Check("superquantum_witness_pi_over_8",
              abs(closedform.f_tau(math.pi / 8, 0.0)) - TSIRELSON, 0.0, "min"))
    sup = sup_search([1e-2, 1e-3, 1e-4])
    add(Check("sup_approach_abs_F", abs(sup[-1].F), 3.99, "min"))

    # Monte Carlo against closed forms
    cfg = montecarlo.McConfig(seed=seed, n=mc_n, threads=threads)
    est = montecarlo.estimate_F(singlet, ChshQuartet(math.pi / 8), cfg)
    add(Check("montecarlo_quantum_saturation_sigma",
              abs(est.mean + TSIRELSON) / est.stderr, 4.0))
    z = 0.0
    pts = stream(seed, 12).random((10, 2)) * np.array([QUARTER_PI, math.pi])
    for k, (a, t) in enumerate(pts):
        q = ChshQuartet(float(a))
        e = montecarlo.estimate_correlation_at_tau(singlet, q.a, q.b_prime, float(t), cfg, term=k)
        ref = closedform.corr_mixed(float(a), float(t))
        z = max(z, abs(e.mean - ref) / max(e.stderr, 1e-300))
    add(Check("montecarlo_vs_closed_form_tau_sigma", z, tol["mc_sigma"]))
    add(Check("sampler_moments_sigma", sampler_moment_sigma(seed, mc_n), 4.0))

    return SuiteReport(checks, time.perf_counter() - t0)


def sampler_moment_sigma(seed: int, n: int) -> float:
    """Largest z-score among the four sampler moment checks."""
    from .geometry import sample_mu_given_tau

    mu, tau = sample_sphere(stream(seed, 21), n)
    z = np.cos(mu)
    m = sample_mu_given_tau(stream(seed, 22), n)
    c = np.cos(m)
    zs = []
    for x, target in ((z, 0.0), (z * z, 1.0 / 3.0), (c, 0.0), (c * c, 1.0 / 3.0)):
        se = x.std(ddof=1) / math.sqrt(n)
        zs.append(abs(x.mean() - target) / se)
    return float(max(zs))
