"""Hot numeric kernels.

Each kernel has a numba ``@njit`` implementation and a vectorized numpy one.
Which one the package uses is decided once at import time:

* ``CRYPTONL_DISABLE_NUMBA=1`` (or numba missing) selects the numpy path;
* otherwise the numba path is used.

Both implementations stay importable (``NUMPY`` / ``NUMBA`` namespaces) so
tests and ``benchmarks/bench_kernels.py`` can compare them directly.

Kernels
-------
f_tau_grid(alpha, tau, alpha_tilde)
    CHSH combination of the tau-level correlations on a tensor grid.
sign_mu_integral(normals, prefactor, tau, scan_n, xtol, tol, max_panels)
    ``int_0^{2pi} prefactor * prod_k sign(n_k . lambda(mu, tau)) |sin mu| / 4 dmu``
    by sign-change scanning, bisection and adaptive Gauss-Kronrod panels.
sign_sum(lam, normals, prefactor)
    ``sum_i prefactor * prod_k sign(n_k . lam_i)`` for Monte Carlo.

``sign(0)`` is +1 throughout.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_FLAG = os.environ.get("CRYPTONL_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in {"1", "true", "yes", "on"}

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

# Gauss-Kronrod 7/15 on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
GK_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GK_GWEIGHTS = np.zeros(15)
GK_GWEIGHTS[1:7:2] = _WG[:3]
GK_GWEIGHTS[7] = _WG[3]
GK_GWEIGHTS[9:14:2] = _WG[2::-1]


# --- numpy implementations --------------------------------------------------

def _f_tau_grid_np(alpha, tau, alpha_tilde):
    from . import closedform

    a = np.asarray(alpha, dtype=float)[:, None]
    t = np.asarray(tau, dtype=float)[None, :]
    return closedform.f_tau(a, t, branch_at=alpha_tilde)


def _bisect_np(p, q, lo, hi, s_lo, xtol):
    # vectorized bisection of p sin + q cos on each bracket
    n_iter = int(np.ceil(np.log2(max(np.max(hi - lo), xtol) / xtol))) + 1 if lo.size else 0
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        s_mid = (p * np.sin(mid) + q * np.cos(mid)) >= 0.0
        same = s_mid == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi), n_iter * lo.size


def _sign_mu_integral_np(normals, prefactor, tau, scan_n, xtol, tol, max_panels):
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    ct, st = math.cos(tau), math.sin(tau)
    p = normals[:, 0] * ct + normals[:, 1] * st
    q = normals[:, 2].copy()

    grid = np.arange(scan_n + 1) * (TWO_PI / scan_n)
    g = p[:, None] * np.sin(grid)[None, :] + q[:, None] * np.cos(grid)[None, :]
    s = g >= 0.0
    fac, idx = np.nonzero(s[:, 1:] != s[:, :-1])
    roots, nb = _bisect_np(p[fac], q[fac], grid[idx], grid[idx + 1], s[fac, idx], xtol)
    nevals = g.size + nb

    brk = np.unique(np.concatenate([[0.0, math.pi, TWO_PI], roots]))
    lo, hi = brk[:-1], brk[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        x = (0.5 * (hi + lo))[:, None] + half[:, None] * GK_NODES[None, :]
        prod = np.where(
            (p[None, None, :] * np.sin(x)[..., None] + q[None, None, :] * np.cos(x)[..., None]) >= 0.0,
            1.0, -1.0,
        ).prod(axis=-1)
        f = prefactor * prod * np.abs(np.sin(x)) * 0.25
        k = half * (f @ GK_KWEIGHTS)
        gg = half * (f @ GK_GWEIGHTS)
        return k, np.abs(k - gg)

    done_lo, done_val, done_err = [], [], []
    n_done = 0
    while lo.size:
        k, e = panel(lo, hi)
        nevals += 15 * lo.size
        ok = (e <= tol * (hi - lo) / TWO_PI) | (hi - lo < 1e-14)
        if n_done + 2 * lo.size >= max_panels:
            ok[:] = True
        n_done += int(ok.sum())
        done_lo.append(lo[ok]); done_val.append(k[ok]); done_err.append(e[ok])
        mid = 0.5 * (lo[~ok] + hi[~ok])
        lo, hi = np.concatenate([lo[~ok], mid]), np.concatenate([mid, hi[~ok]])

    lo_all = np.concatenate(done_lo)
    order = np.argsort(lo_all, kind="stable")
    val = math.fsum(np.concatenate(done_val)[order])
    err = float(np.sum(np.concatenate(done_err)))
    return val, err, int(nevals)


def _sign_sum_np(lam, normals, prefactor):
    lam = np.asarray(lam, dtype=float)
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    neg = (lam @ normals.T) < 0.0
    odd = np.count_nonzero(neg, axis=1) % 2
    n_neg = int(np.count_nonzero(odd))
    return int(prefactor) * (lam.shape[0] - 2 * n_neg)


NUMPY = SimpleNamespace(
    name="numpy",
    f_tau_grid=_f_tau_grid_np,
    sign_mu_integral=_sign_mu_integral_np,
    sign_sum=_sign_sum_np,
)


# --- numba implementations --------------------------------------------------

def _chi_from_k(zero, k, c):
    if zero:
        return 0.0
    d = c * c + k * k
    if d == 0.0:
        return 0.0
    return c / math.sqrt(d)


def _f_tau_grid_loops(alpha, tau, alpha_tilde):
    # the gammas depend on alpha only and cos on tau only, so hoist both
    na, nt = alpha.shape[0], tau.shape[0]
    c = np.empty(nt)
    for j in range(nt):
        c[j] = math.sin(HALF_PI - tau[j])
    out = np.empty((na, nt))
    k = np.empty(4)
    zero = np.empty(4, dtype=np.bool_)
    for i in range(na):
        a = alpha[i]
        s1 = math.sin(a)
        s3 = math.sin(3.0 * a)
        g1 = math.pi * s1 * s1
        gs = (g1, math.pi * s3 * s3, 4.0 * a + g1, 4.0 * a - g1)
        for m in range(4):
            zero[m] = gs[m] == 0.0
            k[m] = math.tan(0.5 * (math.pi - gs[m]))
        low = a <= alpha_tilde
        for j in range(nt):
            cj = c[j]
            x1 = abs(_chi_from_k(zero[0], k[0], cj))
            x2 = abs(_chi_from_k(zero[1], k[1], cj))
            x3 = _chi_from_k(zero[2], k[2], cj)
            x4 = _chi_from_k(zero[3], k[3], cj)
            if low:
                out[i, j] = 2.0 * (x1 - x2 + abs(x3 - x4) - 1.0)
            else:
                out[i, j] = 2.0 * (x1 - x2 - abs(x3 + x4) + 1.0)
    return out


def _sign_at(p, q, x):
    prod = 1.0
    sx, cx = math.sin(x), math.cos(x)
    for m in range(p.shape[0]):
        if p[m] * sx + q[m] * cx < 0.0:
            prod = -prod
    return prod


def _sign_mu_integral_loops(normals, prefactor, tau, scan_n, xtol, tol, max_panels):
    nf = normals.shape[0]
    ct, st = math.cos(tau), math.sin(tau)
    p = np.empty(nf)
    q = np.empty(nf)
    for m in range(nf):
        p[m] = normals[m, 0] * ct + normals[m, 1] * st
        q[m] = normals[m, 2]

    h = TWO_PI / scan_n
    brk = np.empty(nf * scan_n + 3)
    nbrk = 0
    brk[nbrk] = 0.0; nbrk += 1
    brk[nbrk] = math.pi; nbrk += 1
    brk[nbrk] = TWO_PI; nbrk += 1
    sg = np.empty(scan_n + 1)
    cg = np.empty(scan_n + 1)
    for i in range(scan_n + 1):
        sg[i] = math.sin(i * h)
        cg[i] = math.cos(i * h)
    nevals = 0
    for m in range(nf):
        prev = p[m] * sg[0] + q[m] * cg[0] >= 0.0
        nevals += 1
        for i in range(1, scan_n + 1):
            x = i * h
            cur = p[m] * sg[i] + q[m] * cg[i] >= 0.0
            nevals += 1
            if cur != prev:
                lo = (i - 1) * h
                hi = x
                while hi - lo > xtol:
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    sm = p[m] * math.sin(mid) + q[m] * math.cos(mid) >= 0.0
                    nevals += 1
                    if sm == prev:
                        lo = mid
                    else:
                        hi = mid
                brk[nbrk] = 0.5 * (lo + hi)
                nbrk += 1
            prev = cur
    b = np.sort(brk[:nbrk])

    stack_lo = np.empty(max_panels + 64)
    stack_hi = np.empty(max_panels + 64)
    total = 0.0
    comp = 0.0
    err = 0.0
    used = 0
    for t in range(nbrk - 1):
        if b[t + 1] <= b[t]:
            continue
        top = 0
        stack_lo[0] = b[t]
        stack_hi[0] = b[t + 1]
        top = 1
        while top > 0:
            top -= 1
            lo = stack_lo[top]
            hi = stack_hi[top]
            half = 0.5 * (hi - lo)
            ctr = 0.5 * (hi + lo)
            kk = 0.0
            gg = 0.0
            for r in range(15):
                x = ctr + half * GK_NODES[r]
                f = prefactor * _sign_at(p, q, x) * abs(math.sin(x)) * 0.25
                kk += GK_KWEIGHTS[r] * f
                gg += GK_GWEIGHTS[r] * f
            kk *= half
            gg *= half
            nevals += 15
            e = abs(kk - gg)
            if e <= tol * (hi - lo) / TWO_PI or hi - lo < 1e-14 or used + top >= max_panels:
                # Kahan summation keeps the result order-stable to rounding
                y = kk - comp
                s = total + y
                comp = (s - total) - y
                total = s
                err += e
                used += 1
            else:
                mid = ctr
                # push right first so the left half is processed first
                stack_lo[top] = mid
                stack_hi[top] = hi
                top += 1
                stack_lo[top] = lo
                stack_hi[top] = mid
                top += 1
    return total, err, nevals


def _sign_sum_loops(lam, normals, prefactor):
    total = 0
    for i in range(lam.shape[0]):
        v = prefactor
        for m in range(normals.shape[0]):
            d = lam[i, 0] * normals[m, 0] + lam[i, 1] * normals[m, 1] + lam[i, 2] * normals[m, 2]
            if d < 0.0:
                v = -v
        total += v
    return total


if HAVE_NUMBA:
    _jit = njit(cache=True, nogil=True)

    # rebind helpers so the compiled callers resolve compiled callees
    _chi_from_k = _jit(_chi_from_k)
    _sign_at = _jit(_sign_at)
    _f_tau_grid_nb = _jit(_f_tau_grid_loops)
    _sign_mu_integral_nb = _jit(_sign_mu_integral_loops)
    _sign_sum_nb = _jit(_sign_sum_loops)

    def _f_tau_grid_nbw(alpha, tau, alpha_tilde):
        return _f_tau_grid_nb(
            np.ascontiguousarray(alpha, dtype=np.float64),
            np.ascontiguousarray(tau, dtype=np.float64),
            float(alpha_tilde),
        )

    def _sign_mu_integral_nbw(normals, prefactor, tau, scan_n, xtol, tol, max_panels):
        v, e, n = _sign_mu_integral_nb(
            np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 3),
            float(prefactor), float(tau), int(scan_n), float(xtol), float(tol), int(max_panels),
        )
        return float(v), float(e), int(n)

    def _sign_sum_nbw(lam, normals, prefactor):
        return int(_sign_sum_nb(
            np.ascontiguousarray(lam, dtype=np.float64),
            np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 3),
            int(prefactor),
        ))

    NUMBA = SimpleNamespace(
        name="numba",
        f_tau_grid=_f_tau_grid_nbw,
        sign_mu_integral=_sign_mu_integral_nbw,
        sign_sum=_sign_sum_nbw,
    )
else:  # pragma: no cover
    NUMBA = None

ACTIVE = NUMBA if USE_NUMBA else NUMPY

f_tau_grid = ACTIVE.f_tau_grid
sign_mu_integral = ACTIVE.sign_mu_integral
sign_sum = ACTIVE.sign_sum


def backend() -> str:
    return ACTIVE.name


def warmup() -> None:
    """Trigger JIT compilation (no-op on the numpy path)."""
    if ACTIVE is NUMBA:
        f_tau_grid(np.array([0.1]), np.array([0.2]), 0.5)
        sign_mu_integral(np.array([[0.0, 0.0, 1.0]]), 1.0, 0.3, 64, 1e-13, 1e-10, 100)
        sign_sum(np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]), 1)
