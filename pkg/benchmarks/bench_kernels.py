#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy counterparts.

Both implementations live side by side in ``cryptonl._kernels`` so a single
process can compare them; the ``CRYPTONL_DISABLE_NUMBA`` flag only picks
which one the library uses by default.

    python benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from cryptonl import _kernels
from cryptonl.closedform import ChshQuartet, alpha_tilde
from cryptonl.geometry import lambda_array, sample_sphere, stream
from cryptonl.hvmodel import SingletModel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(grid, n_tau, n_samples):
    at = alpha_tilde()
    a = np.linspace(0.0, math.pi / 4, grid)
    t = math.pi * np.arange(grid) / grid
    q = ChshQuartet(0.41)
    (na, sa), (nb, sb) = SingletModel().sign_normals(q.a, q.b_prime)
    normals = np.stack([na, nb])
    taus = math.pi * (np.arange(n_tau) + 0.5) / n_tau
    mu, tau = sample_sphere(stream(1, 0), n_samples)
    lam = lambda_array(mu, tau)

    def f_grid(impl):
        return lambda: impl.f_tau_grid(a, t, at)

    def mu_integrals(impl):
        return lambda: [impl.sign_mu_integral(normals, sa * sb, float(x), 4096, 1e-13, 1e-10, 4000)[0]
                        for x in taus]

    def sums(impl):
        return lambda: impl.sign_sum(lam, normals, sa * sb)

    return [
        (f"f_tau_grid {grid}x{grid}", f_grid),
        (f"sign_mu_integral x{n_tau}", mu_integrals),
        (f"sign_sum n={n_samples}", sums),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--grid", type=int, default=1001)
    p.add_argument("--n-tau", type=int, default=200)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--json", metavar="PATH")
    args = p.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    _kernels.warmup()

    rows = []
    print(f"{'kernel':32} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8}  max |diff|")
    for name, make in cases(args.grid, args.n_tau, args.samples):
        t_np, r_np = best_of(make(_kernels.NUMPY), args.repeat)
        t_nb, r_nb = best_of(make(_kernels.NUMBA), args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_np, dtype=float) - np.asarray(r_nb, dtype=float))))
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb,
                     "speedup": t_np / t_nb, "max_abs_diff": diff})
        print(f"{name:32} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:8.1f}  {diff:.1e}")

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
