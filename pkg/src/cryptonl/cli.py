"""Command-line front end.

Commands: ``verify``, ``scan``, ``mc``, ``constants``, ``sup``.  Each accepts
``--json PATH``, ``--out PATH``, ``--seed N`` and ``--threads N``, and
starts its output with a ``# config:`` line holding the effective settings.

Exit codes: 0 success, 1 failed check, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import _kernels, analysis, baselines, closedform, hvmodel, montecarlo
from .closedform import ChshQuartet, TSIRELSON
from .geometry import Direction

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _vector(text: str) -> Direction:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a vector: {text!r}") from exc
    if len(parts) != 3 or not any(parts):
        raise argparse.ArgumentTypeError("expected three comma-separated numbers, not all zero")
    return Direction.from_vector(parts)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", metavar="PATH", help="write machine-readable output here")
    p.add_argument("--out", metavar="PATH", help="write the main output here instead of stdout")
    p.add_argument("--seed", type=int, default=montecarlo.DEFAULT_SEED,
                   help=f"RNG seed (default {montecarlo.DEFAULT_SEED})")
    p.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryptonl",
        description="Two-level hidden-variable model of the singlet: checks, scans, sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the cross-oracle consistency suite")
    _common(p)
    p.add_argument("--tol-closed-form", type=float, default=analysis.DEFAULT_TOLERANCES["closed_form"])
    p.add_argument("--tol-marginal", type=float, default=analysis.DEFAULT_TOLERANCES["marginal"])
    p.add_argument("--tol-quantum-recovery", type=float,
                   default=analysis.DEFAULT_TOLERANCES["quantum_recovery"])
    p.add_argument("--grid", type=int, default=101, help="closed-form vs quadrature grid size")
    p.add_argument("--mc-n", type=int, default=200_000, help="Monte Carlo samples per estimate")
    p.add_argument("--scan-steps", type=int, default=1001)

    p = sub.add_parser("scan", help="tabulate F on the (alpha, tau) grid as CSV")
    _common(p)
    p.add_argument("--alpha-steps", type=int, default=201)
    p.add_argument("--tau-steps", type=int, default=201)

    p = sub.add_parser("mc", help="Monte Carlo estimate of a model quantity")
    _common(p)
    p.add_argument("--quantity", required=True,
                   choices=("correlation", "correlation_tau", "marginal", "F"))
    p.add_argument("--alpha", type=float, default=math.pi / 8, help="quartet angle (default pi/8)")
    p.add_argument("--tau", type=float, help="fix the upper-level variable")
    p.add_argument("--pair", choices=("AB", "AB'", "A'B", "A'B'"), default="AB")
    p.add_argument("--side", choices=("A", "B"), default="A")
    p.add_argument("--a", type=_vector, help="explicit Alice setting x,y,z (overrides the quartet)")
    p.add_argument("--b", type=_vector, help="explicit Bob setting x,y,z")
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--degrees", action="store_true", help="angles given in degrees")

    p = sub.add_parser("constants", help="print the model's constants and bounds")
    _common(p)

    p = sub.add_parser("sup", help="approach of |F| to 4 near (pi/6, pi/2)")
    _common(p)
    p.add_argument("--eps", type=_float_list, default=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
                   help="comma-separated, strictly decreasing offsets below pi/2")
    p.add_argument("--degrees", action="store_true", help="offsets given in degrees")
    return parser


def _config(args) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Direction):
            v = [v.x, v.y, v.z]
        cfg[k] = v
    cfg["backend"] = _kernels.backend()
    return cfg


@contextlib.contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
    with fh:
        yield fh


def _write_json(path, payload) -> None:
    if path is None:
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _check_writable(*paths) -> None:
    for p in paths:
        if p is None:
            continue
        try:
            with open(p, "a", encoding="utf-8"):
                pass
        except OSError as exc:
            raise UsageError(f"cannot write {p}: {exc}") from exc


def _echo(fh, args) -> None:
    fh.write("# config: " + json.dumps(_config(args), sort_keys=True) + "\n")


# --- commands -----------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.grid < 2 or args.mc_n < 2 or args.scan_steps < 2:
        raise UsageError("--grid, --mc-n and --scan-steps must be >= 2")
    _check_writable(args.out, args.json)
    tolerances = {
        "closed_form": args.tol_closed_form,
        "marginal": args.tol_marginal,
        "quantum_recovery": args.tol_quantum_recovery,
    }
    report = analysis.consistency_suite(
        tolerances, grid=args.grid, mc_n=args.mc_n, seed=args.seed,
        threads=args.threads, scan_steps=args.scan_steps,
    )
    with _sink(args.out) as fh:
        _echo(fh, args)
        for c in report.checks:
            fh.write(f"{c.status.upper():4}  {c.name:40}  achieved={c.achieved:.6g}  "
                     f"tolerance={c.tolerance:.6g}\n")
        n_ok = sum(c.passed for c in report.checks)
        fh.write(f"# {n_ok}/{len(report.checks)} checks passed\n")
        for c in report.failures:
            fh.write(f"# FAILED: {c.name}\n")
    _write_json(args.json, report.as_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_scan(args) -> int:
    if args.alpha_steps < 2 or args.tau_steps < 2:
        raise UsageError("--alpha-steps and --tau-steps must be >= 2")
    _check_writable(args.out, args.json)
    res = analysis.scan(args.alpha_steps, args.tau_steps, threads=args.threads)
    summary = res.summary()
    if args.out is not None:
        with _sink(args.out) as fh:
            res.write_csv(fh)
    _echo(sys.stdout, args)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    _write_json(args.json, summary)
    return EXIT_OK


def _settings(args):
    if (args.a is None) != (args.b is None):
        raise UsageError("--a and --b must be given together")
    if args.a is not None:
        return args.a, args.b
    if not 0.0 <= args.alpha <= closedform.QUARTER_PI + 1e-15:
        raise UsageError("--alpha must lie in [0, pi/4]")
    return ChshQuartet(args.alpha).pairs()[args.pair]


def cmd_mc(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if args.degrees:
        args.alpha = math.radians(args.alpha)
        if args.tau is not None:
            args.tau = math.radians(args.tau)
    if args.quantity == "correlation_tau" and args.tau is None:
        raise UsageError("--quantity correlation_tau needs --tau")
    _check_writable(args.out, args.json)

    model = hvmodel.SingletModel()
    cfg = montecarlo.McConfig(seed=args.seed, n=args.n, threads=args.threads)
    if args.quantity == "F":
        if not 0.0 <= args.alpha <= closedform.QUARTER_PI + 1e-15:
            raise UsageError("--alpha must lie in [0, pi/4]")
        est = montecarlo.estimate_F(model, ChshQuartet(args.alpha), cfg, tau=args.tau)
    else:
        a, b = _settings(args)
        if args.quantity == "marginal":
            est = montecarlo.estimate_marginal(model, args.side, a, b, cfg, tau=args.tau)
        elif args.quantity == "correlation_tau" or args.tau is not None:
            est = montecarlo.estimate_correlation_at_tau(model, a, b, args.tau, cfg)
        else:
            est = montecarlo.estimate_correlation(model, a, b, cfg)

    payload = {"quantity": args.quantity, "mean": est.mean, "stderr": est.stderr,
               "n": est.n, "seed": args.seed}
    with _sink(args.out) as fh:
        _echo(fh, args)
        fh.write(f"mean={est.mean:.17g} stderr={est.stderr:.17g} n={est.n} seed={args.seed}\n")
    _write_json(args.json, payload)
    return EXIT_OK


def cmd_constants(args) -> int:
    _check_writable(args.out, args.json)
    at = closedform.alpha_tilde()
    resid = closedform.alpha_tilde_equation(at)
    half_root = closedform.bisect_root(lambda a: closedform.alpha_tilde_equation(a, math.pi / 2),
                                       0.2, 0.4)
    local, witness = baselines.local_max_F()
    qmax, qarg = baselines.quantum_max_F()
    payload = {
        "alpha_tilde": at,
        "alpha_tilde_residual": resid,
        "quantum_bound": TSIRELSON,
        "quantum_max_over_quartet": qmax,
        "quantum_argmax_alpha": qarg,
        "local_bound": local,
        "local_witness": [witness.A, witness.A_prime, witness.B, witness.B_prime],
        "pr_box_F": baselines.pr_F(),
        "quoted_alpha_tilde": closedform.QUOTED_ALPHA_TILDE,
        "root_with_rhs_pi_over_2": half_root,
    }
    with _sink(args.out) as fh:
        _echo(fh, args)
        fh.write(f"alpha_tilde            {at:.12f}\n")
        fh.write(f"residual               {resid:.3e}\n")
        fh.write(f"quantum bound 2*sqrt2  {TSIRELSON:.12f}\n")
        fh.write(f"quartet max |F_q|      {qmax:.12f} at alpha = {qarg:.12f}\n")
        fh.write(f"local bound            {local:g}\n")
        fh.write(f"PR box F               {payload['pr_box_F']:g}\n")
        fh.write(
            f"note: the value 0.316 sometimes quoted for alpha_tilde does not solve "
            f"4a + pi sin^2 a = pi (residual {closedform.alpha_tilde_equation(0.316):.3f}); "
            f"it is close to the root {half_root:.6f} of 4a + pi sin^2 a = pi/2.\n"
        )
    _write_json(args.json, payload)
    return EXIT_OK


def cmd_sup(args) -> int:
    eps = [math.radians(e) for e in args.eps] if args.degrees else list(args.eps)
    _check_writable(args.out, args.json)
    try:
        rows = analysis.sup_search(eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _sink(args.out) as fh:
        _echo(fh, args)
        fh.write(f"{'epsilon':>10}  {'alpha':>14}  {'tau':>18}  {'F':>18}  {'|F|':>18}\n")
        for r in rows:
            fh.write(f"{r.epsilon:10.3e}  {r.alpha:14.12f}  {r.tau:18.15f}  "
                     f"{r.F:18.15f}  {abs(r.F):18.15f}\n")
    _write_json(args.json, [
        {"epsilon": r.epsilon, "alpha": r.alpha, "tau": r.tau, "F": r.F, "abs_F": abs(r.F)}
        for r in rows
    ])
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "scan": cmd_scan,
    "mc": cmd_mc,
    "constants": cmd_constants,
    "sup": cmd_sup,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cryptonl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
