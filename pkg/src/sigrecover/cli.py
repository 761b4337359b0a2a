"""Command-line driver: simulate, sign, reconstruct, compare, gamma-sweep.

Outputs default to the directory named by ``SIGRECOVER_OUTDIR`` (or the
current directory). Exit codes: 0 success, 1 a requested tolerance check
failed, 2 bad arguments or input files, 3 the solver failed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .cost import PENALTY, VARIABLE_TIME
from .pmp import COSTATE_SCHEMES, CostateError, SolverParams, initial_controls, solve
from .procgen import OuParams, simulate_bm, simulate_ou
from .signature import PiecewisePath, signature_of_path
from .tensor import is_group_like, shuffle_defect
from .vartime import TimeSearchError, TimeSearchParams, search_final_time

log = logging.getLogger("sigrecover")

OUTDIR_ENV = "SIGRECOVER_OUTDIR"
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _out(path, default_name):
    if path is not None:
        return Path(path)
    return Path(os.environ.get(OUTDIR_ENV, ".")) / default_name


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _float_list(text):
    try:
        values = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not values or any(not (v >= 0 and math.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError(f"gammas must be finite and nonnegative, got {text!r}")
    return values


def _read_path(file):
    try:
        return io.read_path(file)
    except OSError as exc:
        raise CliError(f"cannot read {file}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _read_signature(file):
    try:
        return io.read_signature(file)
    except OSError as exc:
        raise CliError(f"cannot read {file}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _check_target(target, args):
    if is_group_like(target, args.group_tol):
        return
    msg = f"target is not group-like to {args.group_tol:g}"
    if target.depth <= 3:
        msg += f" (shuffle defect {shuffle_defect(target):.3e})"
    if not args.allow_non_group_like:
        raise CliError(msg + "; pass --allow-non-group-like to proceed")
    log.warning("%s; proceeding", msg)


def _write(fn, obj, file):
    file.parent.mkdir(parents=True, exist_ok=True)
    try:
        fn(obj, file)
    except OSError as exc:
        raise CliError(f"cannot write {file}: {exc.strerror}") from None
    log.info("wrote %s", file)


# ---------------------------------------------------------------- commands


def cmd_simulate(args):
    if args.process == "ou":
        params = OuParams(dim=args.dim, theta=args.theta, kappa=args.kappa, sigma=args.sigma,
                          steps=args.steps, horizon=args.horizon, seed=args.seed)
        try:
            path = simulate_ou(params)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        path = simulate_bm(args.dim, args.sigma, args.steps, args.horizon, args.seed)
    out = _out(args.output, "path.csv")
    _write(io.write_path, path, out)
    print(f"{out}: {len(path.times)} samples, dim {path.dim}, length {path.length():.6g}")
    return EXIT_OK


def cmd_sign(args):
    path = _read_path(args.input)
    sig = signature_of_path(path, args.depth)
    out = _out(args.output, "signature.json")
    _write(io.write_signature, sig, out)
    print(f"{out}: dim {sig.dim}, depth {sig.depth}")
    return EXIT_OK


def _solver_params(args, mode, horizon=None):
    try:
        return SolverParams(
            steps=args.steps, max_iter=args.max_iter, C0=args.C0, mode=mode, gamma=args.gamma,
            horizon=args.horizon if horizon is None else horizon, stall_tol=args.stall_tol,
            costate_scheme=args.costate_scheme,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",) and not callable(v)}


def cmd_reconstruct(args):
    target = _read_signature(args.target)
    _check_target(target, args)
    t0 = time.perf_counter()
    try:
        if args.mode == "penalty":
            res = solve(target, None, _solver_params(args, PENALTY))
            rec = io.ResultRecord.from_solve(res, target, _echo(args), PENALTY,
                                             wall_time=time.perf_counter() - t0)
        else:
            t_init = args.T_init
            if args.seed_time_from_penalty:
                pen = solve(target, None, _solver_params(args, PENALTY))
                t_init = max(pen.length, 1e-3)
                log.info("penalty pre-solve: length %.6g, endpoint error %.3e", pen.length, pen.endpoint_error)
            try:
                tp = TimeSearchParams(T_init=t_init, eps=args.eps, grow=args.grow,
                                      refine_steps=args.refine_steps, max_expansions=args.max_expansions,
                                      inner=_solver_params(args, VARIABLE_TIME, 1.0))
            except ValueError as exc:
                raise CliError(str(exc)) from None
            vr = search_final_time(target, tp)
            rec = io.ResultRecord.from_solve(vr.result, target, _echo(args), VARIABLE_TIME, T_star=vr.T_star,
                                             wall_time=time.perf_counter() - t0, history=vr.history)
    except (TimeSearchError, CostateError) as exc:
        raise CliError(f"solver failed: {exc}", EXIT_SOLVER) from None
    out_json = _out(args.output, "result.json")
    out_csv = _out(args.path_output, "reconstruction.csv")
    _write(io.write_result, rec, out_json)
    _write(io.write_path, rec.path, out_csv)
    print(f"status {rec.status}, endpoint error {rec.endpoint_error:.3e}, length {rec.length:.6g}, "
          f"energy {rec.energy:.6g}" + (f", T* {rec.T_star:.6g}" if rec.T_star is not None else ""))
    if args.max_error is not None and not rec.endpoint_error <= args.max_error:
        print(f"endpoint error {rec.endpoint_error:.3e} exceeds --max-error {args.max_error:g}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _resample(path: PiecewisePath, s):
    tn = path.times / path.times[-1]
    return np.column_stack([np.interp(s, tn, path.points[:, i]) for i in range(path.dim)])


def cmd_compare(args):
    a = _read_path(args.original)
    b = _read_path(args.reconstructed)
    if a.dim != b.dim:
        raise CliError(f"dimension mismatch: {args.original} has d={a.dim}, {args.reconstructed} has d={b.dim}")
    sa, sb = signature_of_path(a, args.depth), signature_of_path(b, args.depth)
    diff = np.abs(sa.coeffs - sb.coeffs)
    max_abs = float(diff.max())
    max_rel = float(np.max(diff / np.maximum(np.abs(sa.coeffs), 1e-12)))
    la, lb = a.length(), b.length()
    points = args.points or max(len(a.times), len(b.times))
    s = np.linspace(0.0, 1.0, points)
    xa, xb = _resample(a, s), _resample(b, s)
    out = _out(args.output, "compare.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    d = a.dim
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s"] + [f"original_x{i + 1}" for i in range(d)] + [f"reconstructed_x{i + 1}" for i in range(d)])
        for k in range(points):
            w.writerow([repr(float(s[k]))] + [repr(float(v)) for v in xa[k]] + [repr(float(v)) for v in xb[k]])
    print(f"max abs signature error {max_abs:.6e}")
    print(f"max rel signature error {max_rel:.6e}")
    print(f"original length {la:.9g}")
    print(f"reconstructed length {lb:.9g}")
    print(f"plot data {out}")
    failed = False
    if args.max_sig_error is not None and not max_abs <= args.max_sig_error:
        print(f"signature error exceeds {args.max_sig_error:g}", file=sys.stderr)
        failed = True
    if args.length_slack is not None and not lb <= la * (1 + args.length_slack):
        print(f"reconstructed length exceeds original by more than {args.length_slack:.1%}", file=sys.stderr)
        failed = True
    return EXIT_CHECK if failed else EXIT_OK


def cmd_gamma_sweep(args):
    target = _read_signature(args.target)
    _check_target(target, args)
    init = initial_controls(target, args.steps, args.horizon, PENALTY)
    rows = []
    for g in args.gammas:
        args.gamma = g
        try:
            res = solve(target, init, _solver_params(args, PENALTY))
            rows.append([g, res.endpoint_error, res.energy, res.length, res.status, res.iterations_used])
        except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
            log.warning("gamma=%g failed: %s", g, exc)
            rows.append([g, math.nan, math.nan, math.nan, f"error: {exc}", 0])
    out = _out(args.output, "gamma_sweep.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "endpoint_error", "energy", "length", "status", "iterations"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r[:4]] + r[4:])
    for r in rows:
        print(f"gamma {r[0]:<10g} endpoint_error {r[1]:.3e} energy {r[2]:.6g} length {r[3]:.6g} {r[4]}")
    return EXIT_SOLVER if all(str(r[4]).startswith("error") for r in rows) else EXIT_OK


# ---------------------------------------------------------------- parser


def _solver_flags(p, horizon=True):
    d = SolverParams()
    p.add_argument("--steps", type=_positive(int), default=d.steps, help="control grid size D")
    p.add_argument("--max-iter", type=_positive(int), default=None, help="iteration cap per solve")
    p.add_argument("--gamma", type=_nonneg_float, default=d.gamma, help="terminal penalty weight")
    p.add_argument("--C0", type=_positive(float), default=d.C0, help="initial augmentation constant")
    p.add_argument("--stall-tol", type=_nonneg_float, default=d.stall_tol)
    p.add_argument("--costate-scheme", choices=COSTATE_SCHEMES, default=d.costate_scheme)
    if horizon:
        p.add_argument("--horizon", type=_positive(float), default=d.horizon, help="penalty-mode horizon")
    p.add_argument("--group-tol", type=_positive(float), default=1e-6,
                   help="group-likeness tolerance for the target")
    p.add_argument("--allow-non-group-like", action="store_true",
                   help="warn instead of failing when the target is not group-like")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigrecover", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate an OU or Brownian path to CSV")
    p.add_argument("process", choices=["ou", "bm"])
    o = OuParams()
    p.add_argument("--dim", type=_positive(int), default=o.dim)
    p.add_argument("--theta", type=float, default=o.theta)
    p.add_argument("--kappa", type=_nonneg_float, default=o.kappa)
    p.add_argument("--sigma", type=_nonneg_float, default=o.sigma)
    p.add_argument("--steps", type=_positive(int), default=o.steps)
    p.add_argument("--horizon", type=_positive(float), default=o.horizon)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sign", parents=[common], help="signature of a CSV path")
    p.add_argument("--input", required=True)
    p.add_argument("--depth", type=_positive(int), required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("reconstruct", parents=[common], help="shortest path with a target signature")
    p.add_argument("--target", required=True)
    p.add_argument("--mode", choices=["penalty", "vartime"], default="penalty")
    _solver_flags(p)
    t = TimeSearchParams()
    p.add_argument("--eps", type=_positive(float), default=t.eps, help="feasibility tolerance (vartime)")
    p.add_argument("--T-init", dest="T_init", type=_positive(float), default=None)
    p.add_argument("--grow", type=float, default=t.grow)
    p.add_argument("--refine-steps", type=int, default=t.refine_steps)
    p.add_argument("--max-expansions", type=int, default=t.max_expansions)
    p.add_argument("--seed-time-from-penalty", action="store_true",
                   help="start the time search at the length of a penalty-mode solution")
    p.add_argument("--max-error", type=_nonneg_float, default=None,
                   help="exit 1 if the endpoint error exceeds this value")
    p.add_argument("-o", "--output", help="result JSON")
    p.add_argument("--path-output", help="reconstructed path CSV")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", parents=[common], help="compare two paths and emit plot data")
    p.add_argument("--original", required=True)
    p.add_argument("--reconstructed", required=True)
    p.add_argument("--depth", type=_positive(int), required=True)
    p.add_argument("--points", type=_positive(int), default=None, help="rows of plot data")
    p.add_argument("--max-sig-error", type=_nonneg_float, default=None)
    p.add_argument("--length-slack", type=_nonneg_float, default=None,
                   help="fail unless reconstructed length <= original * (1 + slack)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gamma-sweep", parents=[common], help="penalty solves over a list of gamma values")
    p.add_argument("--target", required=True)
    p.add_argument("--gammas", type=_float_list, required=True, help="e.g. 10,100,1000")
    _solver_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gamma_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_iter", 0) is None:
        args.max_iter = 20000 if getattr(args, "mode", "penalty") == "vartime" else SolverParams().max_iter
    try:
        return args.func(args)
    except CliError as exc:
        print(f"sigrecover {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
