#!/usr/bin/env python3
"""
Kernel benchmark: numba vs numpy backends.

Times the three kernels that dominate a solve (Chen flow, costate sweep,
forward update) and one full fixed-horizon solve per backend, and checks
that both backends agree. Prints a table; ``--json`` writes the raw numbers.
"""

import argparse
import json
import sys
import time

import numpy as np

from sigrecover import _layout
from sigrecover.kernels import get_backend
from sigrecover.procgen import OuParams, simulate_ou
from sigrecover.signature import signature_of_path

WARMUP_RUNS = 2
BENCH_RUNS = 5


def best_time(fn, runs=BENCH_RUNS, warmup=WARMUP_RUNS):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(runs):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def make_case(dim, depth, steps, seed):
    path = simulate_ou(OuParams(dim=dim, steps=steps, seed=seed))
    target = signature_of_path(path, depth).coeffs
    rng = np.random.default_rng(seed)
    controls = rng.standard_normal((steps, dim))
    return target, controls


def run_case(dim, depth, steps, seed=0):
    target, controls = make_case(dim, depth, steps, seed)
    off = _layout.offsets(dim, depth)
    dt = 1.0 / steps
    row = {"dim": dim, "depth": depth, "steps": steps, "size": int(off[depth + 1])}
    outs = {}
    for name in ("numba", "numpy"):
        be = get_backend(name)
        states = be.chen_flow(controls * dt, dim, depth, off)
        p, _, _ = be.costate_sweep(states, controls, target, 1e3, dt, 50, 1e-10, False, dim, depth, off)
        row[f"{name}_flow"] = best_time(lambda: be.chen_flow(controls * dt, dim, depth, off))
        row[f"{name}_costate"] = best_time(
            lambda: be.costate_sweep(states, controls, target, 1e3, dt, 50, 1e-10, False, dim, depth, off))
        row[f"{name}_forward"] = best_time(
            lambda: be.forward_update(p, controls, target, 1e3, 1e3, dt, False, dim, depth, off))
        outs[name] = (states, p, be.forward_update(p, controls, target, 1e3, 1e3, dt, False, dim, depth, off)[1])
    row["max_diff"] = float(max(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))
                                for a, b in zip(outs["numba"], outs["numpy"])))
    return row


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--json", help="write results to this file")
    args = parser.parse_args(argv)

    cases = [(2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 4)]
    rows = []
    print(f"{'d':>2} {'N':>2} {'size':>5} | {'kernel':<8} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for dim, depth in cases:
        row = run_case(dim, depth, args.steps)
        rows.append(row)
        for k in ("flow", "costate", "forward"):
            a, b = row[f"numba_{k}"] * 1e3, row[f"numpy_{k}"] * 1e3
            print(f"{dim:>2} {depth:>2} {row['size']:>5} | {k:<8} {a:>10.3f} {b:>10.3f} {b / a:>7.1f}x")
        if row["max_diff"] > 1e-9:
            print(f"backends disagree: max diff {row['max_diff']:.3e}", file=sys.stderr)
            return 1
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
