#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Runs the three hot kernels (mode response table, dual-norm objective
table, batched RK4 integration) on a generated network at a chosen size
and reports best-of-N wall times for both backends. Numba timings exclude
compilation (one warm-up call per kernel).

Usage:
    python benchmarks/bench_backends.py [--n 394] [--steps 100]
        [--samples 64] [--rk4-steps 1000] [--repeat 5] [--out bench.json]
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from nadirwc import generate_random_network, modal_basis, stability_limit
from nadirwc import kernels


def best_of(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=394, help="network size")
    parser.add_argument("--steps", type=int, default=100, help="table time steps")
    parser.add_argument("--samples", type=int, default=64, help="RK4 batch width")
    parser.add_argument("--rk4-steps", type=int, default=1000, help="RK4 step count")
    parser.add_argument("--repeat", type=int, default=5, help="best-of repetitions")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", type=str, default=None, help="optional JSON output")
    args = parser.parse_args()

    model = generate_random_network(
        args.n, seed=args.seed, weight_scale=50.0, topology="random-tree-plus-edges"
    )
    basis = modal_basis(model)
    times = np.arange(1, args.steps + 1) * 0.01
    resp = kernels._mode_response_table_numpy(
        basis.eigvals, basis.rep_inertia, basis.rep_damping, times
    )
    eigvecs_t = np.ascontiguousarray(basis.eigvecs.T)
    inv_sqrt_r = 1.0 / np.sqrt(basis.r)
    rng = np.random.default_rng(args.seed)
    u_cols = np.ascontiguousarray(rng.standard_normal((args.n, args.samples)))
    rk4_step = 0.8 * stability_limit(model)

    cases = {
        "mode_response_table": (
            kernels._mode_response_table_numpy,
            getattr(kernels, "_mode_response_table_numba", None),
            (basis.eigvals, basis.rep_inertia, basis.rep_damping, times),
        ),
        "nadir_dual_table": (
            kernels._nadir_dual_table_numpy,
            getattr(kernels, "_nadir_dual_table_numba", None),
            (basis.scaled_eigvecs, eigvecs_t, resp, inv_sqrt_r, 0.5, 0),
        ),
        "rk4_swing": (
            kernels._rk4_swing_numpy,
            getattr(kernels, "_rk4_swing_numba", None),
            (
                model.inertia,
                model.damping,
                model.laplacian,
                u_cols,
                rk4_step,
                args.rk4_steps,
                10,
            ),
        ),
    }

    print(
        f"n={args.n} steps={args.steps} samples={args.samples}"
        f" rk4_steps={args.rk4_steps} repeat={args.repeat}"
    )
    header = f"{'kernel':<22} {'numpy [s]':>12} {'numba [s]':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))

    results = {}
    for name, (fn_np, fn_nb, fn_args) in cases.items():
        t_np = best_of(fn_np, fn_args, args.repeat)
        if fn_nb is not None:
            fn_nb(*fn_args)  # compile outside the timing
            t_nb = best_of(fn_nb, fn_args, args.repeat)
            speedup = t_np / t_nb
            print(f"{name:<22} {t_np:>12.5f} {t_nb:>12.5f} {speedup:>8.2f}x")
            results[name] = {"numpy_s": t_np, "numba_s": t_nb, "speedup": speedup}
        else:
            print(f"{name:<22} {t_np:>12.5f} {'n/a':>12} {'n/a':>9}")
            results[name] = {"numpy_s": t_np}

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "n": args.n,
                    "steps": args.steps,
                    "samples": args.samples,
                    "rk4_steps": args.rk4_steps,
                    "results": results,
                },
                fh,
                indent=2,
            )
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
