"""Command-line front end.

Four subcommands: ``analyze`` (worst-case search, writing result.json,
table.csv and manifest.json), ``simulate`` (time-domain trajectory CSV
for a given or worst-case disturbance), ``verify`` (Monte Carlo dominance
check of the analytic table against simulation) and ``gen-random``
(random test network files). Every output directory gets a manifest that,
together with the input file, reproduces the outputs bit-identically for
the same tool version and backend.

Exit codes: 0 success, 1 property violation (dominance broken), 2 input
or usage error, 3 model outside the analytic assumptions
(non-proportional units). All times are seconds and all magnitudes
per-unit; CSV cells are plain numbers, units appear only in '#' comment
headers.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .modal import Trajectory
from .nadir import DisturbanceSpec, NadirResult, worst_case_search
from .network import (
    NetworkFormatError,
    NetworkModel,
    NonProportionalError,
    TOPOLOGIES,
    generate_random_network,
    load_network,
    save_network,
    validate_network,
)
from .simulate import (
    SimConfig,
    dominance_report,
    sample_norm_ball,
    simulate_step_response,
    stability_limit,
)

_EPILOG = (
    "environment: NADIR_WC_THREADS caps worker parallelism (default: all"
    " hardware threads); NADIR_WC_BACKEND selects the kernel backend"
    " (numba or numpy). exit codes: 0 ok, 1 property violation, 2 input"
    " error, 3 model assumption failure."
)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(command: str, input_path: Path, parameters: dict) -> dict:
    return {
        "tool": "nadirwc",
        "version": __version__,
        "command": command,
        "input": str(input_path),
        "input_sha256": _sha256(input_path),
        "parameters": parameters,
        "backend": kernels.backend(),
        "thread_cap": kernels.THREAD_CAP,
    }


def _finish_manifest(manifest: dict, started: float) -> dict:
    full = dict(manifest)
    full["duration_s"] = time.perf_counter() - started
    full["created_utc"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return full


def _fmt(x: float) -> str:
    return repr(float(x))


def _table_csv(result: NadirResult, comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    buf.write("# values per-unit; header row times in seconds; first column bus id\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bus"] + [_fmt(t) for t in result.table.times])
    for bus, row in zip(result.table.bus_ids, result.table.values):
        writer.writerow([int(bus)] + [_fmt(v) for v in row])
    return buf.getvalue()


def _trajectory_csv(traj, comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    buf.write("# t in seconds; omega_bus_* and coi in per-unit\n")
    writer = csv.writer(buf, lineterminator="\n")
    n = traj.omega.shape[0]
    writer.writerow(["t"] + [f"omega_bus_{i}" for i in range(n)] + ["coi"])
    for k, t in enumerate(traj.times):
        writer.writerow(
            [_fmt(t)] + [_fmt(v) for v in traj.omega[:, k]] + [_fmt(traj.coi[k])]
        )
    return buf.getvalue()


def _result_payload(result: NadirResult, manifest: dict) -> dict:
    return {
        "f_star_pu": result.value,
        "bus_star": result.bus,
        "t_star_s": None if result.steady_state_attained else result.time,
        "steady_state_attained": result.steady_state_attained,
        "steady_state_evaluated": result.steady_state_evaluated,
        "u0_star_pu": [float(v) for v in result.u0],
        "norm": result.spec.norm,
        "rho_pu": result.spec.rho,
        "dt_s": result.dt,
        "steps": result.steps,
        "settled": result.settled,
        "manifest": manifest,
    }


def _load_model_or_fail(path: Path) -> NetworkModel | int:
    try:
        model = load_network(path)
    except (NetworkFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = validate_network(model)
    if not report.ok:
        failing = [name for name in report.failures()]
        print(f"error: network validation failed: {', '.join(failing)}", file=sys.stderr)
        return 2
    return model


def _search_or_fail(model: NetworkModel, args) -> NadirResult | int:
    spec = DisturbanceSpec(norm=args.norm, rho=args.rho)
    try:
        result = worst_case_search(
            model,
            spec,
            dt=args.dt,
            steps=args.steps,
            steady_state=args.steady_state == "on",
        )
    except NonProportionalError as exc:
        print(f"error: proportionality: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not result.settled:
        print(
            "warning: horizon covers less than 5 m/d; the drift mode has not"
            " settled",
            file=sys.stderr,
        )
    return result


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--norm", choices=("2", "inf", "1"), default="2",
                        help="norm bounding the disturbance (default 2)")
    parser.add_argument("--rho", type=float, default=0.5,
                        help="disturbance budget in per-unit (default 0.5)")
    parser.add_argument("--dt", type=float, default=0.01,
                        help="grid spacing in seconds (default 0.01)")
    parser.add_argument("--steps", type=int, default=100,
                        help="number of grid steps (default 100)")
    parser.add_argument("--steady-state", choices=("on", "off"), default="on",
                        help="evaluate the t->infinity column (default on)")


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    model = _load_model_or_fail(args.network)
    if isinstance(model, int):
        return model
    result = _search_or_fail(model, args)
    if isinstance(result, int):
        return result

    manifest = _manifest(
        "analyze",
        args.network,
        {
            "norm": args.norm,
            "rho": args.rho,
            "dt": args.dt,
            "steps": args.steps,
            "steady_state": args.steady_state,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "result.json", _result_payload(result, manifest))
    _write_atomic(
        out / "table.csv",
        _table_csv(result, f"nadirwc analyze {args.network}"),
    )
    _write_json(out / "manifest.json", _finish_manifest(manifest, started))
    t_star = "inf" if result.steady_state_attained else f"{result.time:g} s"
    print(
        f"worst-case nadir {result.value:.6g} pu at bus {result.bus},"
        f" t = {t_star}"
    )
    return 0


def _load_u0(path: Path, n: int) -> np.ndarray:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkFormatError(f"cannot read u0 file: {exc}") from exc
    if isinstance(doc, dict):
        doc = doc.get("u0")
    if not isinstance(doc, list):
        raise NetworkFormatError("u0 file must hold a JSON array (or {'u0': [...]})")
    u0 = np.asarray(doc, dtype=np.float64)
    if u0.shape != (n,):
        raise NetworkFormatError(
            f"u0 length {u0.shape} does not match the {n}-bus network"
        )
    return u0


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    model = _load_model_or_fail(args.network)
    if isinstance(model, int):
        return model

    if args.u0 == "worst":
        result = _search_or_fail(model, args)
        if isinstance(result, int):
            return result
        u0 = np.asarray(result.u0)
    else:
        try:
            u0 = _load_u0(Path(args.u0), model.n)
        except NetworkFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    horizon = args.horizon
    if horizon is None:
        horizon = 10.0 * model.rep_inertia / model.rep_damping
    limit = stability_limit(model)
    substeps = max(10, int(math.ceil(args.dt / limit)))
    cfg = SimConfig(step=args.dt / substeps, horizon=horizon)
    traj = simulate_step_response(model, u0, cfg)
    keep = slice(None, None, substeps)
    out_traj = Trajectory(
        times=traj.times[keep],
        omega=traj.omega[:, keep],
        coi=traj.coi[keep],
    )

    manifest = _manifest(
        "simulate",
        args.network,
        {
            "u0": args.u0,
            "horizon": horizon,
            "dt": args.dt,
            "norm": args.norm,
            "rho": args.rho,
            "steps": args.steps,
            "steady_state": args.steady_state,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(
        out / "trajectory.csv",
        _trajectory_csv(out_traj, f"nadirwc simulate {args.network}"),
    )
    _write_json(out / "manifest.json", _finish_manifest(manifest, started))
    print(f"trajectory written ({out_traj.times.size} rows, {model.n} buses)")
    return 0


def cmd_verify(args) -> int:
    started = time.perf_counter()
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return 2
    model = _load_model_or_fail(args.network)
    if isinstance(model, int):
        return model
    result = _search_or_fail(model, args)
    if isinstance(result, int):
        return result

    if args.self_test:
        # Negative control: deliberately under-report the worst value so the
        # dominance check must trip.
        result = dataclasses.replace(result, value=0.5 * result.value)

    samples = sample_norm_ball(
        result.spec.norm, result.spec.rho, args.samples, model.n, args.seed
    )
    report = dominance_report(model, result.spec, result, None, samples)

    manifest = _manifest(
        "verify",
        args.network,
        {
            "samples": args.samples,
            "seed": args.seed,
            "norm": args.norm,
            "rho": args.rho,
            "dt": args.dt,
            "steps": args.steps,
            "steady_state": args.steady_state,
            "self_test": bool(args.self_test),
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "worst_value_pu": report.worst_value,
        "samples": report.count,
        "fraction_dominated": report.fraction_dominated,
        "max_excess_pu": report.max_excess,
        "slack_pu": report.slack,
        "worst_input_nadir_pu": report.worst_input_nadir,
        "worst_input_time_s": report.worst_input_time,
        "worst_input_rel_gap": report.worst_input_rel_gap,
        "ok": report.ok,
        "manifest": manifest,
    }
    _write_json(out / "dominance_report.json", payload)
    _write_json(out / "manifest.json", _finish_manifest(manifest, started))
    if not report.ok:
        print(
            f"dominance violated: max excess {report.max_excess:.3e} pu over"
            f" {report.count} samples",
            file=sys.stderr,
        )
        return 1
    print(
        f"dominance holds: {report.count} samples, worst input within"
        f" {report.worst_input_rel_gap:.2%} of the analytic value"
    )
    return 0


def cmd_gen_random(args) -> int:
    try:
        model = generate_random_network(
            n=args.n,
            seed=args.seed,
            inertia_range=(args.inertia_min, args.inertia_max),
            weight_scale=args.weight_scale,
            topology=args.topology,
            damping_pu=args.damping,
            f0_hz=args.f0,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_network(model, out)
    print(f"wrote {out} ({model.n} buses, topology {args.topology})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nadirwc",
        description=(
            "Worst-case frequency nadir of a linearized power network under"
            " norm-bounded step disturbances."
        ),
        epilog=_EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"nadirwc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="worst-case nadir search over the grid",
                       epilog=_EPILOG)
    p.add_argument("network", type=Path, help="network JSON file")
    _add_search_flags(p)
    p.add_argument("--out", type=Path, default=Path("out"),
                   help="output directory (default ./out)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="time-domain trajectory for a disturbance",
                       epilog=_EPILOG)
    p.add_argument("network", type=Path, help="network JSON file")
    p.add_argument("--u0", required=True,
                   help="JSON file with the disturbance vector, or 'worst' to"
                        " chain the analyze step")
    p.add_argument("--horizon", type=float, default=None,
                   help="simulation horizon in seconds (default 10 m/d)")
    p.add_argument("--dt", type=float, default=0.01,
                   help="output grid spacing in seconds (default 0.01)")
    p.add_argument("--norm", choices=("2", "inf", "1"), default="2",
                   help="norm for --u0 worst (default 2)")
    p.add_argument("--rho", type=float, default=0.5,
                   help="budget for --u0 worst (default 0.5)")
    p.add_argument("--steps", type=int, default=100,
                   help="search steps for --u0 worst (default 100)")
    p.add_argument("--steady-state", choices=("on", "off"), default="on",
                   help="steady-state column for --u0 worst (default on)")
    p.add_argument("--out", type=Path, default=Path("out"),
                   help="output directory (default ./out)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="Monte Carlo dominance check of the table",
                       epilog=_EPILOG)
    p.add_argument("network", type=Path, help="network JSON file")
    p.add_argument("--samples", type=int, default=200,
                   help="number of sampled disturbances (default 200)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    _add_search_flags(p)
    p.add_argument("--self-test", action="store_true",
                   help="negative control: shrink the analytic value so the"
                        " check must fail")
    p.add_argument("--out", type=Path, default=Path("out"),
                   help="output directory (default ./out)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-random", help="write a random proportional network",
                       epilog=_EPILOG)
    p.add_argument("--n", type=int, required=True, help="number of buses")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("--topology", choices=TOPOLOGIES, default="ring",
                   help="coupling topology (default ring)")
    p.add_argument("--weight-scale", type=float, default=1.0,
                   help="Laplacian coupling scale (default 1.0)")
    p.add_argument("--inertia-min", type=float, default=0.0,
                   help="inertia range lower bound in seconds (default 0)")
    p.add_argument("--inertia-max", type=float, default=1000.0,
                   help="inertia range upper bound in seconds (default 1000)")
    p.add_argument("--damping", type=float, default=None,
                   help="representative damping in per-unit (default 3.65 *"
                        " mean inertia)")
    p.add_argument("--f0", type=float, default=50.0,
                   help="nominal frequency in Hz (default 50)")
    p.add_argument("--out", type=Path, required=True, help="output network JSON file")
    p.set_defaults(func=cmd_gen_random)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
