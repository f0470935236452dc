"""Command-line front end.

Subcommands: factor, subset-sum, sat, bench, analyze.  Every run takes an
optional INI config file ([dynamics] / [integrator] sections), applies
command-line overrides on top, writes machine-readable artifacts into the
output directory, and emits a manifest sufficient to reproduce the run.

Exit codes: 0 solved/completed, 2 budget exhausted, 1 usage or error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from .analyze import atlas_json, avalanche_stats, find_critical
from .dynamics import DynParams
from .encode import (
    ClauseSystem,
    EncodeError,
    SubsetSumInstance,
    compile_factor,
    compile_subset_sum,
    parse_dimacs,
    remainder_check,
    tseitin,
)
from .circuit import Circuit
from .harness import bench_scaling, gen_subset_sum_hard
from .integrate import IntegratorConfig, solve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


def load_config(path=None) -> tuple[DynParams, IntegratorConfig]:
    params = DynParams()
    config = IntegratorConfig()
    if path is not None:
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise FileNotFoundError(path)
        if cp.has_section("dynamics"):
            for key, value in cp.items("dynamics"):
                if not hasattr(params, key):
                    raise ValueError(f"unknown dynamics key {key!r}")
                setattr(params, key, float(value))
        if cp.has_section("integrator"):
            for key, value in cp.items("integrator"):
                if not hasattr(config, key):
                    raise ValueError(f"unknown integrator key {key!r}")
                current = getattr(config, key)
                if isinstance(current, int) and not isinstance(current, bool):
                    setattr(config, key, int(value))
                elif isinstance(current, float):
                    setattr(config, key, float(value))
                else:
                    setattr(config, key, value)
    return params, config


def _apply_overrides(config: IntegratorConfig, args) -> IntegratorConfig:
    if args.seed is not None:
        config.rng_seed = args.seed
    if args.method is not None:
        config.method = args.method
    if args.max_steps is not None:
        config.max_steps = args.max_steps
    if args.noise is not None:
        config.noise_amp = args.noise
    if getattr(args, "restarts", None) is not None:
        config.restarts = args.restarts
    return config


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_run(outdir: Path, args, report, traj) -> list[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    (outdir / "report.json").write_text(report.to_json())
    artifacts.append("report.json")
    traj.to_csv(outdir / "trajectory.csv")
    artifacts.append("trajectory.csv")
    (outdir / "switch_events.json").write_text(traj.events_json())
    artifacts.append("switch_events.json")
    manifest = {
        "command": sys.argv[1:] if sys.argv[0].endswith(("memsolve", "cli.py")) else vars(args).get("_argv", sys.argv[1:]),
        "seed": report.params_echo["integrator"]["rng_seed"],
        "config_echo": report.params_echo,
        "artifacts": {a: _sha256(outdir / a) for a in artifacts},
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return artifacts


def _decode_int(assignment: dict[int, int], bit_nets: list[int]) -> int:
    return sum(assignment[b] << i for i, b in enumerate(bit_nets))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_factor(args) -> int:
    n = args.n
    if n % 2 == 0 or n < 9:
        print(f"error: n must be an odd integer >= 9, got {n}", file=sys.stderr)
        return EXIT_ERROR
    params, config = load_config(args.config)
    config = _apply_overrides(config, args)
    circuit, inst = compile_factor(n)
    system = tseitin(circuit)
    report, traj = solve(system, params, config)
    _write_run(Path(args.out), args, report, traj)
    if report.status != "solved":
        print(f"budget exhausted after {report.steps_used} steps")
        return EXIT_BUDGET
    p = _decode_int(report.assignment, inst.p_bits)
    q = _decode_int(report.assignment, inst.q_bits)
    _, ok = remainder_check(n, p, q)
    if not ok or p * q != n:
        print(f"error: decoded ({p}, {q}) fails verification", file=sys.stderr)
        return EXIT_ERROR
    print(f"{n} = {p} * {q}")
    return EXIT_OK


def cmd_subset_sum(args) -> int:
    params, config = load_config(args.config)
    config = _apply_overrides(config, args)
    if args.gen is not None:
        N, seed = args.gen
        inst = gen_subset_sum_hard(N, seed)
    elif args.instance is not None:
        inst = SubsetSumInstance.from_json(Path(args.instance).read_text())
    else:
        print("error: give an instance file or --gen N SEED", file=sys.stderr)
        return EXIT_ERROR
    try:
        circuit, cinst = compile_subset_sum(inst.G, inst.p, inst.s)
    except EncodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    system = tseitin(circuit)
    report, traj = solve(system, params, config)
    _write_run(Path(args.out), args, report, traj)
    if report.status != "solved":
        print(f"budget exhausted after {report.steps_used} steps")
        return EXIT_BUDGET
    chosen = [g for g, b in zip(cinst.G, cinst.selector_bits)
              if report.assignment[b] == 1]
    if sum(chosen) != inst.s:
        print("error: decoded subset fails verification", file=sys.stderr)
        return EXIT_ERROR
    print(f"subset summing to {inst.s}: {chosen}")
    return EXIT_OK


def cmd_sat(args) -> int:
    params, config = load_config(args.config)
    config = _apply_overrides(config, args)
    try:
        text = Path(args.cnf).read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        system = parse_dimacs(text)
    except EncodeError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report, traj = solve(system, params, config)
    _write_run(Path(args.out), args, report, traj)
    if report.status != "solved":
        print(f"budget exhausted after {report.steps_used} steps")
        return EXIT_BUDGET
    lits = [(n + 1) if report.assignment[n] else -(n + 1)
            for n in range(system.num_nets)]
    print("s SATISFIABLE")
    for i in range(0, len(lits), 20):
        print("v " + " ".join(str(x) for x in lits[i:i + 20]))
    print("v 0")
    return EXIT_OK


def cmd_bench(args) -> int:
    params, config = load_config(args.config)
    config = _apply_overrides(config, args)
    lo, hi = (int(x) for x in args.n.split(":"))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "bench.csv"
    rows, fits = bench_scaling(
        range(lo, hi + 1), args.per_n, params, config, out_path=csv_path
    )
    (outdir / "fits.json").write_text(json.dumps(fits, indent=1))
    manifest = {
        "command": sys.argv[1:],
        "seed": config.rng_seed,
        "config_echo": {"dynamics": params.as_dict(), "integrator": config.as_dict()},
        "artifacts": {p.name: _sha256(p) for p in (csv_path, outdir / "fits.json")},
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    failed = [r for r in rows if r.status.startswith("error")]
    print(f"{len(rows)} rows ({len(failed)} failed); fits written to {outdir}")
    return EXIT_OK if len(failed) < len(rows) else EXIT_ERROR


def _load_system(path: Path) -> ClauseSystem:
    if path.suffix == ".cnf":
        return parse_dimacs(path.read_text())
    doc = json.loads(path.read_text())
    if "gates" in doc:
        return tseitin(Circuit.from_json(path.read_text()))
    return ClauseSystem.from_json(path.read_text())


def cmd_analyze(args) -> int:
    params, config = load_config(args.config)
    config = _apply_overrides(config, args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.what == "critical":
        try:
            system = _load_system(Path(args.system))
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        points = find_critical(
            system, params, seeds=args.seeds, rng_seed=config.rng_seed
        )
        (outdir / "critical_points.json").write_text(atlas_json(points))
        print(f"{len(points)} critical points written")
        return EXIT_OK
    if args.what == "avalanche":
        try:
            events_doc = json.loads(Path(args.events).read_text())
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        from .analyze import SwitchEvent

        events = [SwitchEvent(e["step"], e["net"], e["new_sign"]) for e in events_doc]
        stats = avalanche_stats(events, args.window)
        with open(outdir / "avalanche.csv", "w") as fh:
            fh.write("size,count\n")
            for size, count in stats.to_csv_rows():
                fh.write(f"{size},{count}\n")
        print(f"max cluster {stats.max_size}, mean {stats.mean_size:.2f}")
        return EXIT_OK
    print(f"error: unknown analyze target {args.what!r}", file=sys.stderr)
    return EXIT_ERROR


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI config file")
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--method", choices=["euler_adaptive", "trapezoid"],
                        default=None)
    common.add_argument("--max-steps", type=int, default=None, dest="max_steps")
    common.add_argument("--noise", type=float, default=None,
                        help="voltage noise amplitude")
    common.add_argument("--restarts", type=int, default=None)

    ap = argparse.ArgumentParser(prog="memsolve")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor", parents=[common],
                       help="factor an odd integer")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("subset-sum", parents=[common],
                       help="solve a subset-sum instance")
    p.add_argument("instance", nargs="?", default=None,
                   help='instance JSON {"G": [...], "p": int, "s": int}')
    p.add_argument("--gen", nargs=2, type=int, metavar=("N", "SEED"),
                   default=None, help="generate a planted hard instance")
    p.set_defaults(func=cmd_subset_sum)

    p = sub.add_parser("sat", parents=[common], help="solve a DIMACS CNF file")
    p.add_argument("cnf")
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("bench", parents=[common],
                       help="subset-sum scaling benchmark")
    p.add_argument("--n", default="4:10", help="N range lo:hi")
    p.add_argument("--per-n", type=int, default=5, dest="per_n")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", parents=[common], help="phase-space diagnostics")
    p.add_argument("what", choices=["critical", "avalanche"])
    p.add_argument("--system", default=None,
                   help="clause-system/circuit JSON or DIMACS file")
    p.add_argument("--seeds", type=int, default=64)
    p.add_argument("--events", default=None, help="switch-events JSON")
    p.add_argument("--window", type=int, default=10)
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (EncodeError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
