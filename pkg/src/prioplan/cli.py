"""``prioplan solve | bench | validate``.

Exit codes: 0 success, 1 bad input, 2 planner failure or invalid solution.
The machine-readable result is the last line on stdout; logs go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import fields
from pathlib import Path

from .experiment import (ExperimentConfig, format_ssi, parse_ssi, run_experiment,
                         with_overrides, write_csvs)
from .formats import format_solution, load_instance, parse_solution
from .grid import MapFormatError, MoveModel
from .instances import resolve_map
from .prioritized import make_clock, solve
from .validate import metrics, validate_solution

log = logging.getLogger("prioplan")

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2
POLICIES = {"shortest": "shortest_first", "longest": "longest_first"}


class InputError(Exception):
    pass


def _ssi(text):
    try:
        return parse_ssi(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _ssi_list(text):
    return tuple(_ssi(t) for t in text.split(","))


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _planner_flags(p, defaults: bool):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--policy", choices=sorted(POLICIES), default=d("shortest"))
    p.add_argument("--time-cap", type=float, default=d(300.0), metavar="S")
    p.add_argument("--connect", type=int, choices=(4, 8), default=d(8))
    p.add_argument("--radius", type=float, default=d(0.499999))
    p.add_argument("--clock", choices=("wall", "work"), default=None,
                   help="runtime source; 'work' counts planner operations (deterministic)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prioplan", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="plan one scenario")
    s.add_argument("map", help="map file, 'warehouse' or 'empty:WxH'")
    s.add_argument("scenario")
    s.add_argument("-o", "--out", help="solution file (default: <scenario>.sol)")
    s.add_argument("--ssi", type=_ssi, default=0.0, metavar="K|inf")
    s.add_argument("--method", choices=("none", "det", "rand"), default="det")
    s.add_argument("--seed", type=_u64, default=0)
    _planner_flags(s, defaults=True)

    b = sub.add_parser("bench", help="run an experiment sweep")
    b.add_argument("--config", help="JSON file with ExperimentConfig fields")
    b.add_argument("--map")
    b.add_argument("--agents", type=_int_list)
    b.add_argument("--instances", type=int)
    b.add_argument("--ssi", type=_ssi_list, metavar="K,K,...")
    b.add_argument("--methods", type=lambda t: tuple(t.split(",")))
    b.add_argument("--seed", type=_u64)
    b.add_argument("--repeats", type=int)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out-dir", default=".")
    b.add_argument("--prefix", default="bench")
    _planner_flags(b, defaults=False)

    v = sub.add_parser("validate", help="check a solution file")
    v.add_argument("map")
    v.add_argument("scenario")
    v.add_argument("solution")
    v.add_argument("--radius", type=float, default=0.499999)
    v.add_argument("--ssi", type=_ssi, default=None, metavar="K|inf",
                   help="also check the safe-start window")
    return ap


def _load(map_spec, scen, radius):
    try:
        grid = resolve_map(map_spec)
        return load_instance(grid, scen, radius)
    except (MapFormatError, OSError) as e:
        raise InputError(str(e)) from None
    except ValueError as e:
        raise InputError(f"{map_spec}: {e}") from None


def cmd_solve(args) -> int:
    inst = _load(args.map, args.scenario, args.radius)
    mm = MoveModel(args.connect, args.radius)
    try:
        inst.check(mm)
    except ValueError as e:
        raise InputError(f"{args.scenario}: {e}") from None
    clock = make_clock(args.clock or "wall")
    res = solve(inst, args.method, POLICIES[args.policy], args.ssi, args.time_cap, args.seed,
                mm, clock)
    if not res.success:
        why = "time cap reached" if res.timed_out else f"robot {res.failed_robot} has no path"
        log.error("failure after %d attempts: %s", res.attempts, why)
        print(f"SR=0 t={res.elapsed:.3f} Msp=- Flt=- attempts={res.attempts}")
        return EXIT_FAIL
    out = Path(args.out) if args.out else Path(args.scenario).with_suffix(".sol")
    try:
        out.write_text(format_solution(res.trajectories))
    except OSError as e:
        raise InputError(f"cannot write {out}: {e}") from None
    log.info("wrote %s", out)
    msp, flt = metrics(res.trajectories)
    print(f"SR=1 t={res.elapsed:.3f} Msp={msp:.3f} Flt={flt:.3f} attempts={res.attempts}")
    return EXIT_OK


def _bench_config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"{args.config}: {e}") from None
        known = {f.name for f in fields(ExperimentConfig)}
        if unknown := set(base) - known:
            raise InputError(f"{args.config}: unknown keys {sorted(unknown)}")
        if "ssi" in base:
            base["ssi"] = [parse_ssi(str(k)) for k in base["ssi"]]
        for key in ("agents", "ssi", "methods"):
            if key in base:
                base[key] = tuple(base[key])
    if args.seed is None and "seed" not in base:
        raise InputError("bench needs --seed (or 'seed' in the config)")
    try:
        cfg = ExperimentConfig(**base)
        return with_overrides(
            cfg, map=args.map, agents=args.agents, instances=args.instances, ssi=args.ssi,
            methods=args.methods, seed=args.seed, repeats=args.repeats,
            policy=POLICIES.get(args.policy), time_cap=args.time_cap,
            connectedness=args.connect, radius=args.radius, clock=args.clock)
    except (TypeError, ValueError) as e:
        raise InputError(str(e)) from None


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    try:
        resolve_map(cfg.map)
    except (MapFormatError, OSError, ValueError) as e:
        raise InputError(f"{cfg.map}: {e}") from None
    out = Path(args.out_dir)
    runs, agg = out / f"{args.prefix}_runs.csv", out / f"{args.prefix}_aggregate.csv"
    try:
        out.mkdir(parents=True, exist_ok=True)
        for p in (runs, agg):
            p.touch()
    except OSError as e:
        raise InputError(f"cannot write to {out}: {e}") from None
    log.info("config %s", cfg)
    records = run_experiment(cfg, jobs=args.jobs)
    write_csvs(records, runs, agg)
    ok = sum(r.success for r in records)
    print(f"runs={len(records)} successes={ok} ssi={','.join(map(format_ssi, cfg.ssi))} "
          f"runs_csv={runs} aggregate_csv={agg}")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load(args.map, args.scenario, args.radius)
    try:
        trajs = parse_solution(Path(args.solution).read_text())
    except (MapFormatError, OSError) as e:
        raise InputError(f"{args.solution}: {e}") from None
    got, want = {t.robot_id for t in trajs}, set(inst.ids)
    if got != want:
        raise InputError(f"{args.solution}: robots {sorted(got)} do not match "
                         f"scenario robots {sorted(want)}")
    v = validate_solution(inst, trajs, ssi_k=args.ssi)
    if v is not None:
        print(f"INVALID {v}")
        return EXIT_FAIL
    msp, flt = metrics(trajs)
    print(f"VALID Msp={msp:.3f} Flt={flt:.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    handler = {"solve": cmd_solve, "bench": cmd_bench, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
