"""Factorial experiment driver writing per-run and aggregate CSVs."""
from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .grid import MoveModel, DEFAULT_RADIUS
from .instances import generate_instance, resolve_map
from .prioritized import make_clock, solve
from .validate import metrics, validate_solution

log = logging.getLogger(__name__)

RUN_HEADER = ["map", "agents", "ssi", "method", "seed", "repeat", "success", "runtime_s",
              "makespan", "flowtime", "attempts"]
AGG_HEADER = ["map", "agents", "ssi", "method", "runs", "success_rate", "mean_runtime_s",
              "mean_makespan", "mean_flowtime"]
METHOD_ALIASES = {"none": "none", "det": "det", "deterministic": "det",
                  "rand": "rand", "random": "rand"}
_METHOD_RANK = {"none": 0, "det": 1, "rand": 2}


def parse_ssi(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    k = float(text)
    if not k >= 0 or math.isnan(k):
        raise ValueError(f"ssi must be >= 0 or inf, got {text!r}")
    return k


def format_ssi(k: float) -> str:
    return "inf" if math.isinf(k) else f"{k:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    map: str = "empty:32x32"
    agents: tuple[int, ...] = (16,)
    instances: int = 10
    ssi: tuple[float, ...] = (0.0,)
    methods: tuple[str, ...] = ("none",)
    policy: str = "shortest_first"
    time_cap: float = 300.0
    seed: int = 0
    connectedness: int = 8
    radius: float = DEFAULT_RADIUS
    repeats: int = 10
    clock: str = "work"
    validate: bool = True

    def __post_init__(self):
        if not self.agents or min(self.agents) < 1:
            raise ValueError("agent counts must be >= 1")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if not self.time_cap > 0:
            raise ValueError("time_cap must be > 0")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        methods = tuple(METHOD_ALIASES.get(m, m) for m in self.methods)
        if bad := [m for m in methods if m not in _METHOD_RANK]:
            raise ValueError(f"unknown methods {bad}")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "agents", tuple(int(n) for n in self.agents))
        object.__setattr__(self, "ssi", tuple(float(k) for k in self.ssi))
        if any(not k >= 0 for k in self.ssi):
            raise ValueError("ssi values must be >= 0")

    def instance_seed(self, index: int) -> int:
        return self.seed + index


@dataclass(frozen=True)
class RunRecord:
    map: str
    agents: int
    ssi: float
    method: str
    seed: int
    repeat: int
    success: bool
    runtime: float
    makespan: float | None
    flowtime: float | None
    attempts: int
    trajectories: tuple = field(default=(), compare=False, repr=False)

    def key(self):
        return (self.agents, self.ssi, _METHOD_RANK[self.method], self.seed, self.repeat)

    def row(self) -> list[str]:
        opt = lambda v: "" if v is None else f"{v:.6f}"
        return [self.map, str(self.agents), format_ssi(self.ssi), self.method, str(self.seed),
                str(self.repeat), "1" if self.success else "0", f"{self.runtime:.6f}",
                opt(self.makespan), opt(self.flowtime), str(self.attempts)]


def _rand_seed(instance_seed: int, repeat: int) -> int:
    return instance_seed * 1000 + repeat


def run_cell(cfg: ExperimentConfig, n: int, index: int, ssi: float, method: str,
             repeat: int = 0, keep_trajectories: bool = False) -> RunRecord:
    """One solve of one generated instance, validated when it succeeds."""
    grid = resolve_map(cfg.map)
    mm = MoveModel(cfg.connectedness, cfg.radius)
    seed = cfg.instance_seed(index)
    inst = generate_instance(grid, n, cfg.radius, seed, mm=mm)
    res = solve(inst, method, cfg.policy, ssi, cfg.time_cap, _rand_seed(seed, repeat), mm,
                make_clock(cfg.clock))
    msp = flt = None
    if res.success:
        if cfg.validate:
            v = validate_solution(inst, res.trajectories, ssi_k=ssi)
            if v is not None:
                raise RuntimeError(f"planner produced an invalid solution "
                                   f"({grid.name}, n={n}, seed={seed}, {method}): {v}")
        msp, flt = metrics(res.trajectories)
    return RunRecord(grid.name, n, ssi, method, seed, repeat, res.success, res.elapsed, msp,
                     flt, res.attempts, res.trajectories if keep_trajectories else ())


def _cells(cfg: ExperimentConfig):
    for n in cfg.agents:
        for k in cfg.ssi:
            for method in cfg.methods:
                for index in range(cfg.instances):
                    for rep in range(cfg.repeats if method == "rand" else 1):
                        yield n, index, k, method, rep


def _run_star(args):
    return run_cell(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[RunRecord]:
    """Full factorial over agents x ssi x method x instance (x repeat)."""
    todo = [(cfg, *c) for c in _cells(cfg)]
    log.info("running %d solves", len(todo))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_run_star, todo, chunksize=1))
    else:
        records = []
        for k, args in enumerate(todo, 1):
            records.append(_run_star(args))
            log.debug("%d/%d %s", k, len(todo), records[-1])
    return sorted(records, key=RunRecord.key)


def aggregate(records) -> list[list[str]]:
    groups: dict = {}
    for r in sorted(records, key=RunRecord.key):
        groups.setdefault((r.map, r.agents, r.ssi, r.method), []).append(r)
    rows = []
    for (m, n, k, method), rs in groups.items():
        ok = [r for r in rs if r.success]
        mean = lambda xs: f"{statistics.fmean(xs):.6f}" if xs else ""
        rows.append([m, str(n), format_ssi(k), method, str(len(rs)),
                     f"{len(ok) / len(rs):.6f}", mean([r.runtime for r in ok]),
                     mean([r.makespan for r in ok]), mean([r.flowtime for r in ok])])
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def runs_csv(records) -> str:
    return _csv_text(RUN_HEADER, [r.row() for r in sorted(records, key=RunRecord.key)])


def aggregate_csv(records) -> str:
    return _csv_text(AGG_HEADER, aggregate(records))


def write_csvs(records, runs_path, agg_path) -> None:
    Path(runs_path).write_text(runs_csv(records))
    Path(agg_path).write_text(aggregate_csv(records))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
