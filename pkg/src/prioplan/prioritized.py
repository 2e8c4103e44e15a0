"""Prioritized planning with safe-start intervals and re-scheduling.

Robots are planned one by one in priority order; every robot treats the
trajectories of the robots planned before it as moving obstacles, and the
start locations of all other robots as obstacles during ``[0, ssi_k)``.

Three solvers share :func:`plan_with_ordering`:

* :func:`plan_once` - a single attempt with the initial ordering;
* :func:`deterministic_reschedule` - on failure the failed robot is moved to
  the front, until success or an ordering repeats;
* :func:`random_reschedule` - on failure a fresh random ordering is tried,
  until success or the time cap.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Point, Trajectory
from .grid import Cell, GridMap, MoveModel, disk_fits, distance_map, distance_maps
from .sipp import ObstacleField, search


@dataclass(frozen=True)
class Robot:
    id: int
    start: Cell
    goal: Cell


@dataclass(frozen=True)
class Instance:
    grid: GridMap
    robots: tuple[Robot, ...]
    radius: float

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.robots)

    def robot(self, rid: int) -> Robot:
        for r in self.robots:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def check(self, mm: MoveModel) -> None:
        """Raise ``ValueError`` unless the instance is valid for ``mm``."""
        ids = self.ids
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate robot ids")
        sep = 2 * self.radius
        for attr in ("start", "goal"):
            pts = [getattr(r, attr) for r in self.robots]
            if len(set(pts)) != len(pts):
                raise ValueError(f"{attr} cells must be distinct")
            for a in range(len(pts)):
                for b in range(a + 1, len(pts)):
                    if math.dist(pts[a], pts[b]) < sep:
                        raise ValueError(f"{attr}s of robots {ids[a]} and {ids[b]} overlap")
        for r in self.robots:
            for c in (r.start, r.goal):
                if not disk_fits(c, self.grid, self.radius):
                    raise ValueError(f"robot {r.id} cannot rest at {c}")
            if not math.isfinite(distance_map(r.goal, self.grid, mm).get(r.start, math.inf)):
                raise ValueError(f"robot {r.id} has no path ignoring other robots")


# ---------------------------------------------------------------- clocks

class WallClock:
    """Elapsed wall time since construction."""

    def __init__(self):
        self._t0 = time.perf_counter()

    def charge(self, units: int) -> None:
        pass

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0


class WorkClock:
    """Deterministic clock: planner work units times a fixed nominal cost.

    A unit is one search expansion or one obstacle-segment interval
    evaluation. Runs timed with it are reproducible bit for bit, including
    where a time cap cuts them off.
    """

    SECONDS_PER_UNIT = 2e-6

    def __init__(self, seconds_per_unit: float = SECONDS_PER_UNIT):
        self.units = 0
        self.seconds_per_unit = seconds_per_unit

    def charge(self, units: int) -> None:
        self.units += units

    def elapsed(self) -> float:
        return self.units * self.seconds_per_unit


def make_clock(kind: str):
    if kind == "wall":
        return WallClock()
    if kind == "work":
        return WorkClock()
    raise ValueError(f"unknown clock {kind!r}")


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class AllPlanned:
    trajectories: tuple[Trajectory, ...]


@dataclass(frozen=True)
class FailedAt:
    robot_id: int
    position: int


@dataclass
class SolveResult:
    success: bool
    trajectories: tuple[Trajectory, ...] | None = None
    failed_robot: int | None = None
    attempts: int = 0
    elapsed: float = 0.0
    timed_out: bool = False
    orderings: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "success" if self.success else "failure"


class _Heuristics:
    """True agent-free distances to each goal, computed once per instance."""

    def __init__(self, inst: Instance, mm: MoveModel):
        maps = distance_maps([r.goal for r in inst.robots], inst.grid, mm)
        self._maps = dict(zip(inst.ids, maps))

    def distances(self, rid: int) -> dict[Cell, float]:
        return self._maps[rid]

    def __call__(self, rid: int):
        d = self.distances(rid)
        return lambda c: d.get(c, math.inf)


def initial_ordering(inst: Instance, policy: str = "shortest_first",
                     mm: MoveModel | None = None,
                     estimates: dict[int, float] | None = None) -> tuple[int, ...]:
    """Priority ordering by agent-free path length, ties by ascending id."""
    if policy in ("shortest", "longest"):
        policy += "_first"
    if policy not in ("shortest_first", "longest_first"):
        raise ValueError(f"unknown policy {policy!r}")
    if estimates is None:
        mm = mm or MoveModel(radius=inst.radius)
        estimates = {r.id: distance_map(r.goal, inst.grid, mm).get(r.start, math.inf)
                     for r in inst.robots}
    sign = 1.0 if policy == "shortest_first" else -1.0
    return tuple(sorted(inst.ids, key=lambda rid: (sign * estimates[rid], rid)))


def plan_with_ordering(inst: Instance, ordering: Sequence[int], ssi_k: float,
                       mm: MoveModel | None = None, clock=None,
                       heuristics: _Heuristics | None = None) -> AllPlanned | FailedAt:
    """Plan robots sequentially in ``ordering`` (index 0 first)."""
    ordering = tuple(ordering)
    if sorted(ordering) != sorted(inst.ids):
        raise ValueError("ordering is not a permutation of the robot ids")
    if not ssi_k >= 0:
        raise ValueError("ssi_k must be >= 0")
    mm = mm or MoveModel(radius=inst.radius)
    heuristics = heuristics or _Heuristics(inst, mm)
    field_ = ObstacleField(inst.grid, mm)
    if ssi_k > 0:
        for r in inst.robots:
            field_.add_ssi_disk(Point(*r.start), ssi_k, owner=r.id)
    planned = {}
    try:
        for pos, rid in enumerate(ordering):
            robot = inst.robot(rid)
            traj, _ = search(robot.start, robot.goal, field_.view(rid), mm,
                             heuristics(rid), robot_id=rid)
            if traj is None:
                return FailedAt(rid, pos)
            planned[rid] = traj
            field_.add_trajectory(traj)
    finally:
        if clock is not None:
            clock.charge(field_.work)
    return AllPlanned(tuple(planned[r] for r in inst.ids))


def _setup(inst, policy, mm, clock):
    mm = mm or MoveModel(radius=inst.radius)
    clock = clock if clock is not None else WallClock()
    heur = _Heuristics(inst, mm)
    est = {r.id: heur.distances(r.id).get(r.start, math.inf) for r in inst.robots}
    return mm, clock, heur, initial_ordering(inst, policy, estimates=est)


def plan_once(inst: Instance, policy: str = "shortest_first", ssi_k: float = 0.0,
              mm: MoveModel | None = None, clock=None) -> SolveResult:
    mm, clock, heur, order = _setup(inst, policy, mm, clock)
    res = plan_with_ordering(inst, order, ssi_k, mm, clock, heur)
    if isinstance(res, AllPlanned):
        return SolveResult(True, res.trajectories, attempts=1, elapsed=clock.elapsed(),
                           orderings=[order])
    return SolveResult(False, failed_robot=res.robot_id, attempts=1,
                       elapsed=clock.elapsed(), orderings=[order])


def deterministic_reschedule(inst: Instance, policy: str = "shortest_first",
                             ssi_k: float = 0.0, time_cap: float = math.inf,
                             mm: MoveModel | None = None, clock=None) -> SolveResult:
    """Promote the failed robot to the front until success or a repeated ordering."""
    mm, clock, heur, order = _setup(inst, policy, mm, clock)
    history: set[tuple[int, ...]] = set()
    tried: list[tuple[int, ...]] = []
    while True:
        history.add(order)
        tried.append(order)
        res = plan_with_ordering(inst, order, ssi_k, mm, clock, heur)
        if isinstance(res, AllPlanned):
            return SolveResult(True, res.trajectories, attempts=len(tried),
                               elapsed=clock.elapsed(), orderings=tried)
        nxt = (res.robot_id,) + tuple(r for r in order if r != res.robot_id)
        out = SolveResult(False, failed_robot=res.robot_id, attempts=len(tried),
                          elapsed=clock.elapsed(), orderings=tried)
        if nxt in history:
            return out
        if out.elapsed > time_cap:
            out.timed_out = True
            return out
        order = nxt


def random_reschedule(inst: Instance, policy: str = "shortest_first", ssi_k: float = 0.0,
                      time_cap: float = 300.0, seed: int = 0,
                      mm: MoveModel | None = None, clock=None) -> SolveResult:
    """Random restarts after an initial-ordering first attempt.

    Orderings after the first are ``Generator(PCG64(seed)).permutation`` draws.
    """
    mm, clock, heur, order = _setup(inst, policy, mm, clock)
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = np.array(inst.ids)
    tried: list[tuple[int, ...]] = []
    while True:
        tried.append(order)
        res = plan_with_ordering(inst, order, ssi_k, mm, clock, heur)
        if isinstance(res, AllPlanned):
            return SolveResult(True, res.trajectories, attempts=len(tried),
                               elapsed=clock.elapsed(), orderings=tried)
        if clock.elapsed() > time_cap:
            return SolveResult(False, failed_robot=res.robot_id, attempts=len(tried),
                               elapsed=clock.elapsed(), timed_out=True, orderings=tried)
        order = tuple(int(x) for x in rng.permutation(ids))


METHODS = {"none": "plan_once", "det": "deterministic_reschedule", "rand": "random_reschedule"}


def solve(inst: Instance, method: str = "det", policy: str = "shortest_first",
          ssi_k: float = 0.0, time_cap: float = math.inf, seed: int = 0,
          mm: MoveModel | None = None, clock=None) -> SolveResult:
    """Dispatch on ``method`` in ``{"none", "det", "rand"}``."""
    if method == "none":
        return plan_once(inst, policy, ssi_k, mm, clock)
    if method == "det":
        return deterministic_reschedule(inst, policy, ssi_k, time_cap, mm, clock)
    if method == "rand":
        return random_reschedule(inst, policy, ssi_k, time_cap, seed, mm, clock)
    raise ValueError(f"unknown method {method!r}")
