"""Scenario and solution text formats.

Scenario::

    agents 2
    0 0 0 4 0
    1 4 0 0 0

Solution, one robot per line, 6-decimal fixed point::

    0: (0.000000,0.000000,0.000000); (1.000000,0.000000,1.000000)
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from .geometry import Trajectory
from .grid import GridMap, MapFormatError
from .prioritized import Instance, Robot

_WAYPOINT = re.compile(r"\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)")
_LINE = re.compile(r"^\s*(-?\d+)\s*:(.*)$")
# a move whose duration is within this of its length was written at unit speed
ROUND_TRIP_TOL = 2e-6


def _lines(text: str) -> list[str]:
    lines = text.split("\n")
    while lines and lines[-1].strip() == "":
        lines.pop()
    return lines


def parse_scenario(text: str) -> list[Robot]:
    lines = _lines(text)
    if not lines:
        raise MapFormatError("empty scenario", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "agents" or not head[1].isdigit():
        raise MapFormatError("expected 'agents <int>'", 1)
    n = int(head[1])
    if len(lines) - 1 != n:
        raise MapFormatError(f"expected {n} robot lines, found {len(lines) - 1}",
                             min(len(lines), n + 1) + 1)
    robots = []
    for k, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 5:
            raise MapFormatError("expected 'id sx sy gx gy'", k)
        try:
            rid, sx, sy, gx, gy = map(int, parts)
        except ValueError:
            raise MapFormatError("robot fields must be integers", k) from None
        robots.append(Robot(rid, (sx, sy), (gx, gy)))
    if len({r.id for r in robots}) != n:
        raise MapFormatError("duplicate robot id", 2)
    return robots


def format_scenario(robots) -> str:
    out = [f"agents {len(robots)}"]
    out += [f"{r.id} {r.start[0]} {r.start[1]} {r.goal[0]} {r.goal[1]}" for r in robots]
    return "\n".join(out) + "\n"


def load_instance(grid: GridMap, scen_path, radius: float) -> Instance:
    """Read a scenario and attach it to ``grid``; cells must lie on the map."""
    robots = parse_scenario(Path(scen_path).read_text())
    for k, r in enumerate(robots, start=2):
        for c in (r.start, r.goal):
            if not grid.is_free(c):
                raise MapFormatError(f"robot {r.id}: cell {c} is blocked or off the map", k)
    return Instance(grid, tuple(robots), radius)


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def format_solution(trajs) -> str:
    lines = []
    for t in sorted(trajs, key=lambda t: t.robot_id):
        wps = "; ".join(f"({_fmt(x)},{_fmt(y)},{_fmt(tt)})" for x, y, tt in t.waypoints)
        lines.append(f"{t.robot_id}: {wps}")
    return "\n".join(lines) + "\n"


def _restore_timing(wps):
    """Undo 6-decimal rounding of unit-speed move arrivals.

    Arrival times are re-derived as departure plus exact length, so a
    written and re-read planner solution is bit-identical to the original.
    Anything further off than ``ROUND_TRIP_TOL`` is left for the validator.
    """
    out = [wps[0]]
    for x, y, t in wps[1:]:
        px, py, pt = out[-1]
        d = math.hypot(x - px, y - py)
        if d > 0 and abs((t - pt) - d) <= ROUND_TRIP_TOL:
            t = pt + d
        out.append((x, y, t))
    return tuple(out)


def parse_solution(text: str) -> list[Trajectory]:
    trajs, seen = [], set()
    for k, line in enumerate(_lines(text), start=1):
        if not line.strip():
            raise MapFormatError("blank line", k)
        m = _LINE.match(line)
        if not m:
            raise MapFormatError("expected '<id>: (x,y,t); ...'", k)
        rid = int(m.group(1))
        if rid in seen:
            raise MapFormatError(f"duplicate robot {rid}", k)
        seen.add(rid)
        body = m.group(2).strip()
        chunks = [c.strip() for c in body.split(";")]
        wps = []
        for c in chunks:
            w = _WAYPOINT.fullmatch(c)
            if not w:
                raise MapFormatError(f"malformed waypoint {c!r}", k)
            try:
                wps.append(tuple(float(v) for v in w.groups()))
            except ValueError:
                raise MapFormatError(f"non-numeric waypoint {c!r}", k) from None
        trajs.append(Trajectory(rid, _restore_timing(wps)))
    return trajs
