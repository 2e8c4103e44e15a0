"""Builtin maps and seeded random instance generation."""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .grid import GridMap, MoveModel, disk_fits, neighbor_table
from .prioritized import Instance, Robot


class InstanceError(ValueError):
    pass


def builtin_empty(width: int = 32, height: int = 32) -> GridMap:
    return GridMap.empty(width, height)


def builtin_warehouse() -> GridMap:
    """21 rows x 35 columns, 100 shelf cells in ten 1x10 blocks.

    Shelves sit on rows 4, 7, 10, 13 and 16, in columns 5-14 and 20-29,
    leaving two-row aisles between shelf rows and a five-column border and
    central corridor.
    """
    blocked = set()
    for j in (4, 7, 10, 13, 16):
        for i0 in (5, 20):
            blocked.update((i, j) for i in range(i0, i0 + 10))
    return GridMap(35, 21, frozenset(blocked), name="warehouse")


def resolve_map(spec: str) -> GridMap:
    """``"warehouse"``, ``"empty:WxH"`` or a path to a map file."""
    from .grid import load_map

    if spec == "warehouse":
        return builtin_warehouse()
    if spec.startswith("empty:"):
        w, h = spec[len("empty:"):].lower().split("x")
        return builtin_empty(int(w), int(h))
    return load_map(spec)


def components(grid: GridMap, mm: MoveModel) -> dict:
    """Connected-component label of every restable cell."""
    table = neighbor_table(grid, mm)
    label = {}
    for c in table:
        if c in label:
            continue
        k = len(label)
        label[c] = k
        todo = deque([c])
        while todo:
            u = todo.popleft()
            for n, _ in table[u]:
                if n not in label:
                    label[n] = k
                    todo.append(n)
    return label


def _spread(cells, sep):
    for a in range(len(cells)):
        for b in range(a + 1, len(cells)):
            if math.dist(cells[a], cells[b]) < sep:
                return False
    return True


def generate_instance(grid: GridMap, n: int, radius: float, seed: int,
                      mm: MoveModel | None = None, allow_start_at_goal: bool = True,
                      max_tries: int = 1000) -> Instance:
    """Random instance with ``n`` robots drawn by ``Generator(PCG64(seed))``.

    Starts are a uniform sample without replacement from the cells a robot
    can rest in, goals an independent sample of the same kind; the draw is
    repeated until every robot can reach its goal ignoring the others.
    """
    mm = mm or MoveModel(radius=radius)
    label = components(grid, mm)
    cells = sorted(c for c in label if disk_fits(c, grid, radius))
    if n < 1 or n > len(cells):
        raise InstanceError(f"cannot place {n} robots on {len(cells)} free cells")
    rng = np.random.Generator(np.random.PCG64(seed))
    sep = 2 * radius
    for _ in range(max_tries):
        si = rng.choice(len(cells), size=n, replace=False)
        gi = rng.choice(len(cells), size=n, replace=False)
        starts = [cells[k] for k in si]
        goals = [cells[k] for k in gi]
        if any(label[s] != label[g] for s, g in zip(starts, goals)):
            continue
        if not allow_start_at_goal and any(s == g for s, g in zip(starts, goals)):
            continue
        if sep > 1.0 and not (_spread(starts, sep) and _spread(goals, sep)):
            continue
        robots = tuple(Robot(k, s, g) for k, (s, g) in enumerate(zip(starts, goals)))
        return Instance(grid, robots, radius)
    raise InstanceError(f"no valid instance after {max_tries} draws")
