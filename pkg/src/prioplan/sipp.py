"""Safe-interval search for one robot among moving disks.

The search state is ``(cell, safe-interval index)`` with the earliest known
arrival time as its cost. Moves are checked in continuous time against every
dynamic obstacle through the exact forbidden-departure sets of
:mod:`prioplan.geometry`; nothing is discretized.

:class:`ObstacleField` holds the dynamic obstacles of one prioritized
planning attempt. Trajectories are added as robots get planned, and the
per-cell / per-move interval sets are computed lazily and updated
incrementally, so a later robot only pays for the cells its search touches.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from .geometry import EPS, Point, Trajectory, _departure_window, _point_window
from .grid import Cell, GridMap, MoveModel, heuristic as grid_heuristic, neighbor_table
from .intervals import INF, IntervalSet, complement, first_free, normalize

__all__ = [
    "TrajectoryObstacle", "SSIDisk", "DynamicObstacle", "SafeIntervalTable",
    "ObstacleField", "build_safe_intervals", "sipp_search", "Trajectory",
]


@dataclass(frozen=True)
class TrajectoryObstacle:
    trajectory: Trajectory


@dataclass(frozen=True)
class SSIDisk:
    """Start location of ``owner`` kept clear of everybody else during ``[0, k)``."""

    center: Point
    k: float
    owner: int | None = None

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError("safe-start endpoint must be >= 0")


DynamicObstacle = Union[TrajectoryObstacle, SSIDisk]


class SafeIntervalTable:
    """Safe occupancy intervals per free cell; untouched cells are ``[0, inf)``."""

    def __init__(self, intervals: dict[Cell, IntervalSet] | None = None):
        self._iv = dict(intervals or {})

    def __getitem__(self, c: Cell) -> IntervalSet:
        return self._iv.get(c, IntervalSet.full())

    def cells(self):
        return self._iv.keys()


def _cells_near(x0, y0, x1, y1, reach, valid):
    """Restable cells whose center lies strictly within ``reach`` of the segment."""
    out = []
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    for i in range(math.ceil(min(x0, x1) - reach), math.floor(max(x0, x1) + reach) + 1):
        for j in range(math.ceil(min(y0, y1) - reach), math.floor(max(y0, y1) + reach) + 1):
            if (i, j) not in valid:
                continue
            f = 0.0 if ll == 0 else max(0.0, min(1.0, ((i - x0) * dx + (j - y0) * dy) / ll))
            ex, ey = i - x0 - f * dx, j - y0 - f * dy
            if ex * ex + ey * ey < reach * reach:
                out.append((i, j))
    return out


class ObstacleField:
    """Spatially indexed dynamic obstacles with lazily cached interval sets.

    Every obstacle segment is registered at each cell within
    ``sep + max_step`` of it; that covers both a robot resting at the cell
    and any move leaving the cell.
    """

    def __init__(self, grid: GridMap, mm: MoveModel):
        self.grid = grid
        self.mm = mm
        self.sep = mm.sep
        self.reach = mm.sep + mm.max_step
        self.neighbors = neighbor_table(grid, mm)
        self._segs: dict[Cell, list] = {}
        self._ssi: dict[Cell, list] = {}
        self._cell: dict[Cell, list] = {}
        self._edge: dict[tuple[Cell, Cell], list] = {}
        self._cell_ssi: dict[Cell, list] = {}
        self._edge_ssi: dict[tuple[Cell, Cell], list] = {}
        self.work = 0

    def add(self, obstacle: DynamicObstacle) -> None:
        if isinstance(obstacle, SSIDisk):
            self.add_ssi_disk(obstacle.center, obstacle.k, obstacle.owner)
        else:
            self.add_trajectory(obstacle.trajectory)

    def add_trajectory(self, traj: Trajectory) -> None:
        for seg in traj.raw_segments():
            ox, oy, s0, vx, vy, s1 = seg
            if s1 <= s0:
                continue
            if vx == 0.0 and vy == 0.0:
                ex, ey = ox, oy
            else:
                ex, ey = ox + vx * (s1 - s0), oy + vy * (s1 - s0)
            item = (ox, oy, s0, vx, vy, s1, min(ox, ex), max(ox, ex), min(oy, ey), max(oy, ey))
            for c in _cells_near(ox, oy, ex, ey, self.reach, self.neighbors):
                self._segs.setdefault(c, []).append(item)

    def add_ssi_disk(self, center, k: float, owner: int | None = None) -> None:
        if k <= 0:
            return
        self._cell_ssi.clear()
        self._edge_ssi.clear()
        cx, cy = center
        for c in _cells_near(cx, cy, cx, cy, self.reach, self.neighbors):
            self._ssi.setdefault(c, []).append((owner, float(cx), float(cy), float(k)))

    # trajectory-only sets, updated incrementally as trajectories arrive
    def cell_unsafe(self, c: Cell) -> list[tuple[float, float]]:
        segs = self._segs.get(c)
        entry = self._cell.get(c)
        if entry is None:
            entry = self._cell[c] = [0, []]
        if segs is None or entry[0] == len(segs):
            return entry[1]
        px, py = float(c[0]), float(c[1])
        sep = self.sep
        new = []
        for ox, oy, s0, vx, vy, s1, x0, x1, y0, y1 in segs[entry[0]:]:
            if x1 <= px - sep or x0 >= px + sep or y1 <= py - sep or y0 >= py + sep:
                continue
            w = _point_window(px, py, ox, oy, s0, vx, vy, s1, sep)
            if w is not None:
                new.append((w[0] - EPS, w[1] + EPS))
        self.work += len(segs) - entry[0]
        entry[0] = len(segs)
        if new:
            entry[1] = normalize(entry[1] + new)
        return entry[1]

    def edge_forbidden(self, a: Cell, b: Cell) -> list[tuple[float, float]]:
        key = (a, b)
        segs = self._segs.get(a)
        entry = self._edge.get(key)
        if entry is None:
            entry = self._edge[key] = [0, []]
        if segs is None or entry[0] == len(segs):
            return entry[1]
        ax, ay = float(a[0]), float(a[1])
        dx, dy = b[0] - ax, b[1] - ay
        length = math.hypot(dx, dy)
        ux, uy = dx / length, dy / length
        sep = self.sep
        sep2 = sep * sep
        bx0, bx1 = min(ax, b[0]) - sep, max(ax, b[0]) + sep
        by0, by1 = min(ay, b[1]) - sep, max(ay, b[1]) + sep
        new = []
        for ox, oy, s0, vx, vy, s1, x0, x1, y0, y1 in segs[entry[0]:]:
            if x1 <= bx0 or x0 >= bx1 or y1 <= by0 or y0 >= by1:
                continue
            if vx == 0.0 and vy == 0.0:
                # resting obstacle: reject by its distance to the move
                wx, wy = ox - ax, oy - ay
                along = wx * ux + wy * uy
                if along < 0.0:
                    d2 = wx * wx + wy * wy
                elif along > length:
                    d2 = (wx - length * ux) ** 2 + (wy - length * uy) ** 2
                else:
                    d2 = (wx * uy - wy * ux) ** 2
                if d2 >= sep2:
                    continue
            w = _departure_window(ax, ay, ux, uy, length, ox, oy, s0, vx, vy, s1, sep)
            if w is not None:
                new.append((w[0] - EPS, w[1] + EPS))
        self.work += len(segs) - entry[0]
        entry[0] = len(segs)
        if new:
            entry[1] = normalize(entry[1] + new)
        return entry[1]

    # safe-start disks, kept per owner so each robot can skip its own
    def cell_ssi(self, c: Cell) -> list:
        out = self._cell_ssi.get(c)
        if out is None:
            out = []
            for owner, cx, cy, k in self._ssi.get(c, ()):
                w = _point_window(float(c[0]), float(c[1]), cx, cy, 0.0, 0.0, 0.0, k, self.sep)
                if w is not None:
                    out.append((owner, (w[0] - EPS, w[1] + EPS)))
            self._cell_ssi[c] = out
        return out

    def edge_ssi(self, a: Cell, b: Cell) -> list:
        key = (a, b)
        out = self._edge_ssi.get(key)
        if out is None:
            out = []
            dx, dy = b[0] - a[0], b[1] - a[1]
            length = math.hypot(dx, dy)
            for owner, cx, cy, k in self._ssi.get(a, ()):
                w = _departure_window(float(a[0]), float(a[1]), dx / length, dy / length, length,
                                      cx, cy, 0.0, 0.0, 0.0, k, self.sep)
                if w is not None:
                    out.append((owner, (w[0] - EPS, w[1] + EPS)))
            self._edge_ssi[key] = out
        return out

    def view(self, robot: int | None = None) -> "FieldView":
        """Obstacles as seen by ``robot``: its own safe-start disk is skipped."""
        return FieldView(self, robot)


class FieldView:
    """Per-search memo over an :class:`ObstacleField`."""

    def __init__(self, field: ObstacleField, robot: int | None):
        self.field = field
        self.robot = robot
        self._safe: dict[Cell, list] = {}
        self._forb: dict[tuple[Cell, Cell], list] = {}

    def safe(self, c: Cell) -> list[tuple[float, float]]:
        s = self._safe.get(c)
        if s is None:
            unsafe = self.field.cell_unsafe(c)
            disks = self.field.cell_ssi(c)
            if disks:
                extra = [w for owner, w in disks if owner is None or owner != self.robot]
                if extra:
                    unsafe = normalize(unsafe + extra)
            s = self._safe[c] = complement(unsafe)
        return s

    def forbidden(self, a: Cell, b: Cell) -> list[tuple[float, float]]:
        key = (a, b)
        f = self._forb.get(key)
        if f is None:
            f = self.field.edge_forbidden(a, b)
            disks = self.field.edge_ssi(a, b)
            if disks:
                extra = [w for owner, w in disks if owner is None or owner != self.robot]
                if extra:
                    f = normalize(f + extra)
            self._forb[key] = f
        return f


class _TableView(FieldView):
    """Cell intervals from an explicit table, moves from the field."""

    def __init__(self, field, table: SafeIntervalTable):
        super().__init__(field, None)
        self.table = table

    def safe(self, c):
        s = self._safe.get(c)
        if s is None:
            s = self._safe[c] = list(self.table[c])
        return s


def build_safe_intervals(grid: GridMap, obstacles: Iterable[DynamicObstacle],
                         mm: MoveModel) -> SafeIntervalTable:
    field = ObstacleField(grid, mm)
    for ob in obstacles:
        field.add(ob)
    view = field.view()
    cells = set(field._segs) | set(field._ssi)
    out = {}
    for c in cells:
        safe = view.safe(c)
        if safe != [(0.0, INF)]:
            out[c] = IntervalSet(safe)
    return SafeIntervalTable(out)


def _snap_up(t: float) -> float:
    # departures after a wait land on the 1e-6 grid used by solution files
    return math.ceil(t * 1e6 - 1e-3) / 1e6


def _earliest(forb, t, g):
    t = first_free(forb, t)
    if t > g:
        while t < INF:
            s = _snap_up(t)
            s = first_free(forb, s if s > g else g)
            if s == t:
                break
            t = s
    return t


def search(start: Cell, goal: Cell, view: FieldView, mm: MoveModel,
           h: Callable[[Cell], float] | None = None, robot_id: int = 0):
    """Earliest-arrival trajectory from ``start`` to ``goal`` or ``None``.

    Returns ``(trajectory, expansions)``.
    """
    table = view.field.neighbors
    if h is None:
        h = lambda c: grid_heuristic(c, goal, mm)  # noqa: E731
    safe_start = view.safe(start)
    if not safe_start or safe_start[0][0] > 0.0:
        return None, 0
    root = (start, 0)
    g_best = {root: 0.0}
    parent: dict = {root: None}
    heap = [(h(start), -0.0, start, 0)]
    expansions = 0
    found = None
    while heap:
        f, neg_g, c, idx = heapq.heappop(heap)
        g = -neg_g
        if g > g_best[(c, idx)]:
            continue
        expansions += 1
        lo, hi = view.safe(c)[idx]
        if c == goal and hi == INF:
            found = (c, idx)
            break
        for n, length in table[c]:
            nsafe = view.safe(n)
            if not nsafe:
                continue
            forb = None
            t_min = g + length
            t_max = hi + length
            for j, (nlo, nhi) in enumerate(nsafe):
                if nhi <= t_min:
                    continue
                if nlo >= t_max:
                    break
                if forb is None:
                    forb = view.forbidden(c, n)
                t0 = g if nlo - length <= g else nlo - length
                t0 = _earliest(forb, t0, g)
                if t0 >= hi:
                    break
                arr = t0 + length
                if arr >= nhi:
                    continue
                key = (n, j)
                if arr < g_best.get(key, INF):
                    g_best[key] = arr
                    parent[key] = ((c, idx), t0 if t0 > g else None, length)
                    heapq.heappush(heap, (arr + h(n), -arr, n, j))
    view.field.work += expansions
    if found is None:
        return None, expansions
    chain = []
    key = found
    while parent[key] is not None:
        prev, dep, length = parent[key]
        chain.append((prev, dep, length, key))
        key = prev
    chain.reverse()
    # Times are re-accumulated along the chain: a state reached again by a
    # path that is cheaper by float rounding alone would otherwise leave a
    # one-ulp wait behind. Only waits carry a recorded departure.
    wps = [(float(start[0]), float(start[1]), 0.0)]
    t = 0.0
    for (pc, _), dep, length, (nc, _) in chain:
        if dep is not None and dep > t:
            t = dep
            wps.append((float(pc[0]), float(pc[1]), t))
        t = t + length
        wps.append((float(nc[0]), float(nc[1]), t))
    return Trajectory(robot_id, tuple(wps)), expansions


def sipp_search(start: Cell, goal: Cell, table: SafeIntervalTable,
                obstacles: Iterable[DynamicObstacle], grid: GridMap, mm: MoveModel,
                heuristic: Callable[[Cell], float] | None = None,
                robot_id: int = 0) -> Trajectory | None:
    """Optimal-arrival trajectory avoiding ``obstacles``; ``None`` means no path.

    ``table`` supplies the cell intervals (normally from
    :func:`build_safe_intervals` over the same obstacles); moves are checked
    against ``obstacles`` directly.
    """
    field = ObstacleField(grid, mm)
    for ob in obstacles:
        field.add(ob)
    traj, _ = search(start, goal, _TableView(field, table), mm, heuristic, robot_id)
    return traj
