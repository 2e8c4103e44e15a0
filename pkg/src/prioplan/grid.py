"""Static grid maps, the move model and agent-free shortest paths."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .geometry import segment_clears_static

SQRT2 = math.sqrt(2.0)
DEFAULT_RADIUS = 0.5 - 1e-6

Cell = tuple[int, int]


class MapFormatError(ValueError):
    """Malformed map or scenario text; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    blocked: frozenset = field(default_factory=frozenset)
    name: str = field(default="map", compare=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("map needs at least one cell")
        for i, j in self.blocked:
            if not self.in_bounds((i, j)):
                raise ValueError(f"blocked cell {(i, j)} outside the map")

    @classmethod
    def empty(cls, width: int, height: int) -> "GridMap":
        return cls(width, height, frozenset(), name=f"empty-{width}x{height}")

    @classmethod
    def from_array(cls, blocked: np.ndarray, name: str = "map") -> "GridMap":
        """``blocked`` is indexed ``[row j, column i]``."""
        h, w = blocked.shape
        js, is_ = np.nonzero(blocked)
        return cls(w, h, frozenset(zip(is_.tolist(), js.tolist())), name=name)

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_free(self, c: Cell) -> bool:
        return self.in_bounds(c) and c not in self.blocked

    def free_cells(self) -> list[Cell]:
        return [(i, j) for j in range(self.height) for i in range(self.width)
                if (i, j) not in self.blocked]

    def to_array(self) -> np.ndarray:
        arr = np.zeros((self.height, self.width), dtype=bool)
        for i, j in self.blocked:
            arr[j, i] = True
        return arr

    def to_text(self) -> str:
        rows = ["".join("@" if (i, j) in self.blocked else "." for i in range(self.width))
                for j in range(self.height)]
        return f"height {self.height}\nwidth {self.width}\n" + "".join(r + "\n" for r in rows)


def parse_map(text: str, name: str = "map") -> GridMap:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise MapFormatError("missing header", len(lines) + 1)
    dims = {}
    for k, key in enumerate(("height", "width")):
        parts = lines[k].split(" ")
        if len(parts) != 2 or parts[0] != key or not parts[1].isdigit():
            raise MapFormatError(f"expected '{key} <int>'", k + 1)
        dims[key] = int(parts[1])
    h, w = dims["height"], dims["width"]
    if h < 1 or w < 1:
        raise MapFormatError("dimensions must be positive", 1)
    rows = lines[2:]
    if len(rows) != h:
        raise MapFormatError(f"expected {h} rows, found {len(rows)}", 3 + min(len(rows), h))
    blocked = set()
    for j, row in enumerate(rows):
        if len(row) != w:
            raise MapFormatError(f"expected {w} characters, found {len(row)}", j + 3)
        for i, ch in enumerate(row):
            if ch == "@":
                blocked.add((i, j))
            elif ch != ".":
                raise MapFormatError(f"illegal character {ch!r}", j + 3)
    return GridMap(w, h, frozenset(blocked), name=name)


def load_map(path) -> GridMap:
    path = Path(path)
    return parse_map(path.read_text(), name=path.stem)


@dataclass(frozen=True)
class MoveModel:
    connectedness: int = 8
    radius: float = DEFAULT_RADIUS

    def __post_init__(self):
        if self.connectedness not in (4, 8):
            raise ValueError("connectedness must be 4 or 8")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def sep(self) -> float:
        return 2.0 * self.radius

    @property
    def max_step(self) -> float:
        return SQRT2 if self.connectedness == 8 else 1.0

    def offsets(self):
        card = [(1, 0), (0, 1), (-1, 0), (0, -1)]
        if self.connectedness == 4:
            return card
        return card + [(1, 1), (-1, 1), (-1, -1), (1, -1)]


def disk_fits(c: Cell, grid: GridMap, r: float) -> bool:
    """A robot of radius ``r`` can rest at the center of free cell ``c``."""
    return grid.is_free(c) and segment_clears_static((c, c), grid, r)


@lru_cache(maxsize=32)
def neighbor_table(grid: GridMap, mm: MoveModel) -> dict[Cell, tuple[tuple[Cell, float], ...]]:
    """Successors of every cell a robot can rest in."""
    table = {}
    for c in grid.free_cells():
        if not disk_fits(c, grid, mm.radius):
            continue
        succ = []
        for di, dj in mm.offsets():
            n = (c[0] + di, c[1] + dj)
            if not grid.is_free(n):
                continue
            if segment_clears_static((c, n), grid, mm.radius):
                succ.append((n, SQRT2 if di and dj else 1.0))
        table[c] = tuple(succ)
    return table


def neighbors(c: Cell, grid: GridMap, mm: MoveModel) -> list[tuple[Cell, float]]:
    if not grid.is_free(c):
        raise ValueError(f"cell {c} is blocked or outside the map")
    return list(neighbor_table(grid, mm).get(c, ()))


def heuristic(c: Cell, goal: Cell, mm: MoveModel) -> float:
    dx, dy = abs(c[0] - goal[0]), abs(c[1] - goal[1])
    if mm.connectedness == 4:
        return float(dx + dy)
    return (SQRT2 - 1.0) * min(dx, dy) + max(dx, dy)


def distance_map(source: Cell, grid: GridMap, mm: MoveModel) -> dict[Cell, float]:
    """Agent-free path cost from ``source`` to every reachable cell.

    Moves are symmetric, so this is also the cost *to* ``source``.
    """
    table = neighbor_table(grid, mm)
    dist = {source: 0.0}
    heap = [(0.0, source)]
    while heap:
        d, c = heapq.heappop(heap)
        if d > dist[c]:
            continue
        for n, w in table.get(c, ()):
            nd = d + w
            if nd < dist.get(n, math.inf):
                dist[n] = nd
                heapq.heappush(heap, (nd, n))
    return dist


@lru_cache(maxsize=32)
def _graph(grid: GridMap, mm: MoveModel):
    table = neighbor_table(grid, mm)
    cells = sorted(table)
    index = {c: k for k, c in enumerate(cells)}
    rows, cols, w = [], [], []
    for c, succ in table.items():
        for n, cost in succ:
            rows.append(index[c])
            cols.append(index[n])
            w.append(cost)
    mat = csr_matrix((w, (rows, cols)), shape=(len(cells), len(cells)))
    return cells, index, mat


def distance_maps(sources, grid: GridMap, mm: MoveModel) -> list[dict[Cell, float]]:
    """:func:`distance_map` for many sources in one sparse Dijkstra sweep."""
    cells, index, mat = _graph(grid, mm)
    sources = list(sources)
    if not sources:
        return []
    dist = dijkstra(mat, directed=True, indices=[index[s] for s in sources])
    out = []
    for row in dist:
        finite = np.isfinite(row)
        out.append(dict(zip([cells[k] for k in np.flatnonzero(finite)], row[finite].tolist())))
    return out


def agent_free_shortest_path_len(start: Cell, goal: Cell, grid: GridMap, mm: MoveModel) -> float:
    """Optimal cost ignoring other robots; ``inf`` when unreachable."""
    if start == goal:
        return 0.0
    table = neighbor_table(grid, mm)
    dist = {start: 0.0}
    heap = [(heuristic(start, goal, mm), 0.0, start)]
    while heap:
        _, d, c = heapq.heappop(heap)
        if c == goal:
            return d
        if d > dist[c]:
            continue
        for n, w in table.get(c, ()):
            nd = d + w
            if nd < dist.get(n, math.inf):
                dist[n] = nd
                heapq.heappush(heap, (nd + heuristic(n, goal, mm), nd, n))
    return math.inf
