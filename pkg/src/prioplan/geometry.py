"""Continuous-time collision geometry for equal disks moving at unit speed.

Cell ``(i, j)`` has its center at ``(i, j)``; a blocked cell is the closed
unit square around its center. Two disks collide iff their centers are
strictly closer than ``sep = 2r``. Every unsafe set returned here is the
exact open set, clipped to the obstacle's activity window and then widened by
``EPS`` on both sides into a half-open ``[a, b)``.

The underscore-prefixed kernels take raw floats and are what the planner
calls in its inner loop; the public functions wrap them with the
:class:`MotionSegment` / :class:`IntervalSet` types.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from numba import njit

from .intervals import INF, IntervalSet

EPS = 1e-6
_TINY = 1e-18


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class MotionSegment:
    """Straight unit-speed move (or a wait when ``start == end``)."""

    start: Point
    end: Point
    depart: float
    arrive: float

    def __post_init__(self):
        if self.depart < 0 or self.arrive < self.depart:
            raise ValueError(f"bad timing {self.depart} -> {self.arrive}")
        length = math.dist(self.start, self.end)
        if length > 0 and abs(self.arrive - self.depart - length) > 1e-9 * max(1.0, length):
            raise ValueError("moves must take exactly their euclidean length")

    @property
    def is_wait(self) -> bool:
        return self.start == self.end

    def raw(self) -> tuple[float, float, float, float, float, float]:
        """``(x0, y0, t0, vx, vy, t1)`` with position ``x0 + vx (t - t0)``."""
        (x0, y0), (x1, y1) = self.start, self.end
        dur = self.arrive - self.depart
        if self.is_wait or dur == 0:
            return (x0, y0, self.depart, 0.0, 0.0, self.arrive)
        return (x0, y0, self.depart, (x1 - x0) / dur, (y1 - y0) / dur, self.arrive)

    def position(self, t: float) -> Point:
        if self.is_wait:
            return self.start
        f = (t - self.depart) / (self.arrive - self.depart)
        return Point(self.start.x + f * (self.end.x - self.start.x),
                     self.start.y + f * (self.end.y - self.start.y))


@dataclass(frozen=True)
class Trajectory:
    """Timed waypoints ``(x, y, t)`` of one robot, starting at ``t = 0``.

    The robot rests at its first point before the first waypoint time and at
    its last point forever after the final one.
    """

    robot_id: int
    waypoints: tuple[tuple[float, float, float], ...]

    @property
    def arrival(self) -> float:
        return self.waypoints[-1][2]

    @property
    def start(self) -> Point:
        return Point(*self.waypoints[0][:2])

    @property
    def goal(self) -> Point:
        return Point(*self.waypoints[-1][:2])

    def position(self, t: float) -> Point:
        wps = self.waypoints
        if t <= wps[0][2]:
            return Point(wps[0][0], wps[0][1])
        k = bisect_right([w[2] for w in wps], t)
        if k >= len(wps):
            return Point(wps[-1][0], wps[-1][1])
        x0, y0, t0 = wps[k - 1]
        x1, y1, t1 = wps[k]
        f = (t - t0) / (t1 - t0) if t1 > t0 else 1.0
        return Point(x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def segments(self) -> list[MotionSegment]:
        """Motion and wait segments including both implicit parking spans."""
        wps = self.waypoints
        out = []
        if wps[0][2] > 0:
            p = Point(wps[0][0], wps[0][1])
            out.append(MotionSegment(p, p, 0.0, wps[0][2]))
        for (x0, y0, t0), (x1, y1, t1) in zip(wps, wps[1:]):
            if t1 > t0:
                out.append(MotionSegment(Point(x0, y0), Point(x1, y1), t0, t1))
        g = Point(wps[-1][0], wps[-1][1])
        out.append(MotionSegment(g, g, wps[-1][2], INF))
        return out

    def raw_segments(self) -> list[tuple[float, float, float, float, float, float]]:
        return [s.raw() for s in self.segments()]


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _point_window(px, py, ox, oy, s0, vx, vy, s1, sep):
    """Open time window during which the obstacle is within ``sep`` of p."""
    wx, wy = px - ox, py - oy
    a = vx * vx + vy * vy
    c = wx * wx + wy * wy - sep * sep
    if a == 0.0:
        return (s0, s1) if c < 0.0 else None
    b = wx * vx + wy * vy
    disc = b * b - a * c
    if disc <= 0.0:
        return None
    half = math.sqrt(disc) / a
    if half < EPS:
        return None
    mid = b / a
    lo = max(mid - half, 0.0)
    hi = min(mid + half, s1 - s0)
    if lo >= hi:
        return None
    return (s0 + lo, s0 + hi)


@njit(cache=True)
def _departure_window(ax, ay, ux, uy, length, ox, oy, s0, vx, vy, s1, sep):
    """Departure times ``t0`` of a unit-speed move from ``a`` along ``u`` that
    bring it closer than ``sep`` to the obstacle segment.

    In the plane of (departure ``t0``, time into the move ``tau``) the
    colliding set is the inside of a conic and the feasible set is a
    parallelogram, so their intersection is convex and its projection onto
    ``t0`` is a single interval. Its extremes are found among parallelogram
    vertices, conic/edge crossings and the conic's own ``t0`` extremes.
    """
    sep2 = sep * sep
    if vx == 0.0 and vy == 0.0:
        wx, wy = ax - ox, ay - oy
        a = ux * ux + uy * uy
        b = wx * ux + wy * uy
        c = wx * wx + wy * wy - sep2
        disc = b * b - a * c
        if disc <= 0.0:
            return None
        half = math.sqrt(disc) / a
        if half < EPS:
            return None
        r1 = -b / a - half
        r2 = -b / a + half
        tlo = r1 if r1 > 0.0 else 0.0
        thi = r2 if r2 < length else length
        if tlo >= thi:
            return None
        return (s0 - thi, s1 - tlo)

    cx = ax - ox + vx * s0
    cy = ay - oy + vy * s0
    m1x, m1y = -vx, -vy
    m2x, m2y = ux - vx, uy - vy
    verts = ((s0, 0.0), (s1, 0.0), (s1 - length, length), (s0 - length, length))
    cand = []
    for k in range(4):
        pt, ptau = verts[k]
        qt, qtau = verts[(k + 1) & 3]
        d0x = cx + m1x * pt + m2x * ptau
        d0y = cy + m1y * pt + m2y * ptau
        c = d0x * d0x + d0y * d0y - sep2
        if c < 0.0:
            cand.append(pt)
        dt, dtau = qt - pt, qtau - ptau
        dx = m1x * dt + m2x * dtau
        dy = m1y * dt + m2y * dtau
        a = dx * dx + dy * dy
        if a <= _TINY:
            continue
        b = d0x * dx + d0y * dy
        disc = b * b - a * c
        if disc <= 0.0:
            continue
        half = math.sqrt(disc) / a
        if half * math.sqrt(a) < EPS:
            continue
        for lam in (-b / a - half, -b / a + half):
            if 0.0 <= lam <= 1.0:
                cand.append(pt + lam * dt)
    mm = m2x * m2x + m2y * m2y
    if mm > _TINY:
        kc = (cx * m2x + cy * m2y) / mm
        km = (m1x * m2x + m1y * m2y) / mm
        pcx, pcy = cx - kc * m2x, cy - kc * m2y
        pmx, pmy = m1x - km * m2x, m1y - km * m2y
        a = pmx * pmx + pmy * pmy
        if a > _TINY:
            b = pcx * pmx + pcy * pmy
            c = pcx * pcx + pcy * pcy - sep2
            disc = b * b - a * c
            if disc > 0.0:
                half = math.sqrt(disc) / a
                for t in (-b / a - half, -b / a + half):
                    tau = -(kc + km * t)
                    if 0.0 <= tau <= length and s0 <= t + tau <= s1:
                        cand.append(t)
    if not cand:
        return None
    lo, hi = min(cand), max(cand)
    if hi - lo < EPS:
        return None
    return (lo, hi)


def _inflate(window):
    return (window[0] - EPS, window[1] + EPS)


# ---------------------------------------------------------------- public API

def point_unsafe_intervals(p: Sequence[float], segment: MotionSegment, sep: float) -> IntervalSet:
    """Times at which a disk parked at ``p`` overlaps the one traversing ``segment``."""
    w = _point_window(float(p[0]), float(p[1]), *map(float, segment.raw()), float(sep))
    return IntervalSet([_inflate(w)]) if w else IntervalSet()


def trajectory_unsafe_intervals(p: Sequence[float], traj: Trajectory, sep: float) -> IntervalSet:
    out = []
    for seg in traj.raw_segments():
        w = _point_window(float(p[0]), float(p[1]), *map(float, seg), float(sep))
        if w:
            out.append(_inflate(w))
    return IntervalSet(out)


def move_forbidden_departures(move: tuple[Sequence[float], Sequence[float]],
                              obstacle: MotionSegment, sep: float) -> IntervalSet:
    """Departure times for which the unit-speed ``move`` hits ``obstacle``.

    The result is exact up to the ``EPS`` widening; it is never a coarser
    over-approximation.
    """
    (ax, ay), (bx, by) = map(float, move[0]), map(float, move[1])
    length = math.hypot(bx - ax, by - ay)
    if length == 0:
        raise ValueError("a move needs distinct endpoints")
    ux, uy = (bx - ax) / length, (by - ay) / length
    raw = obstacle.raw()
    if raw[5] == raw[2]:
        return IntervalSet()
    w = _departure_window(ax, ay, ux, uy, length, *map(float, raw), float(sep))
    return IntervalSet([_inflate(w)]) if w else IntervalSet()


def _point_square_dist(px, py, cx, cy):
    dx = max(abs(px - cx) - 0.5, 0.0)
    dy = max(abs(py - cy) - 0.5, 0.0)
    return math.hypot(dx, dy)


def _point_segment_dist(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    f = 0.0 if ll == 0 else max(0.0, min(1.0, ((px - x0) * dx + (py - y0) * dy) / ll))
    return math.hypot(px - x0 - f * dx, py - y0 - f * dy)


def _segment_hits_square(x0, y0, x1, y1, cx, cy):
    # Liang-Barsky clip against the closed square
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - (cx - 0.5)), (dx, (cx + 0.5) - x0),
                 (-dy, y0 - (cy - 0.5)), (dy, (cy + 0.5) - y0)):
        if p == 0:
            if q < 0:
                return False
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return False
    return True


def segment_square_distance(x0, y0, x1, y1, cx, cy) -> float:
    """Distance from segment ``(x0,y0)-(x1,y1)`` to the closed unit square at ``(cx, cy)``."""
    if _segment_hits_square(x0, y0, x1, y1, cx, cy):
        return 0.0
    d = min(_point_square_dist(x0, y0, cx, cy), _point_square_dist(x1, y1, cx, cy))
    for sx in (-0.5, 0.5):
        for sy in (-0.5, 0.5):
            d = min(d, _point_segment_dist(cx + sx, cy + sy, x0, y0, x1, y1))
    return d


def segment_clears_static(move, grid, r: float) -> bool:
    """True iff a disk of radius ``r`` swept along ``move`` touches no blocked cell.

    ``move`` is a :class:`MotionSegment` or a pair of points. Touching at
    exactly distance ``r`` is allowed.
    """
    if isinstance(move, MotionSegment):
        (x0, y0), (x1, y1) = move.start, move.end
    else:
        (x0, y0), (x1, y1) = move
    for x, y in ((x0, y0), (x1, y1)):
        if not (-0.5 <= x <= grid.width - 0.5 and -0.5 <= y <= grid.height - 0.5):
            raise ValueError(f"point ({x}, {y}) outside the map")
    reach = r + 0.5
    i_lo = max(0, math.ceil(min(x0, x1) - reach))
    i_hi = min(grid.width - 1, math.floor(max(x0, x1) + reach))
    j_lo = max(0, math.ceil(min(y0, y1) - reach))
    j_hi = min(grid.height - 1, math.floor(max(y0, y1) + reach))
    blocked = grid.blocked
    for i in range(i_lo, i_hi + 1):
        for j in range(j_lo, j_hi + 1):
            if (i, j) in blocked and segment_square_distance(x0, y0, x1, y1, i, j) < r:
                return False
    return True
