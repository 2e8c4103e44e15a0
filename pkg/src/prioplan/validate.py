"""Independent checker for multi-robot solutions.

Nothing here touches the planner's interval machinery. Static clearance is
measured with shapely; robot-robot separation is checked twice, once with
closed-form closest approach over every pair of time-overlapping segments
and once by dense sampling. A collision seen by the sampler but missed by the
closed form is a checker bug and raises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely
from numba import njit
from shapely import STRtree, box

from .geometry import Trajectory
from .prioritized import Instance

TIMING_TOL = 1e-7
DIST_TOL = 1e-9
SSI_MARGIN = 1e-6


@dataclass(frozen=True)
class Violation:
    kind: str
    robots: tuple[int, ...]
    time: float | None = None
    detail: str = ""

    def __str__(self) -> str:
        at = f" at t={self.time:.6f}" if self.time is not None else ""
        return f"{self.kind} violation, robots {list(self.robots)}{at}: {self.detail}"


def metrics(trajs: Sequence[Trajectory]) -> tuple[float, float]:
    """``(makespan, flowtime)`` from the final arrival times."""
    if not trajs:
        raise ValueError("no trajectories")
    arrivals = [t.arrival for t in trajs]
    return max(arrivals), sum(arrivals)


def _check_form(inst: Instance, trajs) -> Violation | None:
    by_id = {t.robot_id: t for t in trajs}
    if len(by_id) != len(trajs) or set(by_id) != set(inst.ids):
        return Violation("count", tuple(sorted(set(by_id) ^ set(inst.ids))),
                         detail="need exactly one trajectory per robot")
    for robot in inst.robots:
        wps = by_id[robot.id].waypoints
        if not wps:
            return Violation("endpoint", (robot.id,), detail="no waypoints")
        if tuple(wps[0][:2]) != tuple(map(float, robot.start)) or wps[0][2] != 0.0:
            return Violation("endpoint", (robot.id,), 0.0, "must start at its start cell at t=0")
        if tuple(wps[-1][:2]) != tuple(map(float, robot.goal)):
            return Violation("endpoint", (robot.id,), wps[-1][2], "must end at its goal cell")
        for (x0, y0, t0), (x1, y1, t1) in zip(wps, wps[1:]):
            if not all(map(math.isfinite, (x0, y0, t0, x1, y1, t1))):
                return Violation("timing", (robot.id,), None, "non-finite waypoint")
            if t1 < t0:
                return Violation("timing", (robot.id,), t1, "waypoint times decrease")
            d = math.hypot(x1 - x0, y1 - y0)
            if d > 0 and abs((t1 - t0) - d) > TIMING_TOL * max(1.0, d):
                return Violation("timing", (robot.id,), t0,
                                 f"move of length {d:.6f} takes {t1 - t0:.6f}")
    return None


def _check_static(inst: Instance, trajs) -> Violation | None:
    blocked = sorted(inst.grid.blocked)
    if not blocked:
        return None
    squares = [box(i - 0.5, j - 0.5, i + 0.5, j + 0.5) for i, j in blocked]
    tree = STRtree(squares)
    r = inst.radius
    for traj in trajs:
        pts = [(x, y) for x, y, _ in traj.waypoints]
        geoms, times = [], []
        for k, (p, q) in enumerate(zip(pts, pts[1:])):
            if p != q:
                geoms.append(shapely.LineString([p, q]))
                times.append(traj.waypoints[k][2])
        geoms.append(shapely.Point(pts[-1]))
        times.append(traj.arrival)
        geoms.append(shapely.Point(pts[0]))
        times.append(0.0)
        gi, si = tree.query(geoms, predicate="dwithin", distance=r)
        if len(gi):
            d = shapely.distance(np.asarray(geoms, dtype=object)[gi],
                                 np.asarray(squares, dtype=object)[si])
            bad = np.flatnonzero(d < r - DIST_TOL)
            if len(bad):
                k = bad[0]
                return Violation("static", (traj.robot_id,), times[gi[k]],
                                 f"passes {d[k]:.6f} from blocked cell {blocked[si[k]]}")
    return None


def _segment_table(trajs, horizon):
    rows = []
    for traj in trajs:
        wps = traj.waypoints
        for (x0, y0, t0), (x1, y1, t1) in zip(wps, wps[1:]):
            if t1 > t0:
                rows.append((traj.robot_id, t0, t1, x0, y0, (x1 - x0) / (t1 - t0),
                             (y1 - y0) / (t1 - t0)))
        x, y, t = wps[-1]
        rows.append((traj.robot_id, t, max(horizon, t), x, y, 0.0, 0.0))
    arr = np.array(rows, dtype=float)
    return arr[np.argsort(arr[:, 1], kind="stable")]


def _closest_pairs(trajs, horizon, sep):
    """Minimum separation over all time-overlapping segment pairs.

    Returns ``(min_distance, robot_a, robot_b, time)``.
    """
    seg = _segment_table(trajs, horizon)
    t0 = seg[:, 1]
    ends = np.searchsorted(t0, seg[:, 2], side="left")
    counts = np.maximum(ends - np.arange(len(seg)) - 1, 0)
    i = np.repeat(np.arange(len(seg)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    j = i + 1 + offs
    keep = seg[i, 0] != seg[j, 0]
    i, j = i[keep], j[keep]
    a, b = seg[i], seg[j]
    lo = np.maximum(a[:, 1], b[:, 1])
    hi = np.minimum(a[:, 2], b[:, 2])
    # relative position p + v t
    vx = a[:, 5] - b[:, 5]
    vy = a[:, 6] - b[:, 6]
    px = a[:, 3] - a[:, 5] * a[:, 1] - (b[:, 3] - b[:, 5] * b[:, 1])
    py = a[:, 4] - a[:, 6] * a[:, 1] - (b[:, 4] - b[:, 6] * b[:, 1])
    vv = vx * vx + vy * vy
    with np.errstate(invalid="ignore", divide="ignore"):
        tstar = np.where(vv > 0, -(px * vx + py * vy) / np.where(vv > 0, vv, 1.0), lo)
    tstar = np.clip(tstar, lo, hi)
    dx = px + vx * tstar
    dy = py + vy * tstar
    d = np.sqrt(dx * dx + dy * dy)
    if len(d) == 0:
        return math.inf, None, None, None
    k = int(np.argmin(d))
    return float(d[k]), int(a[k, 0]), int(b[k, 0]), float(tstar[k])


def sample_positions(trajs, times):
    """Array ``(len(times), n, 2)`` of robot positions."""
    out = np.empty((len(times), len(trajs), 2))
    for k, traj in enumerate(trajs):
        w = np.asarray(traj.waypoints, dtype=float)
        out[:, k, 0] = np.interp(times, w[:, 2], w[:, 0])
        out[:, k, 1] = np.interp(times, w[:, 2], w[:, 1])
    return out


@njit(cache=True)
def _min_sampled_gap(pos):
    best, best_k = np.inf, -1
    for k in range(pos.shape[0]):
        for a in range(pos.shape[1]):
            for b in range(a + 1, pos.shape[1]):
                dx = pos[k, a, 0] - pos[k, b, 0]
                dy = pos[k, a, 1] - pos[k, b, 1]
                d2 = dx * dx + dy * dy
                if d2 < best:
                    best, best_k = d2, k
    return math.sqrt(best), best_k


def _sampled_min(trajs, horizon, dt):
    times = np.arange(0.0, horizon + 0.5 * dt, dt)
    if len(trajs) < 2:
        return math.inf, None
    d, k = _min_sampled_gap(sample_positions(trajs, times))
    return d, float(times[k])


def _check_ssi(inst: Instance, trajs, k: float) -> Violation | None:
    end = k - SSI_MARGIN
    if end <= 0:
        return None
    starts = np.array([r.start for r in inst.robots], dtype=float)
    ids = np.array(inst.ids)
    sep = 2 * inst.radius
    for traj in trajs:
        seg = _segment_table([traj], end)
        lo = seg[:, 1]
        hi = np.minimum(seg[:, 2], end)
        keep = hi >= lo
        seg, lo, hi = seg[keep], lo[keep], hi[keep]
        # position x0 + v (t - t0) against every start point
        qx = starts[None, :, 0] - seg[:, None, 3] + seg[:, None, 5] * seg[:, None, 1]
        qy = starts[None, :, 1] - seg[:, None, 4] + seg[:, None, 6] * seg[:, None, 1]
        vx, vy = seg[:, None, 5], seg[:, None, 6]
        vv = vx * vx + vy * vy
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(vv > 0, (qx * vx + qy * vy) / np.where(vv > 0, vv, 1.0), lo[:, None])
        t = np.clip(t, lo[:, None], hi[:, None])
        d = np.hypot(qx - vx * t, qy - vy * t)
        d[:, ids == traj.robot_id] = np.inf
        if d.size and d.min() < sep - DIST_TOL:
            s, o = np.unravel_index(np.argmin(d), d.shape)
            return Violation("ssi", (traj.robot_id, int(ids[o])), float(t[s, o]),
                             f"enters the start of robot {ids[o]} before its safe-start end")
    return None


def validate_solution(inst: Instance, trajs: Sequence[Trajectory], ssi_k: float | None = None,
                      sample_dt: float = 0.01) -> Violation | None:
    """``None`` when the solution is valid, otherwise the first violation found."""
    trajs = list(trajs)
    v = _check_form(inst, trajs)
    if v is None:
        v = _check_static(inst, trajs)
    if v is not None:
        return v
    order = {rid: k for k, rid in enumerate(inst.ids)}
    trajs.sort(key=lambda t: order[t.robot_id])
    sep = 2 * inst.radius
    horizon = max(t.arrival for t in trajs) + 1.0
    dmin, ra, rb, t = _closest_pairs(trajs, horizon, sep)
    if sample_dt:
        smin, st = _sampled_min(trajs, horizon, sample_dt)
        if smin < sep - DIST_TOL and dmin >= sep - DIST_TOL:
            raise RuntimeError(f"sampled distance {smin!r} at t={st} below {sep} "
                               f"but closed-form minimum is {dmin!r}")
    if dmin < sep - DIST_TOL:
        return Violation("pairwise", (ra, rb), t, f"centers {dmin:.6f} apart, need {sep:.6f}")
    if ssi_k is not None and ssi_k > 0:
        return _check_ssi(inst, trajs, ssi_k)
    return None
