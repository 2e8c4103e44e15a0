"""Sets of disjoint half-open time intervals ``[a, b)``.

The hot paths of the planner work on plain sorted lists of ``(a, b)`` tuples
through :func:`normalize`, :func:`complement` and :func:`first_free`;
:class:`IntervalSet` wraps the same representation for the public API.
"""
from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Iterator

INF = float("inf")


def normalize(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sort, drop empty intervals and merge overlapping or touching ones."""
    out: list[tuple[float, float]] = []
    for a, b in sorted(intervals):
        if not b > a:
            continue
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def complement(intervals: list[tuple[float, float]], lo: float = 0.0,
               hi: float = INF) -> list[tuple[float, float]]:
    """Complement of normalized ``intervals`` within ``[lo, hi)``."""
    out = []
    cur = lo
    for a, b in intervals:
        if b <= cur:
            continue
        if a >= hi:
            break
        if a > cur:
            out.append((cur, a))
        cur = b
        if cur >= hi:
            break
    if cur < hi:
        out.append((cur, hi))
    return out


def first_free(intervals: list[tuple[float, float]], t: float) -> float:
    """Smallest ``s >= t`` not covered by the normalized ``intervals``."""
    k = bisect_right(intervals, (t, INF)) - 1
    if k >= 0 and intervals[k][1] > t:
        return intervals[k][1]
    return t


class IntervalSet:
    """Immutable union of disjoint, sorted, non-touching ``[a, b)`` intervals.

    ``b`` may be ``inf``. Construction normalizes its input, so
    ``IntervalSet([(0, 2), (1, 3)]) == IntervalSet([(0, 3)])``.
    """

    __slots__ = ("_iv",)

    def __init__(self, intervals: Iterable[tuple[float, float]] = ()):
        self._iv = tuple(normalize(intervals))

    @classmethod
    def _trusted(cls, intervals) -> "IntervalSet":
        obj = cls.__new__(cls)
        obj._iv = tuple(intervals)
        return obj

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls._trusted([(0.0, INF)])

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self._iv

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self._iv)

    def __len__(self) -> int:
        return len(self._iv)

    def __bool__(self) -> bool:
        return bool(self._iv)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self._iv == other._iv

    def __hash__(self) -> int:
        return hash(self._iv)

    def __repr__(self) -> str:
        body = ", ".join(f"[{a:g}, {b:g})" for a, b in self._iv)
        return f"IntervalSet({body})"

    def __contains__(self, t: float) -> bool:
        k = bisect_right(self._iv, (t, INF)) - 1
        return k >= 0 and self._iv[k][0] <= t < self._iv[k][1]

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self._iv + tuple(other))

    __or__ = union

    def complement(self, lo: float = 0.0, hi: float = INF) -> "IntervalSet":
        return IntervalSet._trusted(complement(list(self._iv), lo, hi))

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self._iv, tuple(other)
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    __and__ = intersection

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement(lo=-INF))

    __sub__ = difference

    def measure(self) -> float:
        return sum(b - a for a, b in self._iv)
