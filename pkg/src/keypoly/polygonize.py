"""Geometric grouping of keypoints into a closed polygon.

The chain starts at the extreme (leftmost, then topmost) keypoint and greedily
hops to the nearest unvisited keypoint until every point is used; the last
point closes back to the start. Keypoint scores play no part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import ConfigError, DuplicatePointError, EmptyInputError, InsufficientPointsError
from .heatmap import KeypointLike, as_keypoint

__all__ = [
    "Polygon",
    "GroupingTrace",
    "select_start",
    "group_keypoints",
    "segments_intersect",
]

Point = Tuple[float, float]


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    """``p`` is collinear with ``ab``; check it lies within the bounding box."""
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """True if closed segments ``p1p2`` and ``q1q2`` share at least one point."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )


def _adjacent_overlap(a: Point, shared: Point, b: Point) -> bool:
    """Edges ``a-shared`` and ``shared-b`` fold back onto each other."""
    if _orient(a, shared, b) != 0:
        return False
    dot = (a[0] - shared[0]) * (b[0] - shared[0]) + (a[1] - shared[1]) * (b[1] - shared[1])
    return dot > 0


@dataclass(frozen=True)
class Polygon:
    """Closed polygon in pixel coordinates, ``x = col`` and ``y = row``.

    The last vertex connects back to the first; the closing vertex is not
    repeated.
    """

    vertices: Tuple[Point, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise InsufficientPointsError(f"a polygon needs at least 3 vertices, got {len(verts)}")
        for i, v in enumerate(verts):
            if v == verts[i - 1]:
                raise ConfigError(f"consecutive vertices {i - 1 if i else len(verts) - 1} and {i} coincide at {v}")
        object.__setattr__(self, "vertices", verts)

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise in ``(x, y)``."""
        total = 0.0
        for (x0, y0), (x1, y1) in self.edges():
            total += x0 * y1 - x1 * y0
        return total / 2.0

    @property
    def is_degenerate(self) -> bool:
        return self.signed_area == 0.0

    @property
    def self_intersecting(self) -> bool:
        """Any two non-adjacent edges touch, or two adjacent edges fold back."""
        v = self.vertices
        n = len(v)
        for i in range(n):
            if _adjacent_overlap(v[i - 1], v[i], v[(i + 1) % n]):
                return True
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if segments_intersect(a, b, v[j], v[(j + 1) % n]):
                    return True
        return False

    def reversed(self) -> "Polygon":
        return Polygon(tuple(reversed(self.vertices)))

    def rotated(self, k: int) -> "Polygon":
        k %= len(self.vertices)
        return Polygon(self.vertices[k:] + self.vertices[:k])


@dataclass(frozen=True)
class GroupingTrace:
    """Diagnostic record of one greedy chaining run."""

    start_vertex: int
    visit_order: Tuple[int, ...]
    tie_events: int


def select_start(keypoints: Sequence[KeypointLike]) -> int:
    """Index of the leftmost keypoint; ties go to the topmost (smallest row)."""
    if len(keypoints) == 0:
        raise EmptyInputError("cannot select a start point from an empty keypoint set")
    kps = [as_keypoint(k) for k in keypoints]
    return min(range(len(kps)), key=lambda i: (kps[i].col, kps[i].row))


def group_keypoints(keypoints: Sequence[KeypointLike]) -> Tuple[Polygon, GroupingTrace]:
    """Chain keypoints into a polygon by nearest-neighbour hopping.

    Distances are Euclidean on the pixel grid and compared as exact integer
    squares. Equidistant candidates are resolved by smallest ``(row, col)``;
    each such step increments ``tie_events``.

    Raises:
        InsufficientPointsError: fewer than 3 keypoints.
        DuplicatePointError: two keypoints share a grid location.
    """
    kps = [as_keypoint(k) for k in keypoints]
    if len(kps) < 3:
        raise InsufficientPointsError(f"need at least 3 keypoints to form a polygon, got {len(kps)}")
    seen = {}
    for i, kp in enumerate(kps):
        if kp.location in seen:
            raise DuplicatePointError(f"keypoints {seen[kp.location]} and {i} share location {kp.location}")
        seen[kp.location] = i

    start = select_start(kps)
    order = [start]
    unvisited = set(range(len(kps))) - {start}
    ties = 0
    current = kps[start]
    while unvisited:
        ranked = sorted(
            unvisited,
            key=lambda i: ((kps[i].row - current.row) ** 2 + (kps[i].col - current.col) ** 2, kps[i].row, kps[i].col),
        )
        nearest = ranked[0]
        if len(ranked) > 1:
            d_best = (kps[nearest].row - current.row) ** 2 + (kps[nearest].col - current.col) ** 2
            d_next = (kps[ranked[1]].row - current.row) ** 2 + (kps[ranked[1]].col - current.col) ** 2
            if d_best == d_next:
                ties += 1
        order.append(nearest)
        unvisited.remove(nearest)
        current = kps[nearest]

    polygon = Polygon(tuple((kps[i].col, kps[i].row) for i in order))
    return polygon, GroupingTrace(start_vertex=start, visit_order=tuple(order), tie_events=ties)
