"""Geometric primitives: tubes, lattice balls, incidence predicates and overlap.

A tube is the closed ``radius``-neighbourhood of the axis segment
``anchor + t * direction`` for ``0 <= t <= length``.  A lattice ball of scale
``delta`` is centred at ``delta * k`` for an integer vector ``k`` and has
radius ``delta / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class InvalidInput(ValueError):
    """Raised when arguments violate an operation's preconditions."""


@dataclass(frozen=True)
class Tube:
    anchor: tuple[float, ...]
    direction: tuple[float, ...]
    length: float = 1.0
    radius: float = 0.5

    def __post_init__(self):
        if len(self.anchor) != len(self.direction):
            raise InvalidInput("anchor and direction have different dimensions")
        if len(self.anchor) not in (2, 3):
            raise InvalidInput(f"unsupported dimension {len(self.anchor)}")
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise InvalidInput(f"direction must be a unit vector, got norm {norm!r}")
        if not (self.length > 0 and self.radius > 0):
            raise InvalidInput("tube length and radius must be positive")

    @classmethod
    def through(cls, start: Sequence[float], end: Sequence[float], radius: float) -> "Tube":
        """Tube whose axis runs from ``start`` to ``end``."""
        p0 = np.asarray(start, dtype=float)
        p1 = np.asarray(end, dtype=float)
        v = p1 - p0
        length = float(np.linalg.norm(v))
        if length == 0.0:
            raise InvalidInput("degenerate axis segment")
        d = v / length
        # renormalise once more so the 1e-12 unit check never trips on rounding
        d = d / math.sqrt(float(np.dot(d, d)))
        return cls(tuple(float(c) for c in p0), tuple(float(c) for c in d), length, float(radius))

    @property
    def dim(self) -> int:
        return len(self.anchor)

    @property
    def end(self) -> tuple[float, ...]:
        return tuple(a + self.length * d for a, d in zip(self.anchor, self.direction))

    def volume(self) -> float:
        r = self.radius
        if self.dim == 2:
            return 2 * r * self.length + math.pi * r * r
        return math.pi * r * r * self.length + 4.0 / 3.0 * math.pi * r ** 3


@dataclass(frozen=True)
class LatticeBall:
    index: tuple[int, ...]
    delta: float

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(k * self.delta for k in self.index)

    @property
    def radius(self) -> float:
        return self.delta / 2

    @property
    def dim(self) -> int:
        return len(self.index)


def lattice_range(delta: float) -> tuple[int, int]:
    """Inclusive index range of lattice balls with centres in ``[-delta, 1 + delta]``."""
    return -1, int(math.floor(1.0 / delta + 1e-9)) + 1


def segment_dist2(points: np.ndarray, anchor, direction, length: float) -> np.ndarray:
    """Squared distance from each row of ``points`` to the axis segment.

    The arithmetic is spelled out coordinate by coordinate so every caller
    evaluating the same (point, segment) pair gets bit-identical results.
    """
    n = points.shape[1]
    v = [points[:, j] - anchor[j] for j in range(n)]
    t = v[0] * direction[0] + v[1] * direction[1]
    if n == 3:
        t = t + v[2] * direction[2]
    t = np.clip(t, 0.0, length)
    w0 = v[0] - t * direction[0]
    w1 = v[1] - t * direction[1]
    out = w0 * w0 + w1 * w1
    if n == 3:
        w2 = v[2] - t * direction[2]
        out = out + w2 * w2
    return out


def point_segment_distance(point: Sequence[float], tube: Tube) -> float:
    p = np.asarray(point, dtype=float).reshape(1, -1)
    return math.sqrt(float(segment_dist2(p, tube.anchor, tube.direction, tube.length)[0]))


def tube_ball_intersects(t: Tube, b: LatticeBall) -> bool:
    if t.dim != b.dim:
        raise InvalidInput(f"dimension mismatch: tube is {t.dim}D, ball is {b.dim}D")
    reach = t.radius + b.radius
    c = np.asarray(b.center, dtype=float).reshape(1, -1)
    return bool(segment_dist2(c, t.anchor, t.direction, t.length)[0] <= reach * reach)


def slab_candidates(anchor, direction, length: float, reach: float,
                    spacing: float, offset: float = 0.0) -> np.ndarray:
    """Integer grid cells that may lie within ``reach`` of an axis segment.

    Grid cell ``k`` has centre ``(k + offset) * spacing``.  The segment is
    walked one slab at a time along its dominant axis; in each slab only a
    fixed box around the axis is emitted.  The result is a superset of the
    cells within ``reach`` and contains no duplicates.
    """
    a = np.asarray(anchor, dtype=float)
    d = np.asarray(direction, dtype=float)
    n = a.size
    m = int(np.argmax(np.abs(d)))
    dm = d[m]
    e_m = a[m] + length * dm
    lo = min(a[m], e_m) - reach
    hi = max(a[m], e_m) + reach
    km = np.arange(math.ceil(lo / spacing - offset), math.floor(hi / spacing - offset) + 1)
    if km.size == 0:
        return np.empty((0, n), dtype=np.int64)
    xm = (km + offset) * spacing
    t = np.clip((xm - a[m]) / dm, 0.0, length)
    half = reach / abs(dm) + reach
    width = int(math.ceil(2 * half / spacing)) + 2
    others = [j for j in range(n) if j != m]
    steps = np.arange(width)
    if n == 2:
        (j,) = others
        base = np.floor((a[j] + t * d[j] - half) / spacing - offset).astype(np.int64)
        cols = [None, None]
        cols[m] = np.repeat(km, width)
        cols[j] = (base[:, None] + steps[None, :]).ravel()
        return np.stack(cols, axis=1).astype(np.int64)
    j1, j2 = others
    b1 = np.floor((a[j1] + t * d[j1] - half) / spacing - offset).astype(np.int64)
    b2 = np.floor((a[j2] + t * d[j2] - half) / spacing - offset).astype(np.int64)
    s1, s2 = np.meshgrid(steps, steps, indexing="ij")
    s1 = s1.ravel()
    s2 = s2.ravel()
    per = s1.size
    cols = [None, None, None]
    cols[m] = np.repeat(km, per)
    cols[j1] = (b1[:, None] + s1[None, :]).ravel()
    cols[j2] = (b2[:, None] + s2[None, :]).ravel()
    return np.stack(cols, axis=1).astype(np.int64)


def _raster_cells(t: Tube, spacing: float) -> np.ndarray:
    cells = slab_candidates(t.anchor, t.direction, t.length, t.radius, spacing, 0.5)
    pts = (cells + 0.5) * spacing
    inside = segment_dist2(pts, t.anchor, t.direction, t.length) <= t.radius * t.radius
    return cells[inside]


def overlap_fraction(t1: Tube, t2: Tube, subdivisions: int = 8) -> float:
    """Estimate ``|T1 ∩ T2| / |T1|`` by counting shared cells of a fine grid.

    The grid has spacing ``delta / subdivisions`` where ``delta = 2 * t1.radius``
    and is anchored at the origin, so the shared-cell count is symmetric.
    """
    if t1.dim != t2.dim:
        raise InvalidInput("dimension mismatch")
    spacing = 2 * t1.radius / subdivisions
    cells = _raster_cells(t1, spacing)
    if len(cells) == 0:
        return 0.0
    pts = (cells + 0.5) * spacing
    shared = segment_dist2(pts, t2.anchor, t2.direction, t2.length) <= t2.radius * t2.radius
    return float(np.count_nonzero(shared)) / len(cells)


def essentially_distinct(t1: Tube, t2: Tube) -> bool:
    # an overlap of exactly one half counts as distinct
    return overlap_fraction(t1, t2) <= 0.5


def segment_distance(t1: Tube, t2: Tube) -> float:
    """Euclidean distance between the two axis segments."""
    p1 = np.asarray(t1.anchor, dtype=float)
    p2 = np.asarray(t2.anchor, dtype=float)
    d1 = np.asarray(t1.direction, dtype=float) * t1.length
    d2 = np.asarray(t2.direction, dtype=float) * t2.length
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    c = float(d1 @ r)
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > 1e-18 * a * e else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0)
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0)
    diff = (p1 + s * d1) - (p2 + t * d2)
    return float(np.linalg.norm(diff))


def angle_between(t1: Tube, t2: Tube) -> float:
    """Angle in ``[0, pi/2]`` between the axis lines (orientation ignored)."""
    c = abs(sum(x * y for x, y in zip(t1.direction, t2.direction)))
    return math.acos(min(c, 1.0))


def _overlap_upper_bound(t1: Tube, t2: Tube) -> float:
    s = math.sin(angle_between(t1, t2))
    if s < 1e-12:
        return math.inf
    r = max(t1.radius, t2.radius)
    if t1.dim == 2:
        cross = (2 * t1.radius) * (2 * t2.radius) / s
    else:
        cross = 16.0 * r ** 3 / (3.0 * s)
    return cross / t1.volume()


def all_pairs_essentially_distinct(tubes: Iterable[Tube]) -> tuple[bool, list[tuple[int, int]]]:
    """Exhaustive pairwise check; returns (ok, offending index pairs).

    Disjoint pairs and pairs whose crossing angle already bounds the overlap
    below one half skip the rasterised estimate.
    """
    tubes = list(tubes)
    bad = []
    for i in range(len(tubes)):
        for j in range(i + 1, len(tubes)):
            t1, t2 = tubes[i], tubes[j]
            if segment_distance(t1, t2) > t1.radius + t2.radius:
                continue
            if _overlap_upper_bound(t1, t2) <= 0.4 and _overlap_upper_bound(t2, t1) <= 0.4:
                continue
            if not (essentially_distinct(t1, t2) and essentially_distinct(t2, t1)):
                bad.append((i, j))
    return not bad, bad


def endpoint_chart(t: Tube) -> tuple[int, np.ndarray, np.ndarray]:
    """Crossing points of the axis line with the planes ``x_m = 0`` and ``x_m = 1``.

    ``m`` is the dominant coordinate of the direction (ties go to the last
    axis).  Returns ``(m, a, b)`` where ``a`` and ``b`` hold the remaining
    coordinates of the two crossing points.
    """
    d = np.asarray(t.direction, dtype=float)
    p = np.asarray(t.anchor, dtype=float)
    mags = np.abs(d)
    m = int(len(d) - 1 - np.argmax(mags[::-1] >= mags.max() - 1e-12))
    others = [j for j in range(len(d)) if j != m]
    s0 = (0.0 - p[m]) / d[m]
    s1 = (1.0 - p[m]) / d[m]
    a = p[others] + s0 * d[others]
    b = p[others] + s1 * d[others]
    return m, a, b
