"""Deterministic and seeded generators for the tube configurations and ball sets.

Every randomised generator draws from a stream seeded by ``(seed, cell)`` so
output is bit-identical across runs and independent of generation order.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import InvalidInput, Tube, endpoint_chart

SPACING_KINDS = (
    "WellSpaced",
    "DirectionSpaced",
    "GridExample",
    "HeavyBallExample",
    "Bush",
    "FatRectangle",
    "Unstructured",
)


@dataclass(frozen=True)
class Spacing:
    kind: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SPACING_KINDS:
            raise InvalidInput(f"unknown spacing class {self.kind!r}")


@dataclass
class TubeFamily:
    tubes: list[Tube]
    delta: float
    W: float
    dim: int
    spacing: Spacing
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidInput(f"unsupported dimension {self.dim}")
        if not (1.0 - 1e-9 <= self.W <= 1.0 / self.delta + 1e-9):
            raise InvalidInput(f"need 1 <= W <= 1/delta, got W={self.W}, delta={self.delta}")
        half = self.delta / 2
        for t in self.tubes:
            if t.dim != self.dim:
                raise InvalidInput("tube dimension differs from family dimension")
            if abs(t.radius - half) > 1e-12 * max(half, 1.0):
                raise InvalidInput(f"tube radius {t.radius} != delta/2 = {half}")
            for p in (t.anchor, t.end):
                if min(p) < -0.5 - 1e-9 or max(p) > 1.5 + 1e-9:
                    raise InvalidInput(f"tube axis leaves [-0.5, 1.5]^n: {p}")

    def __len__(self):
        return len(self.tubes)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Anchors ``(N, n)``, unit directions ``(N, n)`` and lengths ``(N,)``."""
        n = self.dim
        if not self.tubes:
            return np.empty((0, n)), np.empty((0, n)), np.empty(0)
        anchors = np.array([t.anchor for t in self.tubes], dtype=float)
        dirs = np.array([t.direction for t in self.tubes], dtype=float)
        lengths = np.array([t.length for t in self.tubes], dtype=float)
        return anchors, dirs, lengths


@dataclass
class BallSet:
    """Centres of a finite set of delta-balls in the unit square."""

    centers: np.ndarray
    delta: float
    W: int = 1
    W_requested: float = 1.0
    s: Optional[float] = None

    def __len__(self):
        return len(self.centers)


def is_power_of_two(x: float) -> bool:
    if x <= 0:
        return False
    e = math.log2(x)
    return abs(e - round(e)) < 1e-12


def nearest_power_of_two(x: float) -> int:
    """Nearest power of two in linear distance; ties go down."""
    if x <= 1:
        return 1
    lo = 2 ** math.floor(math.log2(x))
    hi = 2 * lo
    return int(lo if x - lo <= hi - x else hi)


def _rng(seed: int, *cell: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(c) for c in cell]])


def _check_scales(delta: float, W: float):
    if not (0 < delta <= 1):
        raise InvalidInput(f"delta must lie in (0, 1], got {delta}")
    if W < 1:
        raise InvalidInput(f"W must be >= 1, got {W}")
    if W > 1.0 / delta + 1e-9:
        raise InvalidInput(f"W = {W} exceeds 1/delta = {1 / delta}")


def n_arcs(delta: float) -> int:
    """Number of direction arcs of length about delta on the half circle."""
    return max(1, int(round(math.pi / delta)))


def _arc_angles(delta: float) -> np.ndarray:
    n = n_arcs(delta)
    return (np.arange(n) + 0.5) * (math.pi / n)


def gen_well_spaced(delta: float, W: int, dim: int, seed: int = 0) -> TubeFamily:
    """One delta-tube in every 1/W-tube cell of the endpoint chart.

    A cell is a pair (entry cell, exit cell) of 1/W-squares on the faces
    ``x_n = 0`` and ``x_n = 1``; the tube joins a point of the entry cell to a
    point of the exit cell.  Points stay at least ``min(delta, 0.4/W)`` away
    from cell walls so neighbouring tubes remain essentially distinct.
    """
    _check_scales(delta, W)
    if not (is_power_of_two(W) and is_power_of_two(1.0 / delta)):
        raise InvalidInput("W and 1/delta must be powers of two")
    if dim not in (2, 3):
        raise InvalidInput(f"unsupported dimension {dim}")
    W = int(round(W))
    k = dim - 1
    c = 1.0 / W
    margin = min(delta, 0.4 * c)
    tubes = []
    for cell in itertools.product(range(W), repeat=2 * k):
        u = _rng(seed, *cell).uniform(size=2 * k)
        pos = np.array(cell, dtype=float) * c + margin + u * (c - 2 * margin)
        a, b = pos[:k], pos[k:]
        tubes.append(Tube.through((*a, 0.0), (*b, 1.0), delta / 2))
    return TubeFamily(tubes, delta, W, dim, Spacing("WellSpaced"),
                      {"generator": "well_spaced", "seed": seed, "margin": margin})


def gen_direction_spaced(delta: float, W: int, N1: int, seed: int = 0) -> TubeFamily:
    """For every delta-arc and every 1/W x 1 rectangle in that direction, N1 tubes.

    The W rectangles of a direction are stacked across the square's centre;
    each is split into N1 slots holding one unit tube apiece.
    """
    _check_scales(delta, W)
    if N1 < 0:
        raise InvalidInput("N1 must be nonnegative")
    if N1 * W * delta > 1 + 1e-9:
        raise InvalidInput(f"cannot pack N1={N1} delta-tubes into a 1/W rectangle (W={W}, delta={delta})")
    W = int(round(W))
    angles = _arc_angles(delta)
    meta = {"generator": "direction_spaced", "seed": seed, "n_arcs": len(angles),
            "arc": math.pi / len(angles)}
    if N1 == 0:
        return TubeFamily([], delta, W, 2, Spacing("DirectionSpaced", 0), meta)
    slot = 1.0 / (W * N1)
    margin = min(delta, slot / 4)
    tubes = []
    for i, th in enumerate(angles):
        d = np.array([math.cos(th), math.sin(th)])
        normal = np.array([-d[1], d[0]])
        for j in range(W):
            for s in range(N1):
                u = _rng(seed, i, j, s).uniform()
                off = -0.5 + j / W + s * slot + margin + u * (slot - 2 * margin)
                centre = np.array([0.5, 0.5]) + off * normal
                tubes.append(Tube.through(centre - d / 2, centre + d / 2, delta / 2))
    return TubeFamily(tubes, delta, W, 2, Spacing("DirectionSpaced", N1), meta)


def _clip_ray_to_square(start: np.ndarray, d: np.ndarray, length: float) -> float:
    """Largest ``L <= length`` keeping ``start + L d`` inside ``[0, 1]`` horizontally and below 1."""
    L = length
    if d[0] > 0:
        L = min(L, (1.0 - start[0]) / d[0])
    elif d[0] < 0:
        L = min(L, (0.0 - start[0]) / d[0])
    if d[1] > 0:
        L = min(L, (1.0 - start[1]) / d[1])
    return L


def gen_heavy_ball_example(delta: float, W: int, A: float, seed: int = 0) -> TubeFamily:
    """Sharp example for the direction-spaced bound: W heavy balls of side A*delta.

    The balls sit evenly on the segment from (0, 0) to (1, 0).  For every
    delta-arc not within ``4 A delta W`` of horizontal, one tube leaves each
    ball (axis start shifted by a seeded translation of size A*delta) and runs
    upward until it has unit length or reaches the square's boundary.
    """
    _check_scales(delta, W)
    if A < 1:
        raise InvalidInput(f"A must be >= 1, got {A}")
    if A * delta * W > 1 + 1e-12:
        raise InvalidInput(f"A*delta*W = {A * delta * W} exceeds 1")
    W = int(round(W))
    side = A * delta
    skip = 4 * A * delta * W
    angles = _arc_angles(delta)
    centres = [((i + 0.5) / W, 0.0) for i in range(W)]
    tubes = []
    kept = 0
    for k, th in enumerate(angles):
        if min(th, math.pi - th) < skip:
            continue
        kept += 1
        d = np.array([math.cos(th), math.sin(th)])
        for i, c in enumerate(centres):
            u = _rng(seed, k, i).uniform(-0.5, 0.5, size=2) * side
            start = np.array(c) + u
            start[0] = min(max(start[0], 0.0), 1.0)
            L = _clip_ray_to_square(start, d, 1.0)
            tubes.append(Tube.through(start, start + L * d, delta / 2))
    meta = {"generator": "heavy_ball", "seed": seed, "A": A, "skip_angle": skip,
            "directions_kept": kept, "anchor_centres": centres, "anchor_side": side}
    return TubeFamily(tubes, delta, W, 2, Spacing("HeavyBallExample", A), meta)


def grid_points(W: int) -> np.ndarray:
    return np.arange(W + 1) / W


def gen_grid_example(delta: float, W: int, dim: int) -> TubeFamily:
    """Tubes around the segments from ``(a, 0)`` to ``(b, 1)`` for ``a, b`` on the grid ``(Z/W)^(n-1)``."""
    if delta > 1.0 / W + 1e-12:
        raise InvalidInput(f"grid example needs delta <= 1/W, got delta={delta}, W={W}")
    _check_scales(delta, W)
    if dim not in (2, 3):
        raise InvalidInput(f"unsupported dimension {dim}")
    W = int(round(W))
    k = dim - 1
    g = grid_points(W)
    pts = list(itertools.product(g, repeat=k))
    tubes = [Tube.through((*a, 0.0), (*b, 1.0), delta / 2) for a in pts for b in pts]
    return TubeFamily(tubes, delta, W, dim, Spacing("GridExample"),
                      {"generator": "grid", "grid_size": W + 1})


def gen_bush(delta: float) -> TubeFamily:
    """One unit tube per delta-arc, all centred at (1/2, 1/2)."""
    _check_scales(delta, 1)
    c = np.array([0.5, 0.5])
    tubes = []
    for th in _arc_angles(delta):
        d = np.array([math.cos(th), math.sin(th)])
        tubes.append(Tube.through(c - d / 2, c + d / 2, delta / 2))
    return TubeFamily(tubes, delta, 1, 2, Spacing("Bush"), {"generator": "bush", "centre": [0.5, 0.5]})


def gen_fat_rectangle(delta: float, r: int, seed: int = 0) -> TubeFamily:
    """About r^2 essentially distinct delta-tubes inside one vertical fat rectangle.

    Entry and exit points take r values each, ``2 delta`` apart (so the
    rectangle has width ``2 r delta``), jittered by at most ``delta / 4``.
    """
    r = int(r)
    if r < 1:
        raise InvalidInput("r must be >= 1")
    if 2 * r * delta > 1:
        raise InvalidInput(f"rectangle of width 2*r*delta = {2 * r * delta} does not fit")
    x0 = 0.5 - r * delta
    tubes = []
    for i in range(r):
        for j in range(r):
            u = _rng(seed, i, j).uniform(-0.25, 0.25, size=2)
            a = x0 + (2 * i + 1 + u[0]) * delta
            b = x0 + (2 * j + 1 + u[1]) * delta
            tubes.append(Tube.through((a, 0.0), (b, 1.0), delta / 2))
    return TubeFamily(tubes, delta, 1, 2, Spacing("FatRectangle", r),
                      {"generator": "fat_rectangle", "seed": seed, "x0": x0, "width": 2 * r * delta})


def gen_spread_ballset(delta: float, s: float, seed: int = 0) -> BallSet:
    """One delta-ball centre per cell of the W x W grid, W = delta^(-s/2) rounded to a power of two."""
    if not (1 < s < 2):
        raise InvalidInput(f"s must lie strictly between 1 and 2, got {s}")
    W_req = delta ** (-s / 2)
    W = nearest_power_of_two(W_req)
    if W > 1 / delta + 1e-9:
        raise InvalidInput("W exceeds 1/delta")
    pts = np.empty((W * W, 2))
    for n, (i, j) in enumerate(itertools.product(range(W), repeat=2)):
        u = _rng(seed, i, j).uniform(size=2)
        pts[n] = (np.array([i, j]) + u) / W
    return BallSet(pts, delta, W, W_req, s)


@dataclass
class SpacingReport:
    ok: bool
    worst_cell_load: int
    occupied_cells: int
    kind: str
    limit: float


def chart_cell(t: Tube, W: float) -> tuple:
    """Index of the 1/W-tube cell containing ``t`` in the endpoint chart."""
    m, a, b = endpoint_chart(t)
    ia = tuple(int(v) for v in np.floor(W * a + 1e-9))
    ib = tuple(int(v) for v in np.floor(W * b + 1e-9))
    return (m, ia, ib)


def direction_cell(t: Tube, W: float, delta: float) -> tuple[int, int]:
    """(delta-arc index, 1/W offset cell) of a planar tube, offsets measured from the square's centre."""
    d = np.asarray(t.direction)
    th = math.atan2(d[1], d[0]) % math.pi
    n = n_arcs(delta)
    arc = min(int(th / (math.pi / n)), n - 1)
    normal = np.array([-math.sin(th), math.cos(th)])
    mid = np.asarray(t.anchor) + 0.5 * t.length * d
    off = float((mid - 0.5) @ normal)
    return arc, int(math.floor((off + 0.5) * W + 1e-9))


def verify_spacing(family: TubeFamily, kind: Optional[str] = None) -> SpacingReport:
    """Bin tubes by cell and compare the worst load with the spacing class.

    WellSpaced-style classes bin in the endpoint chart and allow one tube per
    cell; DirectionSpaced(N1) bins by (arc, offset cell) and allows 2 * N1.
    """
    kind = kind or family.spacing.kind
    if kind == "DirectionSpaced":
        n1 = family.spacing.param or 1
        cells = Counter(direction_cell(t, family.W, family.delta) for t in family.tubes)
        limit = 2 * n1
    else:
        cells = Counter(chart_cell(t, family.W) for t in family.tubes)
        limit = 1
    worst = max(cells.values(), default=0)
    return SpacingReport(worst <= limit, worst, len(cells), kind, limit)
