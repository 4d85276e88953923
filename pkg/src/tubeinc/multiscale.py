"""Multiscale decomposition tools: cube covers, (M, E) pigeonholing,
rectangle partitions, anisotropic rescaling and tube thickening.

Cells of the rectangle partition and of the thickening grid are labelled in
the endpoint chart: a tube whose axis is closest to coordinate ``m`` is
identified by where its axis line crosses ``x_m = 0`` and ``x_m = 1``.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .families import Spacing, TubeFamily
from .geometry import InvalidInput, Tube, endpoint_chart, lattice_range, segment_dist2
from .incidence import RichMap, incidence_pairs


def dyadic_class(x) -> np.ndarray:
    """Largest power of two not exceeding ``x`` (elementwise, ``x >= 1``)."""
    x = np.asarray(x)
    return (2 ** np.floor(np.log2(x) + 1e-12)).astype(np.int64)


@dataclass(frozen=True)
class CubeCover:
    """Tiling of the lattice by cubes of ``D x D`` lattice cells (side ``D * delta``)."""

    D: int
    delta: float
    dim: int

    @property
    def per_axis(self) -> int:
        return max(1, math.ceil(round(1.0 / self.delta) / self.D))

    def cube_of(self, k: np.ndarray) -> np.ndarray:
        """Cube index of each lattice row; boundary layers fold into the edge cubes."""
        return np.clip(np.floor_divide(np.asarray(k), self.D), 0, self.per_axis - 1)

    def __len__(self):
        return self.per_axis ** self.dim


@dataclass(frozen=True)
class SegmentBucket:
    cube: tuple[int, ...]
    axis: int
    entry: tuple[int, ...]
    exit: tuple[int, ...]
    multiplicity: int


@dataclass
class PigeonholeResult:
    M: int
    E: int
    buckets: list[SegmentBucket]
    report: dict


def _segment_keys(family: TubeFamily, ids: np.ndarray, cubes: np.ndarray, D: int) -> np.ndarray:
    """Per (tube, cube) row: the axis crossings of the cube's two faces, snapped to the delta grid."""
    delta = family.delta
    charts = [endpoint_chart(t) for t in family.tubes]
    anchors, dirs, _ = family.arrays()
    m = np.array([c[0] for c in charts], dtype=np.int64)[ids]
    a, d = anchors[ids], dirs[ids]
    rows = np.arange(len(ids))
    lo = cubes[rows, m] * D * delta
    s0 = (lo - a[rows, m]) / d[rows, m]
    s1 = (lo + D * delta - a[rows, m]) / d[rows, m]
    p0 = np.rint((a + s0[:, None] * d) / delta).astype(np.int64)
    p1 = np.rint((a + s1[:, None] * d) / delta).astype(np.int64)
    n = family.dim
    keep = [np.delete(np.arange(n), mm) for mm in range(n)]
    e0 = np.stack([p0[i, keep[mm]] for i, mm in enumerate(m)]) if len(m) else np.empty((0, n - 1), np.int64)
    e1 = np.stack([p1[i, keep[mm]] for i, mm in enumerate(m)]) if len(m) else np.empty((0, n - 1), np.int64)
    return np.concatenate([cubes, m[:, None], e0, e1], axis=1)


def pigeonhole_MQ(family: TubeFamily, rmap: RichMap, D: int, r: Optional[int] = None) -> PigeonholeResult:
    """Dyadic (M, E) pigeonholing of incidences over a cover by D*delta cubes.

    Each tube is cut into delta x D*delta segments, one per cube it crosses.
    A segment's multiplicity M is the number of tubes sharing it; a ball's
    local richness E is the number of distinct class-M segments through it.
    The ball set is the r-rich sublevel ``r <= count < 2r`` of ``rmap`` (the
    whole support when ``r`` is None).  The pair of dyadic classes keeping
    the most incidences is returned.
    """
    if len(rmap) == 0:
        raise InvalidInput("richness map is empty")
    if D < 1:
        raise InvalidInput("D must be >= 1")
    cover = CubeCover(int(D), family.delta, family.dim)
    ids, ks = incidence_pairs(family)
    kmin, kmax = lattice_range(family.delta)
    side = kmax - kmin + 1
    ball = np.zeros(len(ks), dtype=np.int64)
    for j in range(family.dim):
        ball = ball * side + (ks[:, j] - kmin)
    rmap_lin = np.zeros(len(rmap), dtype=np.int64)
    for j in range(family.dim):
        rmap_lin = rmap_lin * side + (rmap.index[:, j] - kmin)
    if r is None:
        r_eff, chosen = 1, rmap_lin
    else:
        r_eff = int(r)
        chosen = rmap_lin[(rmap.counts >= r) & (rmap.counts < 2 * r)]
    inP = np.isin(ball, chosen)
    ids, ks, ball = ids[inP], ks[inP], ball[inP]
    total = int(len(ids))
    L = math.log2(1.0 / family.delta) ** 2
    if total == 0:
        return PigeonholeResult(0, 0, [], {"D": int(D), "r": r_eff, "total": 0, "retained": 0,
                                           "retainedFraction": 0.0, "logFactor": L,
                                           "retainedOk": False, "productOk": False})
    cubes = cover.cube_of(ks)
    pair, pair_inv = np.unique(np.column_stack([ids, cubes]), axis=0, return_inverse=True)
    pair_inv = pair_inv.ravel()
    keys = _segment_keys(family, pair[:, 0], pair[:, 1:], cover.D)
    ukeys, key_of_pair, mult = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    key_of_pair = key_of_pair.ravel()
    key = key_of_pair[pair_inv]
    mclass = dyadic_class(mult)[key]

    # E(ball, M) = number of distinct class-M segments through the ball
    trip = np.unique(np.column_stack([ball, mclass, key]), axis=0)
    bm, e_count = np.unique(trip[:, :2], axis=0, return_counts=True)
    inc_bm, inc_inv = np.unique(np.column_stack([ball, mclass]), axis=0, return_inverse=True)
    inc_per_bm = np.bincount(inc_inv.ravel(), minlength=len(inc_bm))
    # bm and inc_bm enumerate the same sorted (ball, M) pairs
    eclass = dyadic_class(e_count)
    scores = Counter()
    for (_, mc), ec, w in zip(bm, eclass, inc_per_bm):
        scores[(int(mc), int(ec))] += int(w)
    (M, E), retained = max(sorted(scores.items()), key=lambda kv: kv[1])
    buckets = [SegmentBucket(tuple(int(v) for v in k[:family.dim]), int(k[family.dim]),
                             tuple(int(v) for v in k[family.dim + 1:family.dim + family.dim]),
                             tuple(int(v) for v in k[2 * family.dim:]), int(c))
               for k, c in zip(ukeys, mult)]
    report = {
        "D": int(D),
        "r": r_eff,
        "M": M,
        "E": E,
        "total": total,
        "retained": int(retained),
        "retainedFraction": retained / total,
        "logFactor": L,
        "classes": {f"{m},{e}": v for (m, e), v in sorted(scores.items())},
        "retainedOk": bool(retained >= total / (4 * L)),
        "productOk": bool(M * E >= r_eff / (4 * L)),
    }
    return PigeonholeResult(M, E, buckets, report)


@dataclass(frozen=True)
class RectangleCell:
    """Cell of the D-partition: axis ``m``, entry and exit cells of size 1/D."""

    D: int
    axis: int
    entry: tuple[int, ...]
    exit: tuple[int, ...]

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower corners of the entry and exit cells."""
        return np.asarray(self.entry, float) / self.D, np.asarray(self.exit, float) / self.D


def cell_of(t: Tube, D: int) -> RectangleCell:
    m, a, b = endpoint_chart(t)
    ia = np.clip(np.floor(D * a + 1e-9), 0, D - 1).astype(int)
    ib = np.clip(np.floor(D * b + 1e-9), 0, D - 1).astype(int)
    return RectangleCell(int(D), m, tuple(int(v) for v in ia), tuple(int(v) for v in ib))


def partition_rectangles(family: TubeFamily, D: int) -> dict[RectangleCell, TubeFamily]:
    """Assign every tube to the single 1/D-rectangle (1/D-tube in 3D) cell containing it."""
    if D < 1:
        raise InvalidInput("D must be >= 1")
    if D > family.W + 1e-9:
        raise InvalidInput(f"D = {D} exceeds W = {family.W}; rescaled cells would break the spacing")
    groups: dict[RectangleCell, list[Tube]] = defaultdict(list)
    for t in family.tubes:
        groups[cell_of(t, D)].append(t)
    return {c: TubeFamily(ts, family.delta, family.W, family.dim, family.spacing,
                          {"parent": family.meta.get("generator"), "cell": _cell_json(c)})
            for c, ts in sorted(groups.items(), key=lambda kv: (kv[0].axis, kv[0].entry, kv[0].exit))}


def _cell_json(c: RectangleCell) -> dict:
    return {"D": c.D, "axis": c.axis, "entry": list(c.entry), "exit": list(c.exit)}


def cell_map(x: np.ndarray, cell: RectangleCell) -> np.ndarray:
    """Shear the cell onto the unit cube and stretch its short directions by D."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    e, f = cell.offsets()
    m = cell.axis
    others = [j for j in range(x.shape[1]) if j != m]
    out = x.copy()
    s = x[:, m:m + 1]
    out[:, others] = cell.D * (x[:, others] - (1 - s) * e - s * f)
    return out


def cell_unmap(y: np.ndarray, cell: RectangleCell) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    e, f = cell.offsets()
    m = cell.axis
    others = [j for j in range(y.shape[1]) if j != m]
    out = y.copy()
    s = y[:, m:m + 1]
    out[:, others] = y[:, others] / cell.D + (1 - s) * e + s * f
    return out


def _map_tubes(tubes, fn, radius: float) -> list[Tube]:
    out = []
    for t in tubes:
        p = fn(np.array([t.anchor, t.end]))
        out.append(Tube.through(p[0], p[1], radius))
    return out


def rescale_cell(sub: TubeFamily, cell: RectangleCell) -> TubeFamily:
    """Magnify a cell by D across its long axis: widths become D*delta and W becomes W/D."""
    D = cell.D
    tubes = _map_tubes(sub.tubes, lambda p: cell_map(p, cell), D * sub.delta / 2)
    spacing = sub.spacing if sub.spacing.kind == "WellSpaced" else Spacing("Unstructured")
    meta = {"cell": _cell_json(cell), "delta_tilde": D * sub.delta, "W_tilde": sub.W / D}
    return TubeFamily(tubes, D * sub.delta, sub.W / D, sub.dim, spacing, meta)


def unrescale_cell(fam: TubeFamily, cell: RectangleCell, spacing: Optional[Spacing] = None) -> TubeFamily:
    """Inverse of :func:`rescale_cell`."""
    D = cell.D
    delta = fam.delta / D
    tubes = _map_tubes(fam.tubes, lambda p: cell_unmap(p, cell), delta / 2)
    return TubeFamily(tubes, delta, fam.W * D, fam.dim, spacing or fam.spacing, {"cell": _cell_json(cell)})


@dataclass
class ThickenResult:
    family: TubeFamily
    N: int
    report: dict
    assignment: list = field(default_factory=list)


def canonical_tube(key, rho: float, dim: int) -> Tube:
    """Axis from the centre of the entry cell on ``x_m = 0`` to the exit cell centre on ``x_m = 1``."""
    m, ia, ib = key
    p0 = np.empty(dim)
    p1 = np.empty(dim)
    others = [j for j in range(dim) if j != m]
    p0[others] = (np.asarray(ia) + 0.5) * rho
    p1[others] = (np.asarray(ib) + 0.5) * rho
    p0[m], p1[m] = 0.0, 1.0
    return Tube.through(p0, p1, rho / 2)


def thicken_key(t: Tube, rho: float) -> tuple:
    m, a, b = endpoint_chart(t)
    ia = tuple(int(v) for v in np.floor(a / rho + 1e-9))
    ib = tuple(int(v) for v in np.floor(b / rho + 1e-9))
    return (m, ia, ib)


def thicken(family: TubeFamily, rho: float, balls: Optional[np.ndarray] = None) -> ThickenResult:
    """Snap delta-tubes to canonical rho-tubes and keep the dyadic class N that
    retains the most incidences with ``balls`` (lattice indices; every lattice
    ball when omitted).
    """
    if rho < family.delta - 1e-12:
        raise InvalidInput(f"rho = {rho} is below delta = {family.delta}")
    keys = [thicken_key(t, rho) for t in family.tubes]
    load = Counter(keys)
    ids, ks = incidence_pairs(family)
    if balls is not None:
        b = np.atleast_2d(np.asarray(balls, dtype=np.int64))
        wanted = {tuple(int(v) for v in row) for row in b}
        mask = np.fromiter((tuple(int(v) for v in row) in wanted for row in ks), bool, len(ks))
        ids = ids[mask]
    per_tube = np.bincount(ids, minlength=len(family.tubes))
    nclass = [int(dyadic_class(load[k])) for k in keys] if keys else []
    scores = Counter()
    for c, w in zip(nclass, per_tube):
        scores[c] += int(w)
    if not scores:
        empty = TubeFamily([], rho, 1, family.dim, Spacing("Unstructured"))
        return ThickenResult(empty, 1, {"rho": rho, "N": 1, "retained": 0, "total": 0}, [])
    N, retained = max(sorted(scores.items()), key=lambda kv: kv[1])
    chosen = sorted({k for k, c in zip(keys, nclass) if c == N})
    thick = [canonical_tube(k, rho, family.dim) for k in chosen]
    W = min(family.W, 1.0 / rho)
    out = TubeFamily(thick, rho, max(W, 1.0), family.dim, Spacing("Unstructured"),
                     {"generator": "thicken", "rho": rho, "N": N})
    total = int(per_tube.sum())
    report = {
        "rho": rho,
        "N": N,
        "thickTubes": len(thick),
        "originalTubes": len(family.tubes),
        "retained": int(retained),
        "total": total,
        "retainedFraction": retained / total if total else 0.0,
        "loadHistogram": {str(k): v for k, v in sorted(Counter(load.values()).items())},
    }
    return ThickenResult(out, N, report, keys)


def containment_slack(t: Tube, thick: Tube, samples: int = 33) -> float:
    """Largest distance from the tube to the thick axis, relative to the thick radius.

    A value ``<= 2`` means ``t`` lies inside ``thick`` dilated by 2.
    """
    s = np.linspace(0.0, t.length, samples)
    pts = np.asarray(t.anchor) + s[:, None] * np.asarray(t.direction)
    d = np.sqrt(segment_dist2(pts, thick.anchor, thick.direction, thick.length)).max()
    return float((d + t.radius) / thick.radius)
