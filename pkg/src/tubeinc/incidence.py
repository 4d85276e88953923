"""Exact richness maps: which lattice delta-balls meet how many tubes.

Two independent routes produce a :class:`RichMap`: the oracle tests every
lattice ball against every tube, the fast path only visits cells in a slab
box around each axis.  Both apply the same per-pair predicate, so their maps
must agree exactly.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import TubeFamily
from .geometry import InvalidInput, lattice_range, segment_dist2, slab_candidates

ORACLE_MIN_DELTA = {2: 2.0 ** -12, 3: 2.0 ** -7}


@dataclass
class RichMap:
    """Sparse richness map; ``index`` rows are sorted lexicographically."""

    delta: float
    dim: int
    index: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.counts)

    def to_dict(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in k): int(c) for k, c in zip(self.index, self.counts)}

    def total_incidences(self) -> int:
        return int(self.counts.sum())

    def max_count(self) -> int:
        return int(self.counts.max()) if len(self.counts) else 0

    def __eq__(self, other):
        if not isinstance(other, RichMap):
            return NotImplemented
        return (self.dim == other.dim and self.delta == other.delta
                and np.array_equal(self.index, other.index)
                and np.array_equal(self.counts, other.counts))


def _lattice_shape(delta: float, dim: int) -> tuple[int, int]:
    kmin, kmax = lattice_range(delta)
    return kmin, kmax - kmin + 1


def _linear(k: np.ndarray, kmin: int, side: int) -> np.ndarray:
    lin = np.zeros(len(k), dtype=np.int64)
    for j in range(k.shape[1]):
        lin = lin * side + (k[:, j] - kmin)
    return lin


def _unlinear(lin: np.ndarray, kmin: int, side: int, dim: int) -> np.ndarray:
    out = np.empty((len(lin), dim), dtype=np.int64)
    rest = lin.copy()
    for j in range(dim - 1, -1, -1):
        out[:, j] = rest % side + kmin
        rest //= side
    return out


def _from_dense(dense: np.ndarray, delta: float, dim: int, kmin: int, side: int) -> RichMap:
    lin = np.flatnonzero(dense)
    return RichMap(delta, dim, _unlinear(lin, kmin, side, dim), dense[lin].astype(np.int64))


def _reach2(family: TubeFamily) -> float:
    reach = family.delta / 2 + family.delta / 2
    return reach * reach


def richness_map_oracle(family: TubeFamily) -> RichMap:
    """Every tube against every lattice ball with centre in ``[-delta, 1 + delta]^n``."""
    delta, dim = family.delta, family.dim
    if delta < ORACLE_MIN_DELTA[dim]:
        raise InvalidInput(f"oracle refuses delta={delta} in {dim}D (memory guard {ORACLE_MIN_DELTA[dim]})")
    kmin, side = _lattice_shape(delta, dim)
    axes = np.arange(kmin, kmin + side, dtype=np.int64)
    grids = np.meshgrid(*([axes] * dim), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=1)
    centres = k * delta
    dense = np.zeros(side ** dim, dtype=np.int64)
    r2 = _reach2(family)
    for t in family.tubes:
        dense += segment_dist2(centres, t.anchor, t.direction, t.length) <= r2
    return _from_dense(dense, delta, dim, kmin, side)


def _tube_hits(t, delta: float, r2: float, kmin: int, kmax: int) -> np.ndarray:
    cand = slab_candidates(t.anchor, t.direction, t.length, 2 * t.radius, delta)
    keep = np.all((cand >= kmin) & (cand <= kmax), axis=1)
    cand = cand[keep]
    hit = segment_dist2(cand * delta, t.anchor, t.direction, t.length) <= r2
    return cand[hit]


def incidence_pairs(family: TubeFamily) -> tuple[np.ndarray, np.ndarray]:
    """All incident (tube id, lattice index) pairs, found by walking each axis."""
    delta = family.delta
    kmin, kmax = lattice_range(delta)
    r2 = _reach2(family)
    ids, ks = [], []
    for i, t in enumerate(family.tubes):
        h = _tube_hits(t, delta, r2, kmin, kmax)
        ids.append(np.full(len(h), i, dtype=np.int64))
        ks.append(h)
    if not ks:
        return np.empty(0, dtype=np.int64), np.empty((0, family.dim), dtype=np.int64)
    return np.concatenate(ids), np.concatenate(ks)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TUBEINC_THREADS", "1")))
    except ValueError:
        return 1


def richness_map_fast(family: TubeFamily) -> RichMap:
    delta, dim = family.delta, family.dim
    kmin, side = _lattice_shape(delta, dim)
    kmax = kmin + side - 1
    r2 = _reach2(family)
    size = side ** dim

    def chunk_counts(tubes):
        dense = np.zeros(size, dtype=np.int64)
        for t in tubes:
            h = _tube_hits(t, delta, r2, kmin, kmax)
            if len(h):
                dense += np.bincount(_linear(h, kmin, side), minlength=size)
        return dense

    tubes = family.tubes
    nthreads = _threads()
    if nthreads == 1 or len(tubes) < 2 * nthreads:
        dense = chunk_counts(tubes)
    else:
        # integer sums commute, so any split gives the same map
        parts = [tubes[i::nthreads] for i in range(nthreads)]
        with ThreadPoolExecutor(nthreads) as pool:
            dense = sum(pool.map(chunk_counts, parts))
    return _from_dense(dense, delta, dim, kmin, side)


def richness_at(family: TubeFamily, indices) -> np.ndarray:
    """Brute-force richness of the given lattice balls (rows of integer indices)."""
    k = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    centres = k * family.delta
    r2 = _reach2(family)
    out = np.zeros(len(k), dtype=np.int64)
    for t in family.tubes:
        out += segment_dist2(centres, t.anchor, t.direction, t.length) <= r2
    return out


def rich_count(rmap: RichMap, r: int) -> int:
    """Number of lattice balls meeting at least ``r`` tubes (``r >= 1``)."""
    if r < 1:
        raise InvalidInput("r must be >= 1")
    return int(np.count_nonzero(rmap.counts >= r))


def dyadic_profile(rmap: RichMap) -> list[tuple[int, int]]:
    top = rmap.max_count()
    if top == 0:
        return []
    jmax = math.ceil(math.log2(top))
    return [(2 ** j, rich_count(rmap, 2 ** j)) for j in range(jmax + 1)]


def incidence_count(rmap: RichMap, r_low: int = 1, r_high: Optional[int] = None) -> int:
    """Sum of counts over balls with ``r_low <= count < r_high``."""
    c = rmap.counts
    mask = c >= r_low
    if r_high is not None:
        mask &= c < r_high
    return int(c[mask].sum())


def write_richmap_csv(rmap: RichMap, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"k{j + 1}" for j in range(rmap.dim)] + ["count"])
        for k, c in zip(rmap.index, rmap.counts):
            w.writerow([int(v) for v in k] + [int(c)])


def richmap_summary(rmap: RichMap) -> dict:
    return {
        "delta": rmap.delta,
        "dim": rmap.dim,
        "totalIncidences": rmap.total_incidences(),
        "support": len(rmap),
        "maxCount": rmap.max_count(),
        "dyadicProfile": [[r, n] for r, n in dyadic_profile(rmap)],
    }
