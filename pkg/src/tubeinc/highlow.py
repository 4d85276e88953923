"""Fourier high/low split of the incidence form and the heavy-ball classifier.

Everything here works in rescaled units: balls have radius 1/2, tubes have
radius 1/2, and the domain is ``[0, D]^n`` sampled on a ``G^n`` grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .families import TubeFamily, is_power_of_two
from .geometry import InvalidInput, Tube, segment_dist2, slab_candidates

UNIT_RADIUS = 0.5


@dataclass
class GridField:
    dim: int
    side: int
    D: float
    values: np.ndarray

    @property
    def spacing(self) -> float:
        return self.D / self.side

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def integral(self) -> float:
        return float(self.values.sum()) * self.cell_volume


@dataclass
class HeavyBallVerdict:
    kind: str
    high_term: float
    low_term: float
    S: float
    D: float
    E: float
    n_balls: int
    n_tubes: int
    thin_bound: float
    thin_ratio: float
    heavy_balls: list = field(default_factory=list)
    covered_fraction: float = 0.0
    mass_fraction: float = 0.0
    c_thick: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "highTerm": self.high_term,
            "lowTerm": self.low_term,
            "S": self.S,
            "D": self.D,
            "E": self.E,
            "balls": self.n_balls,
            "tubes": self.n_tubes,
            "thinBound": self.thin_bound,
            "thinRatio": self.thin_ratio,
            "heavyBalls": [{"center": [float(c) for c in ctr], "hits": int(h)} for ctr, h in self.heavy_balls],
        }
        if self.kind == "Thick":
            out.update(coveredFraction=self.covered_fraction, massFraction=self.mass_fraction,
                       cThick=self.c_thick)
        return out


def taper(d: np.ndarray, radius: float, width: float) -> np.ndarray:
    """Raised-cosine edge: 1 inside ``radius - width/2``, 0 outside ``radius + width/2``."""
    x = np.clip((d - radius + width / 2) / width, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * x))


def _check_grid(D: float, G: int):
    if G < 1 or not is_power_of_two(G):
        raise InvalidInput(f"grid side G must be a power of two, got {G}")
    if G < 4 * D - 1e-9:
        raise InvalidInput(f"grid side G={G} is below 4*D={4 * D}")


def default_grid(D: float) -> int:
    return 2 ** math.ceil(math.log2(4 * D))


def _accumulate(dense: np.ndarray, cells: np.ndarray, weights: np.ndarray, G: int):
    keep = np.all((cells >= 0) & (cells < G), axis=1) & (weights > 0)
    cells, weights = cells[keep], weights[keep]
    lin = np.zeros(len(cells), dtype=np.int64)
    for j in range(cells.shape[1]):
        lin = lin * G + cells[:, j]
    dense += np.bincount(lin, weights=weights, minlength=dense.size)


def ball_field(P: np.ndarray, D: float, G: int, dim: int) -> GridField:
    h = D / G
    dense = np.zeros(G ** dim)
    P = np.asarray(P, dtype=float).reshape(-1, dim)
    if len(P):
        reach = UNIT_RADIUS + h / 2
        width = int(math.ceil(2 * reach / h)) + 2
        steps = np.stack(np.meshgrid(*([np.arange(width)] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
        base = np.floor((P - reach) / h - 0.5).astype(np.int64)
        cells = (base[:, None, :] + steps[None, :, :]).reshape(-1, dim)
        centres = np.repeat(P, len(steps), axis=0)
        d = np.sqrt(np.sum(((cells + 0.5) * h - centres) ** 2, axis=1))
        _accumulate(dense, cells, taper(d, UNIT_RADIUS, h), G)
    return GridField(dim, G, D, dense.reshape((G,) * dim))


def tube_field(T: Sequence[Tube], D: float, G: int, dim: int) -> GridField:
    h = D / G
    dense = np.zeros(G ** dim)
    for t in T:
        reach = t.radius + h / 2
        cells = slab_candidates(t.anchor, t.direction, t.length, reach, h, 0.5)
        d = np.sqrt(segment_dist2((cells + 0.5) * h, t.anchor, t.direction, t.length))
        _accumulate(dense, cells, taper(d, t.radius, h), G)
    return GridField(dim, G, D, dense.reshape((G,) * dim))


def build_fields(P, T: Sequence[Tube], D: float, G: int) -> tuple[GridField, GridField]:
    """Mollified indicator sums of the unit balls ``P`` and unit tubes ``T``.

    Each indicator's edge is smoothed by a raised-cosine taper one grid cell
    wide.  Returns ``(f, g)``.
    """
    _check_grid(D, G)
    P = np.asarray(P, dtype=float)
    if P.size:
        dim = P.shape[-1]
    elif len(T):
        dim = T[0].dim
    else:
        dim = 2
    return ball_field(P, D, G, dim), tube_field(T, D, G, dim)


def cutoff_profile(kmag: np.ndarray, rho: float) -> np.ndarray:
    """Radial bump: 1 up to ``rho``, 0 beyond ``2 rho``, raised cosine between."""
    x = np.clip((kmag - rho) / rho, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * x))


def _freq_magnitude(G: int, h: float, dim: int) -> np.ndarray:
    k = np.fft.fftfreq(G, d=h)
    grids = np.meshgrid(*([k] * dim), indexing="ij", sparse=True)
    return np.sqrt(sum(g * g for g in grids))


def highlow_split(f: GridField, g: GridField, S: float, rho: Optional[float] = None) -> tuple[float, float]:
    """Split ``∫ f g`` into low- and high-frequency parts at cutoff ``rho = 1/S``.

    Frequencies are in cycles per unit length.  The two parts sum to the
    discrete ``∫ f g`` up to rounding.  ``rho`` overrides the cutoff.
    """
    if S < 2:
        raise InvalidInput(f"S must be >= 2, got {S}")
    if f.values.shape != g.values.shape or f.D != g.D:
        raise InvalidInput("fields live on different grids")
    rho = 1.0 / S if rho is None else rho
    n = f.dim
    N = f.values.size
    cross = np.fft.fftn(f.values) * np.conj(np.fft.fftn(g.values))
    eta = cutoff_profile(_freq_magnitude(f.side, f.spacing, n), rho)
    scale = f.cell_volume / N
    low = float(np.real(np.sum(eta * cross))) * scale
    high = float(np.real(np.sum((1.0 - eta) * cross))) * scale
    return low, high


def direct_inner(f: GridField, g: GridField) -> float:
    return float(np.sum(f.values * g.values)) * f.cell_volume


def incident_counts(P: np.ndarray, T: Sequence[Tube]) -> np.ndarray:
    """Number of unit tubes meeting each unit ball (centre within distance 1 of the axis)."""
    P = np.asarray(P, dtype=float).reshape(len(P), -1) if len(P) else np.empty((0, 2))
    out = np.zeros(len(P), dtype=np.int64)
    for t in T:
        reach = t.radius + UNIT_RADIUS
        out += segment_dist2(P, t.anchor, t.direction, t.length) <= reach * reach
    return out


def tubes_meeting_ball(centre, radius: float, T: Sequence[Tube]) -> int:
    c = np.asarray(centre, dtype=float).reshape(1, -1)
    n = 0
    for t in T:
        reach = radius + t.radius
        n += int(segment_dist2(c, t.anchor, t.direction, t.length)[0] <= reach * reach)
    return n


def _disk_mass(f: GridField, S: float) -> np.ndarray:
    """Mass of ``f`` in the radius-``S`` ball around every grid point (periodic)."""
    G, h, n = f.side, f.spacing, f.dim
    idx = np.fft.fftfreq(G, d=1.0 / G)  # signed integer offsets
    grids = np.meshgrid(*([idx * h] * n), indexing="ij", sparse=True)
    disk = (sum(x * x for x in grids) <= S * S).astype(float)
    conv = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(disk)).real
    return conv * f.cell_volume


def extract_heavy_balls(f: GridField, P: np.ndarray, S: float):
    """Greedy disjoint S-balls by descending f-mass until half of P and of f is covered."""
    G, h, n = f.side, f.spacing, f.dim
    total = f.integral()
    mass = _disk_mass(f, S)
    stride = max(1, int(round(S / (4 * h))))
    sub = mass[tuple(slice(0, G, stride) for _ in range(n))]
    order = np.argsort(-sub.ravel(), kind="stable")
    cand_idx = np.stack(np.unravel_index(order, sub.shape), axis=1) * stride
    cand_mass = sub.ravel()[order]
    P = np.asarray(P, dtype=float).reshape(-1, n)
    covered = np.zeros(len(P), dtype=bool)
    chosen, got = [], 0.0
    for ci, m in zip(cand_idx, cand_mass):
        if m <= 0:
            break
        c = (ci + 0.5) * h
        if any(np.sum((c - q) ** 2) < (2 * S) ** 2 for q in chosen):
            continue
        chosen.append(c)
        got += m
        covered |= np.sum((P - c) ** 2, axis=1) <= S * S
        if got >= 0.5 * total and covered.mean() >= 0.5:
            break
    frac_p = float(covered.mean()) if len(P) else 1.0
    return chosen, frac_p, (got / total if total > 0 else 1.0)


def classify(P, T: Sequence[Tube], E_local: float, S: float, D: float,
             G: Optional[int] = None, counts: Optional[np.ndarray] = None) -> HeavyBallVerdict:
    """Thin/Thick verdict for unit balls ``P`` each meeting between E and 2E of the unit tubes ``T``.

    ``counts`` may supply the incidence counts of ``P`` when they are already
    known exactly (e.g. from a lattice richness map).
    """
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, -1)
    n = P.shape[1]
    counts = incident_counts(P, T) if counts is None else np.asarray(counts)
    bad = np.flatnonzero((counts < E_local) | (counts > 2 * E_local))
    if len(bad):
        i = int(bad[0])
        raise InvalidInput(f"ball {i} meets {int(counts[i])} tubes, outside [E, 2E] = [{E_local}, {2 * E_local}]")
    G = G or default_grid(D)
    f, g = build_fields(P, T, D, G)
    low, high = highlow_split(f, g, S)
    thin_bound = S ** n * E_local ** -2 * len(T) * D ** (n - 1)
    verdict = HeavyBallVerdict("Thin" if high >= low else "Thick", high, low, S, D, E_local,
                               len(P), len(T), thin_bound, len(P) / thin_bound)
    if verdict.kind == "Thick":
        centres, frac_p, frac_m = extract_heavy_balls(f, P, S)
        hits = [tubes_meeting_ball(c, S, T) for c in centres]
        verdict.heavy_balls = list(zip(centres, hits))
        verdict.covered_fraction = frac_p
        verdict.mass_fraction = frac_m
        verdict.c_thick = min(hits) / (S ** (n - 1) * E_local) if hits else 0.0
    return verdict


def rescale_to_unit(family: TubeFamily, indices: np.ndarray, margin: float = 0.0):
    """Magnify by 1/delta: lattice balls become unit balls, delta-tubes unit tubes.

    Everything is shifted by ``margin`` so objects on the unit cube's boundary
    stay inside the sampled domain.  Returns ``(P, T, D)``.
    """
    delta = family.delta
    P = np.asarray(indices, dtype=float).reshape(-1, family.dim) + margin
    T = [Tube(tuple(a / delta + margin for a in t.anchor), t.direction, t.length / delta, UNIT_RADIUS)
         for t in family.tubes]
    return P, T, 1.0 / delta + 2 * margin


def classify_family(family: TubeFamily, rmap, E_local: int, S: float, margin: Optional[float] = None,
                    G: Optional[int] = None) -> HeavyBallVerdict:
    """Classify the balls of ``rmap`` meeting between E and 2E tubes, after magnifying by 1/delta."""
    sel = (rmap.counts >= E_local) & (rmap.counts <= 2 * E_local)
    margin = S if margin is None else margin
    P, T, D = rescale_to_unit(family, rmap.index[sel], margin)
    return classify(P, T, E_local, S, D, G, counts=rmap.counts[sel])


def anchor_core_counts(family: TubeFamily, rmap) -> np.ndarray:
    """Richness of the lattice balls inside the anchor squares of a heavy-ball example."""
    side = family.meta["anchor_side"]
    x = rmap.index * family.delta
    inside = np.zeros(len(x), dtype=bool)
    for c in family.meta["anchor_centres"]:
        inside |= np.all(np.abs(x - np.asarray(c)) <= side / 2, axis=1)
    return rmap.counts[inside]


def dyadic_floor(x: float) -> int:
    return 2 ** int(math.floor(math.log2(max(x, 1))))
