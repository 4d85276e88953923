"""Distance sets of spread-out ball sets via the Elekes-Sharir transform.

A pair of points ``(x, y)`` in the plane maps to the line of rigid motions
carrying ``x`` to ``y``, parametrised by rotation centre and ``cot(theta/2)``.
Distance quadruples then become intersecting pairs of such lines, so the
quadruple count is controlled by the richness profile of a tube family in
the unit cube.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import BallSet, Spacing, TubeFamily, chart_cell
from .geometry import InvalidInput, Tube, segment_dist2
from .incidence import dyadic_profile, richness_map_fast

QUADRUPLE_GUARD = 10 ** 7
MIN_PAIR_DIST = 1 / 3
MIN_TUBE_LENGTH = 0.25


class NotSplittable(InvalidInput):
    """No pair of candidate balls holds enough of the set."""


@dataclass(frozen=True)
class ESLine:
    """The line ``base + t * dir`` with ``base = (c1, c2, 0)`` and ``dir = (k1, k2, 1)``."""

    base: tuple
    dir: tuple

    def __post_init__(self):
        if self.base[2] != 0 or self.dir[2] != 1:
            raise InvalidInput("line must be given in the (c1, c2, 0) + t (k1, k2, 1) form")

    def at(self, t):
        return tuple(b + t * d for b, d in zip(self.base, self.dir))


def es_line(x, y) -> ESLine:
    """Line of rigid motions taking ``x`` to ``y``.

    Works with any exact numeric type (ints, fractions) as well as floats.
    """
    x1, x2 = x
    y1, y2 = y
    base = ((x1 + y1) / 2, (x2 + y2) / 2, 0)
    direction = (-(y2 - x2) / 2, (y1 - x1) / 2, 1)
    return ESLine(base, direction)


def invert_line(line: ESLine):
    """The unique point pair ``(x, y)`` whose motion line is ``line``."""
    c1, c2, _ = line.base
    k1, k2, _ = line.dir
    x = (c1 - k2, c2 + k1)
    y = (c1 + k2, c2 - k1)
    return x, y


def _t_range(line: ESLine) -> tuple[float, float]:
    """Parameters with the rotation centre in the unit square and ``|t| <= 1/2``."""
    lo, hi = -0.5, 0.5
    for c, k in zip(line.base[:2], line.dir[:2]):
        c, k = float(c), float(k)
        if abs(k) < 1e-15:
            if not (0.0 <= c <= 1.0):
                return 0.0, -1.0
            continue
        a, b = (0.0 - c) / k, (1.0 - c) / k
        lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
    return lo, hi


def es_tube(p, q, delta: float) -> Optional[Tube]:
    """Delta-tube around the motion line of the ball centres ``p`` and ``q`` inside ``[0, 1]^3``.

    The parameter is restricted to rotation centres in the unit square and
    ``|t| <= 1/2``; the third coordinate is shifted by ``1/2`` so the tube
    sits in the unit cube.  Returns None when the surviving piece is shorter
    than 1/4.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    dist = float(np.hypot(*(q - p)))
    if dist < MIN_PAIR_DIST:
        raise InvalidInput(f"ball centres are {dist:.4f} apart; need >= 1/3")
    line = es_line(p, q)
    lo, hi = _t_range(line)
    if hi <= lo:
        return None
    a = np.array(line.at(lo), dtype=float)
    b = np.array(line.at(hi), dtype=float)
    a[2] += 0.5
    b[2] += 0.5
    if float(np.linalg.norm(b - a)) < MIN_TUBE_LENGTH:
        return None
    return Tube.through(a, b, delta / 2)


def transversality(p, q) -> float:
    """``|dir(l_pq) x dir(l_qp)|`` for the two motion lines of a pair."""
    d1 = np.array(es_line(p, q).dir, dtype=float)
    d2 = np.array(es_line(q, p).dir, dtype=float)
    return float(np.linalg.norm(np.cross(d1, d2)))


def es_dilation(p, q, delta: float, samples: int = 64, seed: int = 0) -> float:
    """How far motion lines of nearby point pairs stray from the tube, in tube radii.

    Points ``x'`` and ``y'`` are drawn from the delta-balls around ``p`` and
    ``q``; the returned value is the largest distance from ``l_{x'y'}`` (over
    the tube's parameter range) to the tube axis divided by ``delta / 2``.
    """
    t = es_tube(p, q, delta)
    if t is None:
        return 0.0
    line = es_line(np.asarray(p, float), np.asarray(q, float))
    lo, hi = _t_range(line)
    ts = np.linspace(lo, hi, 9)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = rng.normal(size=(2, 2))
        u *= (delta / 2) * np.sqrt(rng.uniform(size=(2, 1))) / np.linalg.norm(u, axis=1, keepdims=True)
        l2 = es_line(np.asarray(p, float) + u[0], np.asarray(q, float) + u[1])
        pts = np.array([l2.at(s) for s in ts], dtype=float)
        pts[:, 2] += 0.5
        d = np.sqrt(segment_dist2(pts, t.anchor, t.direction, t.length)).max()
        worst = max(worst, float(d))
    return worst / (delta / 2)


def tube_to_pair(t: Tube) -> tuple[np.ndarray, np.ndarray]:
    """Recover the point pair from an ES tube axis (undoing the shift of the third coordinate)."""
    a = np.asarray(t.anchor, dtype=float)
    d = np.asarray(t.direction, dtype=float)
    k = d[:2] / d[2]
    s = a[2] - 0.5
    c = a[:2] - s * k
    x, y = invert_line(ESLine((c[0], c[1], 0), (k[0], k[1], 1)))
    return np.array(x), np.array(y)


def es_spacing_loads(fam: TubeFamily, W: float) -> Counter:
    """Tubes per 1/W-tube, a 1/W-tube being labelled by the pair of 1/W-squares it comes from."""
    cells = Counter()
    for t in fam.tubes:
        x, y = tube_to_pair(t)
        key = tuple(int(v) for v in np.floor(W * np.concatenate([x, y]) + 1e-9))
        cells[key] += 1
    return cells


def _centres(E) -> np.ndarray:
    c = E.centers if isinstance(E, BallSet) else E
    return np.asarray(c, dtype=float).reshape(-1, 2) if len(c) else np.empty((0, 2))


def pair_distances(E1, E2) -> np.ndarray:
    a, b = _centres(E1), _centres(E2)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1)).ravel()


def quadruple_count(E1, E2, delta: float) -> int:
    """Ordered quadruples ``(p1, p2, q1, q2)`` with ``|d(p1,q1) - d(p2,q2)| < delta``.

    Sort the pair distances; for each one, the partners form a contiguous
    window found by binary search and then nudged so membership matches the
    floating-point test ``|di - dj| < delta`` exactly.
    """
    n1, n2 = len(_centres(E1)), len(_centres(E2))
    if n1 * n2 > QUADRUPLE_GUARD:
        raise InvalidInput(f"|E1|*|E2| = {n1 * n2} exceeds the guard {QUADRUPLE_GUARD}")
    s = np.sort(pair_distances(E1, E2))
    n = len(s)
    if n == 0:
        return 0
    i = np.arange(n)
    hi = np.searchsorted(s, s + delta, side="left")
    lo = np.searchsorted(s, s - delta, side="right")
    while True:
        grow = (hi < n) & (s[np.minimum(hi, n - 1)] - s < delta)
        shrink = (hi > i + 1) & (s[hi - 1] - s >= delta)
        if not (grow.any() or shrink.any()):
            break
        hi = hi + grow - shrink
    while True:
        grow = (lo > 0) & (s - s[np.maximum(lo - 1, 0)] < delta)
        shrink = (lo < i) & (s - s[np.minimum(lo, n - 1)] >= delta)
        if not (grow.any() or shrink.any()):
            break
        lo = lo - grow + shrink
    return int(np.sum(hi - lo))


def quadruple_count_brute(E1, E2, delta: float) -> int:
    """Direct count over all pairs of pairs; quadratic in ``|E1| |E2|``."""
    d = pair_distances(E1, E2)
    return int(np.count_nonzero(np.abs(d[:, None] - d[None, :]) < delta))


def distance_bins(E1, E2, delta: float) -> np.ndarray:
    """Pair counts of the occupied bins ``[j delta, (j+1) delta)``."""
    d = pair_distances(E1, E2)
    _, counts = np.unique(np.floor(d / delta).astype(np.int64), return_counts=True)
    return counts


def distance_interval_count(E1, E2, delta: float) -> int:
    return int(len(distance_bins(E1, E2, delta)))


def _candidate_centres() -> np.ndarray:
    g = np.arange(2, 19) / 20  # 0.1 .. 0.9
    return np.array(list(itertools.product(g, g)))


SPLIT_RADIUS = 0.1
SPLIT_FRACTION = 1 / 200
SPLIT_DISTANCE = (0.55, 0.7)


def split_ballset(E: BallSet):
    """First pair of radius-1/10 balls (fixed scan order) holding >= 1/200 of E each.

    Candidate centres are ``SPLIT_DISTANCE`` apart, which keeps every cross
    distance at least 1/3.
    """
    pts = _centres(E)
    if len(pts) == 0:
        raise NotSplittable("empty ball set")
    cands = _candidate_centres()
    inside = np.sum((pts[None, :, :] - cands[:, None, :]) ** 2, axis=-1) <= SPLIT_RADIUS ** 2
    frac = inside.mean(axis=1)
    good = frac >= SPLIT_FRACTION
    lo, hi = SPLIT_DISTANCE
    for i in np.flatnonzero(good):
        d = np.hypot(*(cands - cands[i]).T)
        ok = good & (d >= lo - 1e-12) & (d <= hi + 1e-12)
        ok[: i + 1] = False
        js = np.flatnonzero(ok)
        if len(js):
            j = int(js[0])
            return pts[inside[i]], pts[inside[j]], (tuple(cands[i]), tuple(cands[j]))
    raise NotSplittable("no pair of candidate balls holds 1/200 of the set each")


def es_family(E1: np.ndarray, E2: np.ndarray, delta: float, W: float) -> tuple[TubeFamily, int, list]:
    """Tubes ``l_{p,q}`` and ``l_{q,p}`` for all ``p`` in E1, ``q`` in E2; short pieces are dropped."""
    tubes, labels, dropped = [], [], 0
    for i, p in enumerate(E1):
        for j, q in enumerate(E2):
            for a, b, lab in ((p, q, (0, i, j)), (q, p, (1, j, i))):
                t = es_tube(a, b, delta)
                if t is None:
                    dropped += 1
                else:
                    tubes.append(t)
                    labels.append(lab)
    fam = TubeFamily(tubes, delta, W, 3, Spacing("WellSpaced"), {"generator": "elekes_sharir"})
    return fam, dropped, labels


def falconer_pipeline(E: BallSet, delta: Optional[float] = None, epsilon: float = 0.2,
                      tolerances: Optional[dict] = None) -> dict:
    """Split, transform, count and check the distance-set chain for one ball set."""
    from .bounds import default_tolerances

    tol = dict(default_tolerances())
    tol.update(tolerances or {})
    delta = E.delta if delta is None else delta
    W = E.W
    E1, E2, centres = split_ballset(E)
    Q = quadruple_count(E1, E2, delta)
    bins = distance_bins(E1, E2, delta)
    n_delta = int(len(bins))
    pair_count = len(E1) * len(E2)
    same_bin = int(np.sum(bins.astype(np.int64) ** 2))
    cs_exact = pair_count ** 2 <= n_delta * Q
    cs_chain = pair_count ** 2 <= n_delta * same_bin and same_bin <= Q

    fam, dropped, _ = es_family(E1, E2, delta, W)
    worst = max(es_spacing_loads(fam, W).values(), default=0)
    chart_worst = max(Counter(chart_cell(t, W) for t in fam.tubes).values(), default=0)
    spacing_ok = worst <= tol["es_spacing_limit"]
    rmap = richness_map_fast(fam)
    profile = dyadic_profile(rmap)
    # |P_r| counts balls with count >= r; the dyadic sum uses the shells [r, 2r)
    shells = [(r, n - (profile[k + 1][1] if k + 1 < len(profile) else 0)) for k, (r, n) in enumerate(profile)]
    dyadic_q = sum((2 * r) ** 2 * n for r, n in shells)
    prop54 = Q / (W ** 8 * delta ** (1 - epsilon))
    thm51 = n_delta / delta ** (-1 + epsilon)
    min_cross = min((transversality(p, q) for p in E1 for q in E2), default=math.inf)
    checks = {
        "cauchySchwarz": bool(cs_exact and cs_chain),
        "dyadicQ": bool(Q <= dyadic_q),
        "prop54": bool(prop54 <= tol["prop54_C"]),
        "thm51": bool(thm51 >= tol["thm51_c"]),
        "spacing": bool(spacing_ok),
    }
    return {
        "delta": delta,
        "s": E.s,
        "W": W,
        "epsilon": epsilon,
        "sizes": [len(E), len(E1), len(E2)],
        "splitCentres": [list(c) for c in centres],
        "Q": Q,
        "deltaIntervals": n_delta,
        "pairCount": pair_count,
        "sameBinPairs": same_bin,
        "csSlack": n_delta * Q / pair_count ** 2,
        "tubes": len(fam),
        "droppedTubes": dropped,
        "minTransversality": min_cross,
        "spacingOk": bool(spacing_ok),
        "spacingWorstLoad": worst,
        "spacingLimit": tol["es_spacing_limit"],
        "chartCellWorstLoad": chart_worst,
        "richProfile": [[r, n] for r, n in profile],
        "dyadicQBound": dyadic_q,
        "prop54Ratio": prop54,
        "prop54Limit": tol["prop54_C"],
        "thm51Ratio": thm51,
        "thm51Limit": tol["thm51_c"],
        "checks": checks,
        "ok": all(checks.values()),
    }
