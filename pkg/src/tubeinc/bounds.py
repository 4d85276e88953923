"""Incidence bound formulas, r-thresholds and empirical sweeps against measured richness.

All formulas carry implicit constant 1; sweeps report the measured ratio.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

import numpy as np

from .families import TubeFamily, gen_grid_example, grid_points, verify_spacing
from .geometry import InvalidInput
from .incidence import RichMap, rich_count, richness_at, richness_map_fast

BOUND_NAMES = ("ST", "Thm1_1", "Thm1_2", "Thm1_3", "Main", "KakMax", "GridLower")
_HYPOTHESIS = {"Thm1_1": "WellSpaced", "Thm1_3": "WellSpaced", "Main": "WellSpaced",
               "Thm1_2": "DirectionSpaced"}


@lru_cache(maxsize=1)
def default_tolerances() -> dict:
    return json.loads(resources.files("tubeinc").joinpath("tolerances.json").read_text())


def load_tolerances(path=None) -> dict:
    """Packaged tolerances, updated by the JSON file at ``path`` if given."""
    tol = dict(default_tolerances())
    if path is not None:
        with open(path) as fh:
            tol.update(json.load(fh))
    return tol


@dataclass(frozen=True)
class BoundSpec:
    name: str
    epsilon: float = 0.2
    delta: float = 1.0
    W: float = 1.0
    tube_count: int = 0
    dim: int = 2
    N1: Optional[int] = None

    def __post_init__(self):
        if self.name not in BOUND_NAMES:
            raise InvalidInput(f"unknown bound {self.name!r}; choose from {', '.join(BOUND_NAMES)}")
        if not (0 < self.epsilon < 1):
            raise InvalidInput(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.name in ("Thm1_1", "Thm1_2", "ST") and self.dim != 2:
            raise InvalidInput(f"{self.name} is a planar bound")
        if self.name == "Thm1_3" and self.dim != 3:
            raise InvalidInput("Thm1_3 is a bound in three dimensions")

    def eps_factor(self) -> float:
        """The ``delta^(-eps)`` slack, reported separately from the bare formula."""
        if self.name in ("ST", "KakMax", "GridLower"):
            return 1.0
        return self.delta ** (-self.epsilon)

    def with_count(self, n: int) -> "BoundSpec":
        return BoundSpec(self.name, self.epsilon, self.delta, self.W, int(n), self.dim, self.N1)


def bare_bound(spec: BoundSpec, r: float) -> float:
    """The named formula without its ``delta^(-eps)`` factor."""
    if r < 1:
        raise InvalidInput(f"r must be >= 1, got {r}")
    T = float(spec.tube_count)
    n = spec.dim
    if spec.name == "ST":
        return T * T / r ** 3 + T / r
    if spec.name == "Thm1_1":
        return T * T / r ** 3
    if spec.name == "Thm1_2":
        return T * T / (spec.W * r * r)
    if spec.name == "Thm1_3":
        return T ** 1.5 / (r * r)
    if spec.name == "KakMax":
        return T * T / (r * r)
    # Main and GridLower share the same shape
    return T ** (n / (n - 1)) / r ** ((n + 1) / (n - 1))


def bound_value(spec: BoundSpec, r: float) -> float:
    return spec.eps_factor() * bare_bound(spec, r)


def r_threshold(spec: BoundSpec) -> float:
    """Smallest r covered by the theorem (see :func:`above_threshold` for strictness)."""
    T, d, e = spec.tube_count, spec.delta, spec.epsilon
    if spec.name in ("Thm1_1", "Thm1_2"):
        return max(d ** (1 - e) * T, 1.0)
    if spec.name == "Thm1_3":
        return max(d ** (2 - e) * T, 1.0)
    if spec.name == "Main":
        return max(d ** (spec.dim - 1 - e / 4) * T, 1.0)
    if spec.name == "ST":
        return 2.0
    return 1.0


def above_threshold(spec: BoundSpec, r: float) -> bool:
    t = r_threshold(spec)
    if spec.name in ("Thm1_1", "Thm1_3", "Main"):
        return r > t
    return r >= t


@dataclass
class VerifyReport:
    spec: BoundSpec
    rows: list[dict]
    max_ratio: float
    valid_range: tuple
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bound": self.spec.name,
            "epsilon": self.spec.epsilon,
            "delta": self.spec.delta,
            "W": self.spec.W,
            "tubes": self.spec.tube_count,
            "dim": self.spec.dim,
            "epsFactor": self.spec.eps_factor(),
            "threshold": r_threshold(self.spec),
            "validRange": list(self.valid_range),
            "maxRatio": self.max_ratio,
            "rows": self.rows,
            "warnings": self.warnings,
        }


def verify_family(family: TubeFamily, spec: BoundSpec, rmap: Optional[RichMap] = None) -> VerifyReport:
    """Compare ``|P_r|`` with the named bound at every dyadic r past the threshold."""
    spec = spec.with_count(len(family)) if spec.tube_count != len(family) else spec
    notes = []
    kind = _HYPOTHESIS.get(spec.name)
    if kind and len(family):
        sp = verify_spacing(family, kind)
        if not sp.ok:
            msg = f"{kind} hypothesis fails: worst cell load {sp.worst_cell_load} > {sp.limit}"
            warnings.warn(msg)
            notes.append(msg)
    if len(family) == 0:
        return VerifyReport(spec, [], 0.0, (None, None), notes)
    rmap = richness_map_fast(family) if rmap is None else rmap
    top = rmap.max_count()
    rows = []
    r = 1
    while r <= top:
        if above_threshold(spec, r):
            measured = rich_count(rmap, r)
            b = bound_value(spec, r)
            rows.append({"r": r, "measured": measured, "bound": b,
                         "bareBound": bare_bound(spec, r), "ratio": measured / b})
        r *= 2
    max_ratio = max((row["ratio"] for row in rows), default=0.0)
    rng = (rows[0]["r"], rows[-1]["r"]) if rows else (None, None)
    return VerifyReport(spec, rows, max_ratio, rng, notes)


def grid_rich_point(a, b, p: int, q: int) -> np.ndarray:
    """The point ``((q-p)/q a + p/q b, p/q)`` on the segment from ``(a, 0)`` to ``(b, 1)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.append((q - p) / q * a + p / q * b, p / q)


def admissible_q(W: int, r: int, dim: int) -> list[int]:
    q0 = W * r ** (-1.0 / (dim - 1))
    return [q for q in range(max(1, math.ceil(q0 / 2 - 1e-9)), math.floor(2 * q0 + 1e-9) + 1)]


def predicted_rich_points(W: int, r: int, dim: int) -> np.ndarray:
    """Distinct predicted rich points of the grid example, first coordinates in [1/4, 3/4]."""
    g = grid_points(W)
    k = dim - 1
    mesh = np.stack(np.meshgrid(*([g] * k), indexing="ij"), axis=-1).reshape(-1, k)
    pts = []
    for q in admissible_q(W, r, dim):
        for p in range(max(1, math.ceil(q / 10)), q):
            if math.gcd(p, q) != 1:
                continue
            first = ((q - p) / q) * mesh[:, None, :] + (p / q) * mesh[None, :, :]
            first = first.reshape(-1, k)
            ok = np.all((first >= 0.25 - 1e-12) & (first <= 0.75 + 1e-12), axis=1)
            first = first[ok]
            pts.append(np.column_stack([first, np.full(len(first), p / q)]))
    if not pts:
        return np.empty((0, dim))
    allp = np.concatenate(pts)
    # exact rationals collide to the same float; round to kill representation noise
    return np.unique(np.round(allp, 12), axis=0)


def min_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return math.inf
    best = math.inf
    for i in range(len(points) - 1):
        d = np.sqrt(np.sum((points[i + 1:] - points[i]) ** 2, axis=1)).min()
        best = min(best, float(d))
    return best


def grid_lower_bound_check(delta: float, W: int, dim: int, r: int,
                           rich_fraction: float = 1 / 8, c_min: float = 1 / 64) -> dict:
    """Locate the grid example's predicted rich points and measure the lower-bound constant."""
    W, r = int(W), int(r)
    qs = admissible_q(W, r, dim)
    if not qs or max(qs) < 2:
        return {"ok": False, "reason": f"no admissible q for W={W}, r={r}", "points": 0}
    fam = gen_grid_example(delta, W, dim)
    pts = predicted_rich_points(W, r, dim)
    if len(pts) == 0:
        return {"ok": False, "reason": "no predicted point has first coordinates in [1/4, 3/4]", "points": 0}
    idx = np.rint(pts / delta).astype(np.int64)
    rich = richness_at(fam, idx)
    sep = min_pairwise_distance(pts)
    rmap = richness_map_fast(fam)
    measured = rich_count(rmap, r)
    shape = bare_bound(BoundSpec("GridLower", delta=delta, W=W, tube_count=len(fam), dim=dim), r)
    c = measured / shape
    rich_ok = bool(np.all(rich >= rich_fraction * r))
    sep_ok = bool(sep >= 1 / (2 * W) - 1e-12)
    return {
        "ok": rich_ok and sep_ok and c >= c_min,
        "delta": delta, "W": W, "dim": dim, "r": r,
        "qValues": qs,
        "points": int(len(pts)),
        "minRichness": int(rich.min()),
        "richnessOk": rich_ok,
        "minSeparation": sep,
        "separationOk": sep_ok,
        "tubes": len(fam),
        "measured": measured,
        "formula": shape,
        "c": c,
        "cMin": c_min,
    }
