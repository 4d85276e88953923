"""JSON and CSV emission with stable formatting (no timestamps, fixed key order)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .families import Spacing, TubeFamily
from .geometry import InvalidInput, Tube


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def write_csv(rows: list[dict], columns: list[str], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_plain(row[c]) for c in columns])
    return path


def family_to_dict(family: TubeFamily) -> dict:
    return {
        "dim": family.dim,
        "delta": family.delta,
        "W": family.W,
        "spacingClass": family.spacing.kind,
        "spacingParam": family.spacing.param,
        "meta": family.meta,
        "tubes": [{"anchor": list(t.anchor), "direction": list(t.direction),
                   "length": t.length, "radius": t.radius} for t in family.tubes],
    }


def family_from_dict(doc: dict) -> TubeFamily:
    try:
        tubes = [Tube(tuple(t["anchor"]), tuple(t["direction"]), t["length"], t["radius"]) for t in doc["tubes"]]
        spacing = Spacing(doc.get("spacingClass", "Unstructured"), doc.get("spacingParam"))
        return TubeFamily(tubes, doc["delta"], doc["W"], doc["dim"], spacing, doc.get("meta", {}))
    except KeyError as exc:
        raise InvalidInput(f"family document lacks field {exc}") from None


def save_family(family: TubeFamily, path) -> Path:
    return write_json(family_to_dict(family), path)


def load_family(path) -> TubeFamily:
    return family_from_dict(json.loads(Path(path).read_text()))
