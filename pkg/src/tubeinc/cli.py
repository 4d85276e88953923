"""Command line front end.

Exit status: 0 when every requested check passes, 2 when a check misses its
tolerance, 1 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds, falconer, families, highlow, incidence, serialize
from .geometry import InvalidInput

FAMILIES = ("well-spaced", "direction-spaced", "heavy-ball", "grid", "bush", "fat-rectangle")
THEOREMS = {"st": "ST", "thm1_1": "Thm1_1", "thm1_2": "Thm1_2", "thm1_3": "Thm1_3",
            "main": "Main", "kakmax": "KakMax"}
DEFAULT_FAMILY = {"ST": "well-spaced", "Thm1_1": "well-spaced", "Thm1_2": "direction-spaced",
                  "Thm1_3": "well-spaced", "Main": "well-spaced", "KakMax": "bush"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def scale(text: str) -> float:
    """Parse ``1/256``, ``0.25`` or ``8`` exactly, then convert to float."""
    try:
        return float(Fraction(str(text)))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None


def seed_list(text: str) -> list[int]:
    """``0..9`` (inclusive range) or ``0,3,5``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}; use 0..9 or 0,1,2") from None
    if not out:
        raise argparse.ArgumentTypeError("seed list is empty")
    return out


def _pow2(name: str, value, allow_none=True):
    if value is None and allow_none:
        return
    if not families.is_power_of_two(value):
        raise UsageError(f"--{name} must be a power of two, got {value}")


def _common(p):
    p.add_argument("--config", help="JSON file whose keys provide defaults for the flags")
    p.add_argument("--output", default="out", help="output directory (created if missing)")
    p.add_argument("--tolerances", help="JSON file overriding packaged tolerances")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")


def _family_args(p):
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--delta", type=scale)
    p.add_argument("--W", type=scale, default=None)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--N1", type=int, default=1)
    p.add_argument("--A", type=scale, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--seeds", type=seed_list, default=[0])


def build_parser() -> argparse.ArgumentParser:
    ap = Parser(prog="tubeinc", description="Incidence experiments for well-spaced delta-tubes.")
    sub = ap.add_subparsers(dest="command", parser_class=Parser)

    g = sub.add_parser("generate", help="write tube families as JSON")
    _family_args(g)
    _common(g)

    c = sub.add_parser("count", help="richness map of a family")
    _family_args(c)
    c.add_argument("--family-file", help="count a saved family JSON instead of generating one")
    _common(c)

    v = sub.add_parser("verify", help="sweep r and compare |P_r| with a bound")
    v.add_argument("--theorem", choices=sorted(THEOREMS), required=False)
    v.add_argument("--eps", type=float, default=0.2)
    _family_args(v)
    _common(v)

    h = sub.add_parser("highlow", help="thin/thick classification of a rich ball set")
    h.add_argument("--example", choices=("heavy-ball", "well-spaced"), default="heavy-ball")
    h.add_argument("--delta", type=scale)
    h.add_argument("--W", type=scale)
    h.add_argument("--A", type=scale, default=4)
    h.add_argument("--S", type=scale, default=None)
    h.add_argument("--E", type=int, default=None)
    h.add_argument("--grid", type=int, default=None)
    h.add_argument("--seeds", type=seed_list, default=[0])
    _common(h)

    gl = sub.add_parser("grid-lower", help="rich points of the grid example")
    gl.add_argument("--delta", type=scale)
    gl.add_argument("--W", type=scale)
    gl.add_argument("--dim", type=int, default=2)
    gl.add_argument("--r", type=int)
    _common(gl)

    f = sub.add_parser("falconer", help="distance quadruples via the Elekes-Sharir transform")
    f.add_argument("--delta", type=scale)
    f.add_argument("--s", type=float)
    f.add_argument("--eps", type=float, default=0.2)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--seeds", type=seed_list, default=None)
    _common(f)
    ap.commands = {"generate": g, "count": c, "verify": v, "highlow": h, "grid-lower": gl, "falconer": f}
    return ap


def _apply_config(ap, args):
    """Fill flags left at their defaults from the JSON config file."""
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    cmd = cfg.pop("command", args.command)
    if cmd != args.command:
        raise UsageError(f"config is for command {cmd!r}, not {args.command!r}")
    params = dict(cfg.pop("params", {}), **cfg)
    known = vars(args)
    converters = {"delta": scale, "W": scale, "A": scale, "S": scale, "seeds": seed_list}
    for key, val in params.items():
        attr = key.replace("-", "_")
        if attr not in known:
            raise UsageError(f"config field {key!r} is not an option of {args.command}")
        default = ap.commands[args.command].get_default(attr)
        if known[attr] == default:
            if attr in converters and isinstance(val, (str, int, float)):
                val = converters[attr](str(val)) if attr != "seeds" else (
                    seed_list(val) if isinstance(val, str) else [int(val)])
            elif attr == "seeds" and isinstance(val, list):
                val = [int(s) for s in val]
            setattr(args, attr, val)
    return args


def make_family(args, seed: int) -> families.TubeFamily:
    kind, delta, W = args.family, args.delta, args.W
    if delta is None:
        raise UsageError("--delta is required")
    _pow2("delta", delta)
    if kind in ("well-spaced", "direction-spaced", "heavy-ball", "grid"):
        if W is None:
            raise UsageError(f"--W is required for family {kind}")
        _pow2("W", W)
        W = int(W)
    if kind == "well-spaced":
        return families.gen_well_spaced(delta, W, args.dim, seed)
    if kind == "direction-spaced":
        return families.gen_direction_spaced(delta, W, args.N1, seed)
    if kind == "heavy-ball":
        if args.A is None:
            raise UsageError("--A is required for family heavy-ball")
        return families.gen_heavy_ball_example(delta, W, args.A, seed)
    if kind == "grid":
        return families.gen_grid_example(delta, W, args.dim)
    if kind == "bush":
        return families.gen_bush(delta)
    if kind == "fat-rectangle":
        if args.r is None:
            raise UsageError("--r is required for family fat-rectangle")
        return families.gen_fat_rectangle(delta, args.r, seed)
    raise UsageError("--family is required")


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args, tol) -> int:
    out = _outdir(args)
    for seed in args.seeds:
        fam = make_family(args, seed)
        serialize.save_family(fam, out / f"family_seed{seed}.json")
        if args.plot:
            from .plots import plot_family
            plot_family(fam, out / f"family_seed{seed}.svg")
        print(f"seed {seed}: {len(fam)} tubes")
    return 0


def cmd_count(args, tol) -> int:
    out = _outdir(args)
    jobs = [("file", serialize.load_family(args.family_file))] if args.family_file else \
        [(seed, make_family(args, seed)) for seed in args.seeds]
    summaries = {}
    for seed, fam in jobs:
        rmap = incidence.richness_map_fast(fam)
        incidence.write_richmap_csv(rmap, out / f"richmap_seed{seed}.csv")
        summaries[str(seed)] = incidence.richmap_summary(rmap)
        if args.plot:
            from .plots import plot_profile
            plot_profile(incidence.dyadic_profile(rmap), out / f"profile_seed{seed}.svg", f"seed {seed}")
    serialize.write_json(summaries, out / "summary.json")
    return 0


def cmd_verify(args, tol) -> int:
    if args.theorem is None:
        raise UsageError("--theorem is required")
    name = THEOREMS[args.theorem]
    if args.family is None:
        args.family = DEFAULT_FAMILY[name]
    if name == "Thm1_3":
        args.dim = 3
    out = _outdir(args)
    rows, series, per_seed = [], {}, {}
    limit = tol["upper_ratio"]
    for seed in args.seeds:
        fam = make_family(args, seed)
        spec = bounds.BoundSpec(name, args.eps, fam.delta, fam.W, len(fam), fam.dim, args.N1)
        rep = bounds.verify_family(fam, spec)
        for row in rep.rows:
            rows.append({"seed": seed, **row})
        series[f"seed {seed}"] = rep.rows
        per_seed[str(seed)] = {k: v for k, v in rep.to_dict().items() if k != "rows"}
    max_ratio = max((row["ratio"] for row in rows), default=0.0)
    ok = max_ratio <= limit
    serialize.write_csv(rows, ["seed", "r", "measured", "bound", "ratio"], out / "verify.csv")
    serialize.write_json({"theorem": name, "family": args.family, "maxRatio": max_ratio,
                          "tolerance": limit, "ok": ok, "seeds": per_seed}, out / "verify.json")
    if args.plot:
        from .plots import plot_verify
        plot_verify(series, out / "verify.svg", f"{name}: measured vs bound")
    print(f"{name}: maxRatio {max_ratio:.4g} (tolerance {limit:g}) -> {'ok' if ok else 'FAIL'}")
    return 0 if ok else 2


def cmd_highlow(args, tol) -> int:
    if args.delta is None or args.W is None:
        raise UsageError("--delta and --W are required")
    _pow2("delta", args.delta)
    _pow2("W", args.W)
    out = _outdir(args)
    verdicts, ok = {}, True
    for seed in args.seeds:
        if args.example == "heavy-ball":
            fam = families.gen_heavy_ball_example(args.delta, int(args.W), args.A, seed)
            rmap = incidence.richness_map_fast(fam)
            E = args.E or highlow.dyadic_floor(float(np.median(highlow.anchor_core_counts(fam, rmap))))
            S = args.S or args.A
            margin = 2 * S
        else:
            fam = families.gen_well_spaced(args.delta, int(args.W), 2, seed)
            rmap = incidence.richness_map_fast(fam)
            E = args.E or highlow.dyadic_floor(float(rmap.counts.mean()))
            S = args.S or 4
            margin = S
        _pow2("S", S)
        v = highlow.classify_family(fam, rmap, E, S, margin, args.grid)
        d = v.to_dict()
        if v.kind == "Thick":
            passed = v.covered_fraction >= tol["thick_cover"] and v.c_thick >= tol["thick_hits"]
            d["tolerances"] = {"thick_cover": tol["thick_cover"], "thick_hits": tol["thick_hits"]}
        else:
            passed = v.thin_ratio <= tol["thin_C"]
            d["tolerances"] = {"thin_C": tol["thin_C"]}
        d["ok"] = bool(passed)
        ok &= passed
        verdicts[str(seed)] = d
        print(f"seed {seed}: {v.kind} (high {v.high_term:.4g}, low {v.low_term:.4g})")
    serialize.write_json({"example": args.example, "ok": ok, "verdicts": verdicts}, out / "highlow.json")
    if args.plot:
        from .plots import plot_highlow
        plot_highlow(verdicts, out / "highlow.svg", f"{args.example}: high vs low")
    return 0 if ok else 2


def cmd_grid_lower(args, tol) -> int:
    if args.delta is None or args.W is None or args.r is None:
        raise UsageError("--delta, --W and --r are required")
    _pow2("delta", args.delta)
    _pow2("W", args.W)
    out = _outdir(args)
    rep = bounds.grid_lower_bound_check(args.delta, int(args.W), args.dim, args.r,
                                        tol["grid_rich_fraction"], tol["grid_lower_c"])
    rep["tolerances"] = {"grid_rich_fraction": tol["grid_rich_fraction"], "grid_lower_c": tol["grid_lower_c"]}
    serialize.write_json(rep, out / "grid_lower.json")
    if args.plot and rep.get("points"):
        from .plots import plot_rich_points
        fam = families.gen_grid_example(args.delta, int(args.W), args.dim)
        pts = bounds.predicted_rich_points(int(args.W), int(args.r), args.dim)
        plot_rich_points(fam, pts, out / "grid_lower.svg", f"grid example, r={args.r}")
    print(f"grid-lower: {rep.get('points', 0)} predicted points, c = {rep.get('c', float('nan')):.4g}")
    return 0 if rep["ok"] else 2


def cmd_falconer(args, tol) -> int:
    if args.delta is None or args.s is None:
        raise UsageError("--delta and --s are required")
    _pow2("delta", args.delta)
    seeds = args.seeds or [args.seed if args.seed is not None else 0]
    out = _outdir(args)
    ok = True
    for seed in seeds:
        E = families.gen_spread_ballset(args.delta, args.s, seed)
        rep = falconer.falconer_pipeline(E, args.delta, args.eps, tol)
        ok &= rep["ok"]
        serialize.write_json(rep, out / f"falconer_seed{seed}.json")
        if args.plot:
            from .plots import plot_profile
            plot_profile(rep["richProfile"], out / f"falconer_seed{seed}.svg", f"ES tubes, seed {seed}")
        print(f"seed {seed}: Q={rep['Q']} #Delta={rep['deltaIntervals']} csSlack={rep['csSlack']:.4g}")
    return 0 if ok else 2


COMMANDS = {"generate": cmd_generate, "count": cmd_count, "verify": cmd_verify,
            "highlow": cmd_highlow, "grid-lower": cmd_grid_lower, "falconer": cmd_falconer}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_usage(sys.stderr)
        print("tubeinc: error: a command is required", file=sys.stderr)
        return 1
    try:
        args = _apply_config(ap, args)
        tol = bounds.load_tolerances(args.tolerances)
        return COMMANDS[args.command](args, tol)
    except (UsageError, InvalidInput, argparse.ArgumentTypeError) as exc:
        print(f"tubeinc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tubeinc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
