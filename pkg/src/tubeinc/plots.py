"""SVG figures for reports.  Purely presentational; nothing reads them back."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

from .families import TubeFamily  # noqa: E402

plt.rcParams["svg.hashsalt"] = "tubeinc"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_family(family: TubeFamily, path):
    """Axis segments of a planar family (3D families are projected to the first two axes)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    segs = [(t.anchor[:2], t.end[:2]) for t in family.tubes]
    ax.add_collection(LineCollection(segs, linewidths=0.4, colors="k", alpha=0.6))
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_aspect("equal")
    ax.set_title(f"{family.spacing.kind}: {len(family)} tubes, delta={family.delta:g}")
    return _save(fig, path)


def plot_verify(series: dict, path, title: str = ""):
    """Log-log measured |P_r| against the bound; ``series`` maps a label to rows."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, rows in sorted(series.items()):
        rs = [row["r"] for row in rows if row["measured"] > 0]
        ax.loglog(rs, [row["measured"] for row in rows if row["measured"] > 0], "o-", ms=3, label=f"{label} measured")
        ax.loglog([row["r"] for row in rows], [row["bound"] for row in rows], "--", lw=1, label=f"{label} bound")
    ax.set_xlabel("r")
    ax.set_ylabel("|P_r|")
    ax.set_title(title)
    if series:
        ax.legend(fontsize=6)
    return _save(fig, path)


def plot_profile(profile, path, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 4))
    if profile:
        r, n = zip(*profile)
        ax.loglog(r, n, "o-", ms=3)
    ax.set_xlabel("r")
    ax.set_ylabel("rich balls")
    ax.set_title(title)
    return _save(fig, path)


def plot_rich_points(family: TubeFamily, points, path, title: str = ""):
    """Family axes with the predicted rich points overlaid (first two coordinates)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    segs = [(t.anchor[:2], t.end[:2]) for t in family.tubes]
    ax.add_collection(LineCollection(segs, linewidths=0.3, colors="0.6", alpha=0.5))
    if len(points):
        ax.plot(points[:, 0], points[:, -1], "o", color="tab:red", ms=3)
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_aspect("equal")
    ax.set_title(title)
    return _save(fig, path)


def plot_highlow(verdicts: dict, path, title: str = ""):
    """High and low frequency terms per seed on a log scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    seeds = sorted(verdicts, key=int)
    x = range(len(seeds))
    ax.bar([i - 0.2 for i in x], [max(verdicts[s]["highTerm"], 1e-12) for s in seeds], 0.4, label="high")
    ax.bar([i + 0.2 for i in x], [max(verdicts[s]["lowTerm"], 1e-12) for s in seeds], 0.4, label="low")
    ax.set_xticks(list(x), [f"{s}\n{verdicts[s]['kind']}" for s in seeds])
    ax.set_yscale("log")
    ax.set_ylabel("integral")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)
