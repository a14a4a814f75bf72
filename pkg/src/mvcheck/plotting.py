"""Figures for CLI reports: conflict graphs, fuzz summaries, simulation traces."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .graph import MVCG, EdgeReason  # noqa: E402

REASON_COLORS = {
    EdgeReason.REAL_TIME: "0.55",
    EdgeReason.CC: "tab:blue",
    EdgeReason.CR: "tab:green",
    EdgeReason.RC: "tab:red",
}


def _circle(vertices: Sequence[int]) -> dict[int, tuple[float, float]]:
    n = max(len(vertices), 1)
    return {
        v: (math.cos(math.pi / 2 - 2 * math.pi * i / n), math.sin(math.pi / 2 - 2 * math.pi * i / n))
        for i, v in enumerate(vertices)
    }


def render_mvcg(g: MVCG, path: Path, title: Optional[str] = None, cycle: Optional[list[int]] = None) -> Path:
    """Draw the graph on a circle; edges on ``cycle`` are drawn thick."""
    pos = _circle(g.vertices)
    on_cycle = set(zip(cycle, cycle[1:])) if cycle else set()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for u, v, e in g.edges():
        # colour by the most specific reason
        reason = next(r for r in (EdgeReason.RC, EdgeReason.CR, EdgeReason.CC, EdgeReason.REAL_TIME) if r in e.reasons)
        curved = g.has_edge(v, u)
        ax.annotate(
            "",
            xy=pos[v],
            xytext=pos[u],
            arrowprops=dict(
                arrowstyle="-|>",
                color=REASON_COLORS[reason],
                lw=2.5 if (u, v) in on_cycle else 1.2,
                shrinkA=14,
                shrinkB=14,
                connectionstyle="arc3,rad=0.2" if curved else "arc3",
            ),
        )
        mx, my = (pos[u][0] + pos[v][0]) / 2, (pos[u][1] + pos[v][1]) / 2
        ax.text(mx, my, e.label(), fontsize=7, ha="center", va="center",
                bbox=dict(boxstyle="round,pad=0.15", fc="white", ec="none", alpha=0.8))
    for v, (x, y) in pos.items():
        ax.scatter([x], [y], s=600, c="white", edgecolors="black", zorder=3)
        ax.text(x, y, f"T{v}", ha="center", va="center", zorder=4)
    ax.set_xlim(-1.4, 1.4)
    ax.set_ylim(-1.4, 1.4)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    handles = [plt.Line2D([], [], color=c, label=r.value) for r, c in REASON_COLORS.items()]
    ax.legend(handles=handles, loc="lower right", fontsize=7, frameon=False)
    return _save(fig, path)


def render_fuzz_summary(counts: dict, path: Path, title: str = "differential fuzz") -> Path:
    keys = ["valid", "invalid", "decided", "multi_versioned", "co_opaque", "mvc_opaque", "opaque", "witnesses"]
    values = [counts.get(k, 0) for k in keys]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    bars = ax.bar(range(len(keys)), values, color="tab:blue")
    ax.bar_label(bars, fontsize=7)
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels([k.replace("_", "-") for k in keys], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("histories")
    ax.set_title(title)
    return _save(fig, path)


def render_simulation(trace: list[dict], path: Path, title: str = "scheduler run") -> Path:
    """``trace`` holds one dict per step with cumulative counters and the edge count."""
    steps = list(range(1, len(trace) + 1))
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 4), sharex=True)
    for key in ("commits", "aborts", "version_skips"):
        top.step(steps, [row[key] for row in trace], where="post", label=key.replace("_", " "))
    top.legend(fontsize=7, frameon=False)
    top.set_ylabel("count")
    top.set_title(title)
    bottom.step(steps, [row["edges"] for row in trace], where="post", color="0.3")
    bottom.set_ylabel("graph edges")
    bottom.set_xlabel("step")
    return _save(fig, path)


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
