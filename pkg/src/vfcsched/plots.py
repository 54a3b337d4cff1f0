"""SVG figures: convergence curves and grouped cost bars.

Output is byte-stable for identical input: the SVG id salt is fixed and the
date stamp is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "vfcsched",
    "svg.fonttype": "path",  # glyphs as paths, no external fonts
    "path.simplify": False,  # keep one vertex per sample
    "font.size": 9,
}


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def _save(fig, path, tight: bool = False) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None},
                    bbox_inches="tight" if tight else None)
    except OSError as exc:
        raise OSError(f"cannot write SVG {path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)
    return path


def emit_svg(series: Sequence[Series], path, title: str = "", xlabel: str = "",
             ylabel: str = "") -> Path:
    """Line plot of each series; every line carries its label as SVG id."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for s in series:
            (line,) = ax.plot(list(s.x), list(s.y), label=s.label, linewidth=1.2)
            line.set_gid(s.label)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def convergence_svg(trace: Sequence[float], path, title: str = "") -> Path:
    """Best fitness per iteration, drawn with one vertex per iteration."""
    xs = range(1, len(trace) + 1)
    return emit_svg([Series("convergence", xs, trace)], path, title,
                    "iteration", "best fitness")


def cost_bars_svg(groups: Sequence[str], algorithms: Sequence[str],
                  values: Sequence[Sequence[float]], path, title: str = "") -> Path:
    """Grouped bars: ``values[i][j]`` is the cost of ``algorithms[j]`` in ``groups[i]``."""
    width = 0.8 / max(len(algorithms), 1)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.4))
        for j, algo in enumerate(algorithms):
            xs = [i + (j - (len(algorithms) - 1) / 2) * width for i in range(len(groups))]
            bars = ax.bar(xs, [row[j] for row in values], width, label=algo)
            for i, patch in enumerate(bars.patches):
                patch.set_gid(f"{algo}-{i}")
        ax.set_xticks(range(len(groups)), list(groups))
        ax.set_ylabel("cost")
        ax.set_title(title)
        # long sweeps give many bars; wrap the legend into columns beside the axes
        ncol = max(1, -(-len(algorithms) // 20))
        ax.legend(frameon=False, fontsize=7, ncol=ncol, loc="upper left",
                  bbox_to_anchor=(1.01, 1.0))
        return _save(fig, path, tight=True)
