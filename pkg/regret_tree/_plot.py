from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Final

import matplotlib
import numpy as np
from loguru import logger
from matplotlib.figure import Figure

from ._oracle import SweepReport
from ._oracle import ValidationReport
from ._selective import SelectiveCurve

_FIGSIZE: Final[tuple[float, float]] = (6.4, 4.8)
# fixed salt and no date: identical runs give identical SVG bytes
_SVG_RC: Final[dict[str, object]] = {
    "svg.hashsalt": "regret-tree",
    "svg.fonttype": "none",
}


def _save_svg(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("Wrote {!r}", str(path))


def plot_decomposition(report: ValidationReport, path: Path) -> None:
    """Estimated versus simulated total regret with a y = x reference."""
    estimated = np.array([d.total_estimated for d in report.decompositions])
    simulated = np.array([d.total_simulated for d in report.decompositions])

    fig = Figure(figsize=_FIGSIZE)
    ax = fig.add_subplot()
    ax.scatter(simulated, estimated, s=16, alpha=0.8, label="evaluation point")
    upper = float(max(estimated.max(), simulated.max(), 1e-12))
    ax.plot([0.0, upper], [0.0, upper], color="gray", linestyle="--", label="y = x")
    ax.set_xlabel("simulated total regret")
    ax.set_ylabel("estimated total regret (leaf + structural)")
    ax.set_title(
        f"R = {report.summary.realizations}, "
        f"correlation = {report.summary.correlation:.3f}"
    )
    ax.legend(loc="upper left")
    fig.tight_layout()
    _save_svg(fig, path)


def plot_sweep(report: SweepReport, path: Path) -> None:
    grid = report.grid
    fig = Figure(figsize=_FIGSIZE)
    ax = fig.add_subplot()
    ax.plot(grid, [p.leaf_regret for p in report.points], marker="o", color="C0")
    ax.set_xscale("log")
    ax.set_xlabel("min_leaf")
    ax.set_ylabel("mean leaf regret", color="C0")

    loss_ax = ax.twinx()
    loss_ax.plot(
        grid,
        [p.test_log_loss for p in report.points],
        marker="s",
        color="C1",
        label="held-out",
    )
    loss_ax.plot(
        grid,
        [p.train_log_loss for p in report.points],
        marker="^",
        linestyle=":",
        color="C1",
        label="in-sample",
    )
    loss_ax.set_ylabel("log loss", color="C1")
    loss_ax.legend(loc="upper center")
    ax.set_title(f"max_depth = {report.max_depth}, R = {report.realizations}")
    fig.tight_layout()
    _save_svg(fig, path)


def plot_selective(curves: Sequence[SelectiveCurve], path: Path) -> None:
    """Recall against coverage, coverage decreasing to the right."""
    fig = Figure(figsize=_FIGSIZE)
    ax = fig.add_subplot()
    for curve in curves:
        # None -> NaN leaves a gap where no positive label is retained
        ax.plot(
            [p.coverage for p in curve.points],
            [np.nan if p.recall is None else p.recall for p in curve.points],
            marker=".",
            label=curve.strategy,
        )
    ax.invert_xaxis()
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("coverage")
    ax.set_ylabel("recall on retained instances")
    ax.legend(loc="lower left")
    fig.tight_layout()
    _save_svg(fig, path)
