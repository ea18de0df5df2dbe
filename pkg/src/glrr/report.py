"""Figure rendering for run reports.

Figures are drawn on standalone Agg-backed canvases (no pyplot state),
so rendering works headless and never interferes with an emb
application's matplotlib backend. Every figure lands next to the CSV
artifacts in the run directory.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .solver import IterationRecord

_DPI = 150


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    return path


def convergence_figure(history: tuple[IterationRecord, ...], path) -> Path:
    """Objective, stopping quantities, and penalty across iterations."""
    iters = [rec.iteration for rec in history]
    fig = Figure(figsize=(7, 8))
    axes = fig.subplots(3, 1, sharex=True)

    axes[0].plot(iters, [rec.objective for rec in history], color="tab:blue")
    axes[0].set_ylabel("objective")
    axes[0].set_title("solver convergence")

    axes[1].semilogy(
        iters,
        [max(rec.constraint_residual, 1e-300) for rec in history],
        label="|W1 - 1|",
        color="tab:orange",
    )
    axes[1].semilogy(
        iters,
        [max(rec.beta * rec.delta_w, 1e-300) for rec in history],
        label="beta |dW|",
        color="tab:green",
    )
    axes[1].set_ylabel("stopping quantities")
    axes[1].legend(loc="best", fontsize=8)

    axes[2].semilogy(iters, [rec.beta for rec in history], color="tab:red")
    axes[2].set_ylabel("beta")
    axes[2].set_xlabel("iteration")

    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, Path(path))


def matrix_figure(matrix: np.ndarray, path, title: str) -> Path:
    """Heatmap of a square matrix (affinity or coefficient magnitudes)."""
    fig = Figure(figsize=(6, 5))
    ax = fig.subplots()
    image = ax.imshow(matrix, cmap="viridis", interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("point index")
    ax.set_ylabel("point index")
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    return _save(fig, Path(path))


def render_figures(
    run_dir,
    history: tuple[IterationRecord, ...],
    affinity: np.ndarray,
    coefficients: np.ndarray,
) -> list[Path]:
    """Render the standard report figures into ``run_dir``."""
    run_dir = Path(run_dir)
    out = []
    if history:
        out.append(convergence_figure(history, run_dir / "convergence.png"))
    out.append(matrix_figure(affinity, run_dir / "affinity.png", "affinity"))
    out.append(
        matrix_figure(
            np.abs(coefficients), run_dir / "coefficients.png", "|W|"
        )
    )
    return out
