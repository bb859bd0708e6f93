"""Matplotlib rendering of analysis results to image files."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_block_j_figure(
    j_values: Sequence[int],
    path: str | Path,
    block_duration_s: float | None = None,
) -> Path:
    """Plot J per block with the local-realism bound at zero."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    indices = range(len(j_values))
    ax.bar(indices, j_values, color="#31688e", width=0.8)
    ax.axhline(0.0, color="black", linewidth=1.0)
    ax.set_xlabel(
        "block index" if block_duration_s is None else f"block index ({block_duration_s:g} s each)"
    )
    ax.set_ylabel("J per block")
    ax.set_title(f"total J = {sum(j_values)}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_threshold_curve_figure(
    etas: Sequence[float],
    jn_values: Sequence[float],
    threshold: float,
    path: str | Path,
) -> Path:
    """Plot the optimized J/N against symmetric arm efficiency."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(etas, jn_values, marker="o", color="#31688e")
    ax.axhline(0.0, color="black", linewidth=1.0)
    ax.axvline(threshold, color="#b40426", linestyle="--", label=f"threshold {threshold:.4f}")
    ax.set_xlabel("symmetric arm efficiency")
    ax.set_ylabel("optimized J/N")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
