"""Blocked significance estimation for J.

The run is cut into equal time blocks, J is computed per block, and the
spread of the block values sets the uncertainty of the total: no Poissonian
counting assumption, no error-propagation rules.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .counting import ReducedCounts, eberhard_j_reduced
from .errors import ParameterError


@dataclass(frozen=True)
class BlockSeries:
    """Per-block J values for one run."""

    block_duration_s: float | None
    j_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.j_values) < 1:
            raise ParameterError("block series must contain at least one block")
        object.__setattr__(self, "j_values", tuple(int(j) for j in self.j_values))


@dataclass(frozen=True)
class SignificanceReport:
    """Total J, its blocked standard deviation, and the violation in sigmas.

    `n_sigma` is None when every block agrees exactly (zero spread): the
    significance is undefined there, not infinite.
    """

    j_total: int
    sigma_total: float
    n_sigma: float | None

    @classmethod
    def from_totals(cls, j_total: int, sigma_total: float) -> "SignificanceReport":
        if sigma_total < 0:
            raise ParameterError(f"sigma_total must be >= 0, got {sigma_total}")
        n_sigma = abs(j_total) / sigma_total if sigma_total > 0 else None
        return cls(j_total=j_total, sigma_total=sigma_total, n_sigma=n_sigma)

    def to_json_dict(self) -> dict:
        return {
            "j_total": self.j_total,
            "sigma_total": self.sigma_total,
            "n_sigma": self.n_sigma,
        }


def blocked_significance(series: BlockSeries) -> SignificanceReport:
    """Significance of the total J from the spread of per-block values.

    With k blocks of sample standard deviation s (k-1 denominator), the total
    is treated as a sum of k i.i.d. contributions: sigma_total = s * sqrt(k).
    """
    k = len(series.j_values)
    if k < 2:
        raise ParameterError(f"need at least 2 blocks to estimate sigma, got {k}")
    j_total = sum(series.j_values)
    mean = j_total / k
    s = math.sqrt(sum((j - mean) ** 2 for j in series.j_values) / (k - 1))
    return SignificanceReport.from_totals(j_total, s * math.sqrt(k))


def blocks_from_counts(blocks: Sequence[ReducedCounts]) -> BlockSeries:
    """J per block from a list of per-block count tables."""
    if not blocks:
        raise ParameterError("blocks_from_counts needs a non-empty block list")
    return BlockSeries(
        block_duration_s=blocks[0].duration_s,
        j_values=tuple(eberhard_j_reduced(b) for b in blocks),
    )


BLOCK_CSV_COLUMNS = (
    "block_index",
    "c_oo_11",
    "s_a_1",
    "c_oo_12",
    "s_b_1",
    "c_oo_21",
    "c_oo_22",
    "j",
)


def write_block_csv(blocks: Sequence[ReducedCounts], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BLOCK_CSV_COLUMNS)
        for index, b in enumerate(blocks):
            writer.writerow(
                [
                    index,
                    b.c_oo_11,
                    b.s_a_1,
                    b.c_oo_12,
                    b.s_b_1,
                    b.c_oo_21,
                    b.c_oo_22,
                    eberhard_j_reduced(b),
                ]
            )


def read_block_csv(path: str | Path) -> list[ReducedCounts]:
    blocks = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            blocks.append(
                ReducedCounts(
                    c_oo_11=int(row["c_oo_11"]),
                    s_a_1=int(row["s_a_1"]),
                    c_oo_12=int(row["c_oo_12"]),
                    s_b_1=int(row["s_b_1"]),
                    c_oo_21=int(row["c_oo_21"]),
                    c_oo_22=int(row["c_oo_22"]),
                )
            )
    return blocks
