"""Per-fixation scores on conditional priority maps, and their aggregation.

All information measures use base-2 logarithms, so scores are in bits.
``log_likelihood`` is expressed relative to the uniform distribution over
grid cells: a model that is no better than chance scores 0.  Before taking
logs, cell probabilities are floored at 2**-32 and the map is renormalized
if the floor changed anything; this keeps scores finite without measurably
moving well-behaved maps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DegenerateMapError,
    Fixation,
    GeometryMismatchError,
    PriorityMap,
)

#: Probability floor applied per cell before logarithms.
PROBABILITY_FLOOR = 2.0 ** -32

METRIC_NAMES = ("ll", "ig", "auc", "nss")


@dataclass(frozen=True)
class FixationScore:
    """One metric value for one scored fixation.

    ``fixation_index`` is the position within the scanpath; index 0 is the
    initial fixation, which is conditioning context and never scored, so
    valid indices start at 1.  ``scanpath_index`` is the ordinal of the
    scanpath within its dataset.
    """

    image_id: str
    subject_id: str
    scanpath_index: int
    fixation_index: int
    metric: str
    value: float

    def __post_init__(self) -> None:
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.fixation_index < 1:
            raise ValueError("fixation_index must be >= 1; index 0 is context")
        if self.scanpath_index < 0:
            raise ValueError("scanpath_index must be >= 0")
        if not math.isfinite(self.value):
            raise ValueError("score value must be finite")


def _require_probability(pmap: PriorityMap) -> None:
    if pmap.kind != "probability":
        raise ValueError(f"metric needs a probability map, got {pmap.kind!r}")


def floored_log2_prob(pmap: PriorityMap, fix: Fixation) -> float:
    """log2 of the fixated cell's probability after flooring.

    The floor and its renormalization are skipped entirely when no cell
    lies below the floor, so maps that are already well-behaved are scored
    on their exact values.
    """
    _require_probability(pmap)
    row, col = pmap.cell_of(fix)
    p = float(pmap.values[row, col])
    if float(pmap.values.min()) >= PROBABILITY_FLOOR:
        return math.log2(p)
    floored = np.maximum(pmap.values, PROBABILITY_FLOOR)
    return math.log2(max(p, PROBABILITY_FLOOR)) - math.log2(float(floored.sum()))


def log_likelihood(pmap: PriorityMap, fix: Fixation) -> float:
    """Log-likelihood in bits relative to the uniform map over cells."""
    return floored_log2_prob(pmap, fix) - math.log2(1.0 / pmap.n_cells)


def information_gain(
    pmap: PriorityMap, baseline: PriorityMap, fix: Fixation
) -> float:
    """Bits gained over a baseline probability map at the fixated cell."""
    _require_probability(baseline)
    if not pmap.same_geometry(baseline):
        raise GeometryMismatchError(
            f"model grid {pmap.values.shape}@{pmap.downsample_factor} vs "
            f"baseline {baseline.values.shape}@{baseline.downsample_factor}"
        )
    return floored_log2_prob(pmap, fix) - floored_log2_prob(baseline, fix)


def auc_uniform(pmap: PriorityMap, fix: Fixation) -> float:
    """Rank of the fixated cell's value among all cells, in [0, 1].

    Equivalent to the area under the ROC curve with the single fixated
    cell as the positive and every cell as a nonfixation; ties contribute
    half their count (mid-rank convention).
    """
    value = pmap.value_at(fix)
    less = int(np.count_nonzero(pmap.values < value))
    equal = int(np.count_nonzero(pmap.values == value))
    return (less + 0.5 * equal) / pmap.n_cells


def nss(pmap: PriorityMap, fix: Fixation) -> float:
    """Value at the fixated cell after standardizing the map.

    Standardization uses the population standard deviation over cells.
    """
    sd = float(pmap.values.std())
    if sd == 0.0:
        raise DegenerateMapError("constant map has no normalizable structure")
    return (pmap.value_at(fix) - float(pmap.values.mean())) / sd


def aggregate(scores: Iterable[FixationScore], metric: str) -> float:
    """Mean of per-image means for one metric.

    Every scored fixation counts equally within its image; every image
    counts equally in the final mean.
    """
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    by_image: dict[str, list[float]] = {}
    for score in scores:
        if score.metric == metric:
            by_image.setdefault(score.image_id, []).append(score.value)
    if not by_image:
        raise ValueError(f"no scores for metric {metric!r}")
    image_means = [float(np.mean(vals)) for vals in by_image.values()]
    return float(np.mean(image_means))


def histogram_equalize(pmap: PriorityMap) -> PriorityMap:
    """Replace values by their normalized fractional ranks in [0, 1].

    Ties share the mid-rank, so the equalized value of a cell equals the
    fraction of cells strictly below it plus half the fraction equal to
    it.  Equalization preserves the value ordering exactly, and therefore
    every rank-based score of the map.
    """
    from scipy.stats import rankdata

    ranks = rankdata(pmap.values.ravel(), method="average")
    equalized = (ranks - 0.5) / pmap.n_cells
    return PriorityMap(
        equalized.reshape(pmap.values.shape), "priority", pmap.downsample_factor
    )


SCORE_CSV_HEADER = (
    "image_id",
    "subject_id",
    "scanpath_index",
    "fixation_index",
    "metric",
    "value",
)


def write_scores_csv(scores: Sequence[FixationScore], path: str | Path) -> None:
    """Write scores with full float precision, one row per score."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_CSV_HEADER)
        for s in scores:
            writer.writerow(
                (
                    s.image_id,
                    s.subject_id,
                    s.scanpath_index,
                    s.fixation_index,
                    s.metric,
                    repr(s.value),
                )
            )


def read_scores_csv(path: str | Path) -> list[FixationScore]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SCORE_CSV_HEADER:
            raise ValueError(f"{path}: unexpected score table header {header!r}")
        return [
            FixationScore(
                row[0], row[1], int(row[2]), int(row[3]), row[4], float(row[5])
            )
            for row in reader
        ]
