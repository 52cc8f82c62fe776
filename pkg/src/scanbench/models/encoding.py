"""Turning point predictions into probability maps.

Models that output a single predicted location rather than a density are
scored by placing an isotropic Gaussian on the prediction, truncated to
the stimulus and renormalized.  The width is a free parameter in degrees
of visual angle; :func:`fit_sigma_nss` picks it from a fixed logarithmic
grid by maximizing the mean standardized value at the true fixations.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import Fixation, PriorityMap, StimulusMeta, cell_centers_px, probability_map
from ..metrics import nss

#: Default Gaussian width for point predictions.
DEFAULT_POINT_SIGMA_DVA = 9.0

#: Candidate widths searched by :func:`fit_sigma_nss`.
SIGMA_GRID_DVA = tuple(np.geomspace(0.5, 20.0, 25))


def point_to_map(
    location: Fixation,
    meta: StimulusMeta,
    sigma_dva: float = DEFAULT_POINT_SIGMA_DVA,
    downsample: int = 1,
) -> PriorityMap:
    """Truncated, renormalized Gaussian centered on a predicted point."""
    if not sigma_dva > 0:
        raise ValueError("sigma_dva must be positive")
    sigma_px = sigma_dva * meta.px_per_dva
    ys, xs = cell_centers_px(meta, downsample)
    gy = np.exp(-0.5 * ((ys - location.y_px) / sigma_px) ** 2)
    gx = np.exp(-0.5 * ((xs - location.x_px) / sigma_px) ** 2)
    return probability_map(gy[:, None] * gx[None, :], downsample)


def fit_sigma_nss(
    predictions: Sequence[Fixation],
    truths: Sequence[Fixation],
    meta: StimulusMeta,
    downsample: int = 1,
    sigma_grid_dva: Sequence[float] = SIGMA_GRID_DVA,
) -> float:
    """Width from the grid that maximizes the mean standardized score.

    ``predictions[i]`` is scored against ``truths[i]``.  On exact ties
    the smallest width wins.
    """
    if len(predictions) != len(truths) or len(predictions) == 0:
        raise ValueError("need equally many, and at least one, prediction/truth")
    means = []
    for sigma in sigma_grid_dva:
        values = [
            nss(point_to_map(pred, meta, sigma, downsample), truth)
            for pred, truth in zip(predictions, truths)
        ]
        means.append(float(np.mean(values)))
    return float(sigma_grid_dva[int(np.argmax(means))])
