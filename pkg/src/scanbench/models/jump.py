"""Saccade-length jump models: saliency times a radial jump kernel.

The next-fixation density is proportional to ``s(y)**beta * k(r / scale)``
where ``s`` is a per-image saliency grid, ``r`` the pixel distance from
the current fixation to a candidate cell center, and ``k`` either a
heavy-tailed Cauchy profile ``(1 + r**2) ** -1.5`` (the bivariate Cauchy
density shape) or a Gaussian ``exp(-r**2 / 2)``.  Without a saliency grid
the model reduces to a pure random flight; with ``beta`` of 0 the
saliency has no influence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    Fixation,
    PriorityMap,
    StimulusMeta,
    cell_centers_px,
    probability_map,
)
from .base import ConditionalModel

KERNELS = ("cauchy", "gaussian")

#: Saliency values are floored at this fraction of the grid maximum
#: before exponentiation, so zero-saliency cells stay reachable and
#: negative exponents stay finite.
SALIENCY_FLOOR_FRACTION = 1e-9


@dataclass(frozen=True)
class JumpModelParams:
    kernel: str = "cauchy"
    scale_px: float = 100.0
    saliency_exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not (self.scale_px > 0 and math.isfinite(self.scale_px)):
            raise ValueError("scale_px must be positive and finite")
        if not (self.saliency_exponent >= 0 and math.isfinite(self.saliency_exponent)):
            raise ValueError("saliency_exponent must be non-negative")


def radial_kernel_grid(
    kernel: str,
    scale_px: float,
    current: Fixation,
    meta: StimulusMeta,
    downsample: int = 1,
) -> np.ndarray:
    """Unnormalized kernel values at every cell center.

    Values depend on the cell's pixel distance to ``current`` only, so
    cells equidistant from the current fixation get identical values.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    ys, xs = cell_centers_px(meta, downsample)
    r2 = ((ys - current.y_px)[:, None] ** 2 + (xs - current.x_px)[None, :] ** 2)
    r2 = r2 / (scale_px * scale_px)
    if kernel == "cauchy":
        return (1.0 + r2) ** -1.5
    return np.exp(-0.5 * r2)


def floored_saliency(values: np.ndarray) -> np.ndarray:
    """Clip a saliency grid from below at a fraction of its maximum."""
    arr = np.asarray(values, dtype=np.float64)
    top = float(arr.max())
    if top <= 0:
        raise ValueError("saliency grid must contain positive values")
    return np.maximum(arr, SALIENCY_FLOOR_FRACTION * top)


def jump_model_map(
    params: JumpModelParams,
    current: Fixation,
    meta: StimulusMeta,
    downsample: int = 1,
    saliency: np.ndarray | None = None,
) -> PriorityMap:
    """Normalized next-fixation density given the current fixation."""
    kernel = radial_kernel_grid(
        params.kernel, params.scale_px, current, meta, downsample
    )
    if saliency is None:
        weighted = kernel
    else:
        sal = floored_saliency(saliency)
        if sal.shape != kernel.shape:
            raise ValueError(
                f"saliency shape {sal.shape} does not match grid {kernel.shape}"
            )
        weighted = sal ** params.saliency_exponent * kernel
    return probability_map(weighted, downsample)


@dataclass(frozen=True)
class _JumpState:
    meta: StimulusMeta
    current: Fixation
    saliency: np.ndarray | None


class JumpModel(ConditionalModel):
    """Conditional model wrapper around :func:`jump_model_map`.

    ``saliency_store`` is an object with ``grid_for(meta, downsample)``;
    pass None for a saliency-free flight.
    """

    probabilistic = True
    dependency_order = 1

    def __init__(
        self,
        params: JumpModelParams,
        saliency_store=None,
        downsample: int = 1,
    ):
        self.params = params
        self.saliency_store = saliency_store
        self.downsample = int(downsample)

    def initialize(
        self,
        meta: StimulusMeta,
        first_fixation: Fixation,
        subject_id: str | None = None,
    ) -> _JumpState:
        saliency = None
        if self.saliency_store is not None:
            saliency = self.saliency_store.grid_for(meta, self.downsample)
        return _JumpState(meta, first_fixation, saliency)

    def update_state(self, state: _JumpState, fixation: Fixation) -> _JumpState:
        return _JumpState(state.meta, fixation, state.saliency)

    def compute_priority_map(self, state: _JumpState) -> PriorityMap:
        return jump_model_map(
            self.params,
            state.current,
            state.meta,
            self.downsample,
            state.saliency,
        )


class _JumpObjective:
    """Mean bits per scored fixation, vectorized over saccade pairs.

    Squared cell distances from each conditioning fixation are
    precomputed once (float32, one row per scored fixation), so each
    objective evaluation is a few dense array passes.
    """

    def __init__(self, dataset, kernel: str, downsample: int, saliency_store):
        from ..core import cell_centers_px, grid_shape

        self.kernel = kernel
        self.groups = []
        for image_id in dataset.image_ids:
            meta = dataset.stimuli[image_id]
            shape = grid_shape(meta, downsample)
            ys, xs = cell_centers_px(meta, downsample)
            prev, cells = [], []
            for sp in dataset.scanpaths_for_image(image_id):
                for a, b in zip(sp.fixations[:-1], sp.fixations[1:]):
                    row = int(b.y_px // downsample)
                    col = int(b.x_px // downsample)
                    if not (0 <= row < shape[0] and 0 <= col < shape[1]):
                        raise ValueError(f"fixation outside grid on {image_id!r}")
                    prev.append((a.x_px, a.y_px))
                    cells.append(row * shape[1] + col)
            if not prev:
                continue
            prev = np.asarray(prev)
            d2 = (
                (ys[None, :] - prev[:, 1][:, None]) ** 2
            )[:, :, None] + ((xs[None, :] - prev[:, 0][:, None]) ** 2)[:, None, :]
            saliency = None
            if saliency_store is not None:
                saliency = floored_saliency(
                    saliency_store.grid_for(meta, downsample)
                ).ravel()
            self.groups.append(
                {
                    "d2": d2.reshape(len(prev), -1).astype(np.float32),
                    "cells": np.asarray(cells),
                    "saliency": saliency,
                    "log2_cells": math.log2(shape[0] * shape[1]),
                }
            )
        if not self.groups:
            raise ValueError("no consecutive fixation pairs to fit on")

    def bits(self, scale_px: float, exponent: float) -> float:
        total = 0.0
        count = 0
        for group in self.groups:
            r2 = group["d2"].astype(np.float64) / (scale_px * scale_px)
            if self.kernel == "cauchy":
                weights = (1.0 + r2) ** -1.5
            else:
                weights = np.exp(-0.5 * r2)
            if group["saliency"] is not None:
                weights = weights * group["saliency"] ** exponent
            rows = np.arange(len(weights))
            p = weights[rows, group["cells"]] / weights.sum(axis=1)
            total += float(
                np.sum(np.log2(np.maximum(p, 1e-300)) + group["log2_cells"])
            )
            count += len(rows)
        return total / count


def fit_jump_model(
    dataset,
    kernel: str = "cauchy",
    downsample: int = 1,
    saliency_store=None,
    split: str = "train_all",
    max_cycles: int = 50,
):
    """Maximum-likelihood kernel scale (and saliency exponent, when a
    saliency store is given).  Returns (params, fit result)."""
    from ..fitting import FitSpec, maximize

    objective = _JumpObjective(dataset, kernel, downsample, saliency_store)
    max_dim = max(
        max(m.width_px, m.height_px) for m in dataset.stimuli.values()
    )
    lengths = [
        math.hypot(b.x_px - a.x_px, b.y_px - a.y_px)
        for sp in dataset.scanpaths
        for a, b in zip(sp.fixations[:-1], sp.fixations[1:])
    ]
    median_len = float(np.median([l for l in lengths if l > 0] or [max_dim / 8]))
    lo, hi = math.log(1.0), math.log(4.0 * max_dim)
    start = min(max(math.log(median_len), lo), hi)

    if saliency_store is None:
        spec = FitSpec(
            names=("log_scale_px",),
            lower=(lo,),
            upper=(hi,),
            initial=(start,),
            objective=lambda t: objective.bits(math.exp(t[0]), 0.0),
            split=split,
        )
        result = maximize(spec, max_cycles=max_cycles)
        exponent = 0.0
    else:
        spec = FitSpec(
            names=("log_scale_px", "saliency_exponent"),
            lower=(lo, 0.0),
            upper=(hi, 4.0),
            initial=(start, 1.0),
            objective=lambda t: objective.bits(math.exp(t[0]), t[1]),
            split=split,
        )
        result = maximize(spec, max_cycles=max_cycles)
        exponent = result.parameters["saliency_exponent"]
    params = JumpModelParams(
        kernel=kernel,
        scale_px=math.exp(result.parameters["log_scale_px"]),
        saliency_exponent=exponent,
    )
    return params, result
