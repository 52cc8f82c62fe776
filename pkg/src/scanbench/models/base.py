"""Interface for conditional scanpath models and the replay helpers.

A conditional model turns a stimulus and a fixation history into a
priority map for the next fixation.  State is built once from the first
fixation and advanced one fixation at a time, so a scanpath of length n
costs n state updates rather than n replays.  ``dependency_order`` is the
number of most recent fixations the emitted map can depend on
(``math.inf`` for models with unbounded memory).
"""

from __future__ import annotations

import abc
import math
from typing import Any, Sequence

import numpy as np

from ..core import (
    Fixation,
    OutOfBoundsError,
    PriorityMap,
    Scanpath,
    StimulusMeta,
    central_fixation,
    grid_shape,
    in_bounds,
    uniform_map,
)


class ConditionalModel(abc.ABC):
    """Predicts a priority map for the next fixation given the history."""

    #: Whether emitted maps are probability distributions over cells.
    probabilistic: bool = True
    #: How many trailing history fixations the map can depend on.
    dependency_order: float = math.inf

    @abc.abstractmethod
    def initialize(
        self,
        meta: StimulusMeta,
        first_fixation: Fixation,
        subject_id: str | None = None,
    ) -> Any:
        """State after observing the initial fixation.

        ``subject_id`` identifies whose scanpath is being predicted;
        population models that pool other observers' data use it to
        exclude that observer, everything else ignores it.
        """

    @abc.abstractmethod
    def update_state(self, state: Any, fixation: Fixation) -> Any:
        """State after one more observed fixation."""

    @abc.abstractmethod
    def compute_priority_map(self, state: Any) -> PriorityMap:
        """Map for the next fixation; pure in the state."""

    def sample_fixation(
        self, pmap: PriorityMap, rng: np.random.Generator
    ) -> Fixation:
        """Draw the next fixation from a priority map.

        Probabilistic models sample a cell from the normalized map;
        others take the argmax cell, first occurrence in row-major order.
        Either way the fixation lands on the cell center.
        """
        if self.probabilistic:
            return sample_from_map(pmap, rng)
        return argmax_fixation(pmap)


def _cell_center_fixation(pmap: PriorityMap, row: int, col: int) -> Fixation:
    ds = pmap.downsample_factor
    return Fixation((col + 0.5) * ds, (row + 0.5) * ds)


def sample_from_map(pmap: PriorityMap, rng: np.random.Generator) -> Fixation:
    """Multinomial draw of a cell, returned as its center position."""
    flat = pmap.values.ravel()
    total = float(flat.sum())
    if total <= 0:
        raise ValueError("cannot sample from a zero-mass map")
    idx = int(rng.choice(flat.size, p=flat / total))
    row, col = divmod(idx, pmap.width)
    return _cell_center_fixation(pmap, row, col)


def argmax_fixation(pmap: PriorityMap) -> Fixation:
    """Center of the highest-valued cell, first in row-major order."""
    idx = int(np.argmax(pmap.values))
    row, col = divmod(idx, pmap.width)
    return _cell_center_fixation(pmap, row, col)


def conditional_prediction(
    model: ConditionalModel,
    meta: StimulusMeta,
    history: Sequence[Fixation],
    subject_id: str | None = None,
) -> PriorityMap:
    """Map for the fixation following ``history`` on this stimulus.

    The history must be non-empty; its first fixation seeds the state and
    the rest are replayed in order.
    """
    if len(history) == 0:
        raise ValueError("history must contain at least the initial fixation")
    for i, fix in enumerate(history):
        if not in_bounds(fix, meta):
            raise OutOfBoundsError(
                f"history fixation {i} at ({fix.x_px}, {fix.y_px}) is outside "
                f"stimulus {meta.image_id!r}"
            )
    state = model.initialize(meta, history[0], subject_id=subject_id)
    for fix in history[1:]:
        state = model.update_state(state, fix)
    return model.compute_priority_map(state)


def sample_scanpath(
    model: ConditionalModel,
    meta: StimulusMeta,
    n_fixations: int,
    rng: np.random.Generator,
    subject_id: str = "model",
) -> Scanpath:
    """Roll out a scanpath starting from the forced central fixation."""
    if n_fixations < 1:
        raise ValueError("n_fixations must be >= 1")
    start = central_fixation(meta)
    fixations = [start]
    state = model.initialize(meta, start, subject_id=subject_id)
    for _ in range(n_fixations - 1):
        pmap = model.compute_priority_map(state)
        fix = model.sample_fixation(pmap, rng)
        fixations.append(fix)
        state = model.update_state(state, fix)
    return Scanpath(meta.image_id, subject_id, tuple(fixations), forced_initial=True)


class UniformModel(ConditionalModel):
    """History-blind chance model; every cell is equally likely."""

    probabilistic = True
    dependency_order = 0

    def __init__(self, downsample: int = 1):
        self.downsample = int(downsample)

    def initialize(
        self,
        meta: StimulusMeta,
        first_fixation: Fixation,
        subject_id: str | None = None,
    ) -> StimulusMeta:
        return meta

    def update_state(self, state: StimulusMeta, fixation: Fixation) -> StimulusMeta:
        return state

    def compute_priority_map(self, state: StimulusMeta) -> PriorityMap:
        return uniform_map(grid_shape(state, self.downsample), self.downsample)
