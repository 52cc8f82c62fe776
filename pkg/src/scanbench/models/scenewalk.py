"""Attention and inhibition-of-return dynamics over a saliency map.

Two fields live on the grid.  The attention field relaxes toward the
saliency map weighted by a broad Gaussian around the current fixation;
the inhibition field relaxes toward a narrower Gaussian at the same spot
but with a slower time constant, so recently fixated locations stay
suppressed after attention has moved on.  Both relaxations are
exponential in the fixation duration:

    field <- target + exp(-duration / tau) * (field - target)

The emitted priority is the rectified difference of the two normalized,
exponentiated fields, mixed with a small uniform floor and renormalized.

Parameters
----------
sigma_attention_dva, sigma_inhibition_dva
    Widths of the attention and inhibition Gaussians, in degrees of
    visual angle.  Inhibition must cover a smaller area than attention.
tau_attention_ms, tau_inhibition_ms
    Relaxation time constants.  Inhibition must decay more slowly.
inhibition_strength
    Weight of the inhibition field in the subtractive combination.
exponent
    Shared power applied to both fields before normalization.
uniform_floor
    Mass of the uniform component mixed into the final map.
default_duration_ms
    Used whenever a fixation carries no duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    Fixation,
    MissingSaliencyError,
    PriorityMap,
    StimulusMeta,
    cell_centers_px,
    grid_shape,
)
from .base import ConditionalModel


@dataclass(frozen=True)
class SceneWalkParams:
    sigma_attention_dva: float = 6.0
    sigma_inhibition_dva: float = 2.0
    tau_attention_ms: float = 300.0
    tau_inhibition_ms: float = 1600.0
    inhibition_strength: float = 0.3
    exponent: float = 1.0
    uniform_floor: float = 0.01
    default_duration_ms: float = 250.0

    def __post_init__(self) -> None:
        if not (0 < self.sigma_inhibition_dva < self.sigma_attention_dva):
            raise ValueError(
                "need 0 < sigma_inhibition_dva < sigma_attention_dva"
            )
        if not (0 < self.tau_attention_ms < self.tau_inhibition_ms):
            raise ValueError("need 0 < tau_attention_ms < tau_inhibition_ms")
        if self.inhibition_strength < 0:
            raise ValueError("inhibition_strength must be non-negative")
        if not (self.exponent > 0 and math.isfinite(self.exponent)):
            raise ValueError("exponent must be positive")
        if not (0 <= self.uniform_floor < 1):
            raise ValueError("uniform_floor must lie in [0, 1)")
        if self.default_duration_ms <= 0:
            raise ValueError("default_duration_ms must be positive")


@dataclass(frozen=True)
class _SceneWalkState:
    meta: StimulusMeta
    saliency: np.ndarray
    attention: np.ndarray
    inhibition: np.ndarray


def _grid_gaussian(
    center: Fixation, sigma_px: float, meta: StimulusMeta, downsample: int
) -> np.ndarray:
    """Gaussian bump at the fixation, normalized to unit mass on the grid."""
    ys, xs = cell_centers_px(meta, downsample)
    gy = np.exp(-0.5 * ((ys - center.y_px) / sigma_px) ** 2)
    gx = np.exp(-0.5 * ((xs - center.x_px) / sigma_px) ** 2)
    bump = gy[:, None] * gx[None, :]
    total = bump.sum()
    if total <= 0:
        # Far-off-grid underflow; fall back to mass at the nearest cell.
        bump = np.zeros((len(ys), len(xs)))
        row = int(np.argmin(np.abs(ys - center.y_px)))
        col = int(np.argmin(np.abs(xs - center.x_px)))
        bump[row, col] = 1.0
        return bump
    return bump / total


def _relax(field: np.ndarray, target: np.ndarray, duration_ms: float,
           tau_ms: float) -> np.ndarray:
    return target + math.exp(-duration_ms / tau_ms) * (field - target)


class SceneWalkModel(ConditionalModel):
    """Conditional model with attention and inhibition field state."""

    probabilistic = True
    dependency_order = math.inf

    def __init__(
        self,
        params: SceneWalkParams,
        saliency_store,
        downsample: int = 1,
    ):
        if saliency_store is None:
            raise MissingSaliencyError(
                "this model needs per-image saliency maps"
            )
        self.params = params
        self.saliency_store = saliency_store
        self.downsample = int(downsample)

    def _duration(self, fixation: Fixation) -> float:
        if fixation.duration_ms is None:
            return self.params.default_duration_ms
        return fixation.duration_ms

    def initialize(
        self,
        meta: StimulusMeta,
        first_fixation: Fixation,
        subject_id: str | None = None,
    ) -> _SceneWalkState:
        saliency = np.asarray(
            self.saliency_store.grid_for(meta, self.downsample), dtype=np.float64
        )
        total = float(saliency.sum())
        if total <= 0:
            raise ValueError(
                f"saliency grid for {meta.image_id!r} has no positive mass"
            )
        saliency = saliency / total
        shape = grid_shape(meta, self.downsample)
        flat = np.full(shape, 1.0 / (shape[0] * shape[1]))
        state = _SceneWalkState(meta, saliency, flat, flat.copy())
        return self._advance(state, first_fixation)

    def _advance(
        self, state: _SceneWalkState, fixation: Fixation
    ) -> _SceneWalkState:
        p = self.params
        meta = state.meta
        duration = self._duration(fixation)
        sigma_att = p.sigma_attention_dva * meta.px_per_dva
        sigma_inh = p.sigma_inhibition_dva * meta.px_per_dva

        att_target = state.saliency * _grid_gaussian(
            fixation, sigma_att, meta, self.downsample
        )
        att_total = att_target.sum()
        if att_total <= 0:
            att_target = np.full_like(state.saliency, 1.0 / state.saliency.size)
        else:
            att_target = att_target / att_total
        inh_target = _grid_gaussian(fixation, sigma_inh, meta, self.downsample)

        attention = _relax(state.attention, att_target, duration, p.tau_attention_ms)
        inhibition = _relax(
            state.inhibition, inh_target, duration, p.tau_inhibition_ms
        )
        return _SceneWalkState(meta, state.saliency, attention, inhibition)

    def update_state(
        self, state: _SceneWalkState, fixation: Fixation
    ) -> _SceneWalkState:
        return self._advance(state, fixation)

    def compute_priority_map(self, state: _SceneWalkState) -> PriorityMap:
        p = self.params
        att = np.maximum(state.attention, 0.0) ** p.exponent
        inh = np.maximum(state.inhibition, 0.0) ** p.exponent
        att_sum = att.sum()
        inh_sum = inh.sum()
        att = att / att_sum if att_sum > 0 else np.full_like(att, 1.0 / att.size)
        inh = inh / inh_sum if inh_sum > 0 else np.full_like(inh, 1.0 / inh.size)
        u = att - p.inhibition_strength * inh
        np.maximum(u, 0.0, out=u)
        total = u.sum()
        if total > 0:
            u = u / total
        else:
            u = np.full_like(u, 1.0 / u.size)
        n = u.size
        values = (1.0 - p.uniform_floor) * u + p.uniform_floor / n
        return PriorityMap(values, "probability", self.downsample)


def _params_from_vector(theta: dict[str, float]) -> SceneWalkParams:
    sigma_att = math.exp(theta["log_sigma_attention_dva"])
    tau_inh = math.exp(theta["log_tau_inhibition_ms"])
    return SceneWalkParams(
        sigma_attention_dva=sigma_att,
        sigma_inhibition_dva=theta["inhibition_sigma_fraction"] * sigma_att,
        tau_attention_ms=theta["attention_tau_fraction"] * tau_inh,
        tau_inhibition_ms=tau_inh,
        inhibition_strength=theta["inhibition_strength"],
    )


def fit_scenewalk(
    dataset,
    saliency_store,
    downsample: int = 1,
    split: str = "train_all",
    max_cycles: int = 12,
):
    """Fit field widths, time constants and inhibition strength by
    maximizing mean log-likelihood gain (bits per scored fixation).

    Ratio parameterization keeps the ordering constraints (inhibition
    narrower than attention, attention faster than inhibition) as simple
    box bounds.  Returns (params, fit result).
    """
    from ..fitting import FitSpec, maximize

    names = (
        "log_sigma_attention_dva",
        "inhibition_sigma_fraction",
        "log_tau_inhibition_ms",
        "attention_tau_fraction",
        "inhibition_strength",
    )
    lower = (math.log(0.5), 0.05, math.log(50.0), 0.05, 0.0)
    upper = (math.log(20.0), 0.95, math.log(10000.0), 0.95, 2.0)
    initial = (math.log(6.0), 1.0 / 3.0, math.log(1600.0), 300.0 / 1600.0, 0.3)

    def objective(theta: tuple[float, ...]) -> float:
        params = _params_from_vector(dict(zip(names, theta)))
        model = SceneWalkModel(params, saliency_store, downsample)
        total = 0.0
        count = 0
        for sp in dataset.scanpaths:
            meta = dataset.stimuli[sp.image_id]
            state = model.initialize(meta, sp.fixations[0], sp.subject_id)
            for fixation in sp.fixations[1:]:
                pmap = model.compute_priority_map(state)
                p = pmap.value_at(fixation)
                total += math.log2(max(p, 1e-300)) + math.log2(pmap.n_cells)
                count += 1
                state = model.update_state(state, fixation)
        if count == 0:
            raise ValueError("no scored fixations to fit on")
        return total / count

    spec = FitSpec(
        names=names,
        lower=lower,
        upper=upper,
        initial=initial,
        objective=objective,
        split=split,
    )
    result = maximize(spec, max_cycles=max_cycles)
    return _params_from_vector(result.parameters), result
