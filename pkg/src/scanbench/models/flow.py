"""Image-independent saccade flow: position-dependent Gaussian jumps.

The next fixation is Gaussian-distributed around the current fixation
plus a mean offset, where the mean offset and the log-variances are
degree-2 polynomials in the current position normalized to the unit
square.  The correlation between the two jump axes is a constant.  The
model never looks at image content, so a single parameter set applies to
every stimulus.

Positions are normalized as ``u = x / width``, ``v = y / height``; mean
offsets and standard deviations live in those normalized units.
Polynomial coefficients are ordered ``(1, u, v, u*u, u*v, v*v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    DegenerateMapError,
    Fixation,
    PriorityMap,
    StimulusMeta,
    cell_centers_px,
    probability_map,
)
from .base import ConditionalModel

#: Number of coefficients of a degree-2 polynomial in (u, v).
N_POLY_TERMS = 6

#: Additive bias of log(residual**2) as an estimator of log-variance for
#: Gaussian residuals: E[log chi2_1] = digamma(1/2) + log 2.
_LOG_CHI2_BIAS = -1.2703628454614782


def poly_features(u: float | np.ndarray, v: float | np.ndarray) -> np.ndarray:
    """Degree-2 polynomial basis at normalized position(s)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return np.stack(
        [np.ones_like(u), u, v, u * u, u * v, v * v], axis=-1
    )


@dataclass(frozen=True)
class SaccadicFlowParams:
    mean_x: tuple[float, ...]
    mean_y: tuple[float, ...]
    log_var_x: tuple[float, ...]
    log_var_y: tuple[float, ...]
    corr: float = 0.0

    def __post_init__(self) -> None:
        for name in ("mean_x", "mean_y", "log_var_x", "log_var_y"):
            coeffs = tuple(float(c) for c in getattr(self, name))
            if len(coeffs) != N_POLY_TERMS:
                raise ValueError(f"{name} needs {N_POLY_TERMS} coefficients")
            if not all(math.isfinite(c) for c in coeffs):
                raise ValueError(f"{name} coefficients must be finite")
            object.__setattr__(self, name, coeffs)
        if not (-1.0 < self.corr < 1.0):
            raise ValueError("corr must lie strictly inside (-1, 1)")


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def saccadic_flow_map(
    params: SaccadicFlowParams,
    current: Fixation,
    meta: StimulusMeta,
    downsample: int = 1,
) -> PriorityMap:
    """Normalized next-fixation density for the current position."""
    u = current.x_px / meta.width_px
    v = current.y_px / meta.height_px
    phi = poly_features(u, v)
    mu_u = u + float(phi @ np.asarray(params.mean_x))
    mu_v = v + float(phi @ np.asarray(params.mean_y))
    sigma_u = _exp_or_inf(0.5 * float(phi @ np.asarray(params.log_var_x)))
    sigma_v = _exp_or_inf(0.5 * float(phi @ np.asarray(params.log_var_y)))
    rho = params.corr
    if not (
        math.isfinite(sigma_u) and math.isfinite(sigma_v)
        and sigma_u > 0 and sigma_v > 0
    ):
        raise DegenerateMapError(
            f"jump covariance degenerate at ({u:.3f}, {v:.3f}): "
            f"sigma=({sigma_u}, {sigma_v})"
        )

    ys, xs = cell_centers_px(meta, downsample)
    du = (xs / meta.width_px - mu_u) / sigma_u
    dv = (ys / meta.height_px - mu_v) / sigma_v
    # Quadratic form of the correlated bivariate Gaussian on the grid.
    quad = (
        du[None, :] ** 2
        - 2.0 * rho * dv[:, None] * du[None, :]
        + dv[:, None] ** 2
    ) / (1.0 - rho * rho)
    density = np.exp(-0.5 * quad)
    total = float(density.sum())
    if total <= 0:
        raise DegenerateMapError(
            "jump density underflowed everywhere on the grid"
        )
    return probability_map(density, downsample)


@dataclass(frozen=True)
class _FlowState:
    meta: StimulusMeta
    current: Fixation


class SaccadicFlowModel(ConditionalModel):
    probabilistic = True
    dependency_order = 1

    def __init__(self, params: SaccadicFlowParams, downsample: int = 1):
        self.params = params
        self.downsample = int(downsample)

    def initialize(
        self,
        meta: StimulusMeta,
        first_fixation: Fixation,
        subject_id: str | None = None,
    ) -> _FlowState:
        return _FlowState(meta, first_fixation)

    def update_state(self, state: _FlowState, fixation: Fixation) -> _FlowState:
        return _FlowState(state.meta, fixation)

    def compute_priority_map(self, state: _FlowState) -> PriorityMap:
        return saccadic_flow_map(
            self.params, state.current, state.meta, self.downsample
        )


def fit_saccadic_flow(
    prev_uv: np.ndarray, next_uv: np.ndarray
) -> SaccadicFlowParams:
    """Least-squares fit from observed (previous, next) normalized pairs.

    The mean-offset polynomials are the exact Gaussian maximum-likelihood
    solution under position-independent variance; the log-variance
    polynomials are fitted on log squared residuals with the chi-square
    bias removed from the constant term, and the correlation is the
    sample correlation of the standardized residuals.
    """
    prev_uv = np.asarray(prev_uv, dtype=np.float64)
    next_uv = np.asarray(next_uv, dtype=np.float64)
    if prev_uv.shape != next_uv.shape or prev_uv.ndim != 2 or prev_uv.shape[1] != 2:
        raise ValueError("expected matching (n, 2) arrays of normalized positions")
    if len(prev_uv) < N_POLY_TERMS + 1:
        raise ValueError("not enough saccades to constrain the polynomials")
    phi = poly_features(prev_uv[:, 0], prev_uv[:, 1])
    offsets = next_uv - prev_uv

    mean_coeffs = []
    residuals = []
    for axis in range(2):
        coeffs, *_ = np.linalg.lstsq(phi, offsets[:, axis], rcond=None)
        mean_coeffs.append(tuple(coeffs))
        residuals.append(offsets[:, axis] - phi @ coeffs)

    log_var_coeffs = []
    stddevs = []
    for axis in range(2):
        target = np.log(residuals[axis] ** 2 + 1e-300) - _LOG_CHI2_BIAS
        coeffs, *_ = np.linalg.lstsq(phi, target, rcond=None)
        log_var_coeffs.append(tuple(coeffs))
        stddevs.append(np.exp(0.5 * (phi @ coeffs)))

    zx = residuals[0] / stddevs[0]
    zy = residuals[1] / stddevs[1]
    corr = float(np.corrcoef(zx, zy)[0, 1])
    corr = max(-0.999, min(0.999, corr))
    return SaccadicFlowParams(
        mean_x=mean_coeffs[0],
        mean_y=mean_coeffs[1],
        log_var_x=log_var_coeffs[0],
        log_var_y=log_var_coeffs[1],
        corr=corr,
    )


def saccade_pairs_normalized(dataset) -> tuple[np.ndarray, np.ndarray]:
    """All consecutive fixation pairs of a dataset in normalized units."""
    prev_uv = []
    next_uv = []
    for sp in dataset.scanpaths:
        meta = dataset.stimuli[sp.image_id]
        for a, b in zip(sp.fixations[:-1], sp.fixations[1:]):
            prev_uv.append((a.x_px / meta.width_px, a.y_px / meta.height_px))
            next_uv.append((b.x_px / meta.width_px, b.y_px / meta.height_px))
    return np.asarray(prev_uv), np.asarray(next_uv)


def flow_mean_bits(dataset, params: SaccadicFlowParams, downsample: int = 1) -> float:
    """Mean log-likelihood gain over uniform, in bits per scored fixation."""
    total = 0.0
    count = 0
    for sp in dataset.scanpaths:
        meta = dataset.stimuli[sp.image_id]
        for a, b in zip(sp.fixations[:-1], sp.fixations[1:]):
            pmap = saccadic_flow_map(params, a, meta, downsample)
            p = pmap.value_at(b)
            total += math.log2(max(p, 1e-300)) + math.log2(pmap.n_cells)
            count += 1
    if count == 0:
        raise ValueError("no consecutive fixation pairs to score")
    return total / count
