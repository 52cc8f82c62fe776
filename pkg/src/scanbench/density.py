"""Population density baselines estimated from recorded fixations.

All estimators share one kernel density machine: an equal-weight
isotropic Gaussian mixture over observed fixation positions, evaluated at
cell centers, truncated to the stimulus rectangle and renormalized to
unit mass.  Kernels are cut off beyond five bandwidths per axis, which
changes nothing measurable and keeps the evaluation cheap.

Three baselines build on it.  The center bias pools fixations from every
other image (positions rescaled to the target geometry) and mixes in a
small uniform floor.  The fixation-number center bias does the same
separately for groups of fixation indices, since the spatial bias of
early fixations differs from late ones.  The gold standard predicts a
subject's fixations on an image from the other subjects' fixations on
that same image, mixed with uniform and center-bias components whose
weights, together with the kernel bandwidth, are fitted by maximum
likelihood under leave-one-subject-out evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    Dataset,
    DegenerateMapError,
    PriorityMap,
    Scanpath,
    StimulusMeta,
    cell_centers_px,
    grid_shape,
)
from .fitting import FitSpec, golden_section_max, maximize, softmax_weights
from .models.base import ConditionalModel

#: Kernel cutoff radius per axis, in bandwidths.
TRUNCATE_BANDWIDTHS = 5.0

#: Uniform mixture weight of the center-bias baselines.
CENTER_BIAS_UNIFORM_WEIGHT = 0.01

#: Fallback kernel bandwidth when none has been fitted.
DEFAULT_BANDWIDTH_PX = 35.0

#: Bandwidth search range used by the fitting entry points.
BANDWIDTH_BOUNDS_PX = (0.1, 200.0)

#: Fixation-index groups for two common viewing paradigms: the first
#: schedule splits 1, 2, 3-5, 6 and later; the second is finer.
MIT_INTERVALS = ((1, 1), (2, 2), (3, 5), (6, None))
CAT2000_INTERVALS = (
    (1, 1), (2, 2), (3, 3), (4, 4), (5, 6), (7, 10), (11, 15), (16, None)
)


def bandwidth_px_from_dva(bandwidth_dva: float, meta: StimulusMeta) -> float:
    """Convenience conversion for bandwidths given in visual degrees."""
    return bandwidth_dva * meta.px_per_dva


def _kernel_matrices(
    points: np.ndarray, bandwidth_px: float, meta: StimulusMeta, downsample: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point 1-d Gaussians along y and x at the grid's cell centers."""
    if not (bandwidth_px > 0 and math.isfinite(bandwidth_px)):
        raise ValueError("bandwidth_px must be positive and finite")
    ys, xs = cell_centers_px(meta, downsample)
    dy = ys[None, :] - points[:, 1][:, None]
    dx = xs[None, :] - points[:, 0][:, None]
    inv = 1.0 / (2.0 * bandwidth_px * bandwidth_px)
    cut = TRUNCATE_BANDWIDTHS * bandwidth_px
    gy = np.where(np.abs(dy) > cut, 0.0, np.exp(-dy * dy * inv))
    gx = np.where(np.abs(dx) > cut, 0.0, np.exp(-dx * dx * inv))
    return gy, gx


def gaussian_kde_grid(
    points: Sequence[tuple[float, float]] | np.ndarray,
    bandwidth_px: float,
    meta: StimulusMeta,
    downsample: int = 1,
) -> PriorityMap:
    """Kernel density of fixation positions as a probability map."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("kernel density needs at least one point")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array of x, y positions")
    gy, gx = _kernel_matrices(pts, bandwidth_px, meta, downsample)
    density = gy.T @ gx
    total = float(density.sum())
    if total <= 0:
        raise DegenerateMapError(
            "kernel density underflowed to zero on the whole grid; "
            "the bandwidth is too small for this geometry"
        )
    return PriorityMap(density / total, "probability", downsample)


def _kde_at_cells(
    points: np.ndarray,
    bandwidth_px: float,
    meta: StimulusMeta,
    downsample: int,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    """Grid-normalized kernel density at selected cells, without
    materializing the grid; algebraically identical to reading those
    cells from :func:`gaussian_kde_grid`."""
    gy, gx = _kernel_matrices(points, bandwidth_px, meta, downsample)
    total = float((gy.sum(axis=1) * gx.sum(axis=1)).sum())
    if total <= 0:
        raise DegenerateMapError("kernel density underflowed to zero")
    values = (gy[:, rows] * gx[:, cols]).sum(axis=0)
    return values / total


def fixation_number(sp: Scanpath, index: int) -> int:
    """1-based viewing order of a voluntary fixation.

    The forced initial fixation has no number; the first voluntary
    fixation is number 1 whether or not the scanpath starts forced.
    """
    return index if sp.forced_initial else index + 1


def _rescaled_voluntary_points(
    ds: Dataset,
    target: StimulusMeta,
    exclude_image: str | None,
    interval: tuple[int, int | None] | None = None,
) -> np.ndarray:
    points = []
    for sp in ds.scanpaths:
        if sp.image_id == exclude_image:
            continue
        meta = ds.stimuli[sp.image_id]
        sx = target.width_px / meta.width_px
        sy = target.height_px / meta.height_px
        start = 1 if sp.forced_initial else 0
        for idx in range(start, len(sp.fixations)):
            if interval is not None:
                number = fixation_number(sp, idx)
                lo, hi = interval
                if number < lo or (hi is not None and number > hi):
                    continue
            fix = sp.fixations[idx]
            points.append((fix.x_px * sx, fix.y_px * sy))
    return np.asarray(points, dtype=np.float64).reshape(-1, 2)


@dataclass(frozen=True)
class _GridKeyState:
    meta: StimulusMeta
    extra: object = None


class CenterBias(ConditionalModel):
    """Image-independent spatial bias pooled over all other images."""

    probabilistic = True
    dependency_order = 0

    def __init__(
        self,
        dataset: Dataset,
        bandwidth_px: float = DEFAULT_BANDWIDTH_PX,
        uniform_weight: float = CENTER_BIAS_UNIFORM_WEIGHT,
        downsample: int = 1,
        grid_cache_dir: str | Path | None = None,
    ):
        if not 0 <= uniform_weight < 1:
            raise ValueError("uniform_weight must lie in [0, 1)")
        self.dataset = dataset
        self.bandwidth_px = float(bandwidth_px)
        self.uniform_weight = float(uniform_weight)
        self.downsample = int(downsample)
        self.grid_cache_dir = Path(grid_cache_dir) if grid_cache_dir else None
        self._grids: dict[tuple[str, tuple[int, int]], PriorityMap] = {}

    def grid(self, meta: StimulusMeta) -> PriorityMap:
        key = (meta.image_id, grid_shape(meta, self.downsample))
        cached = self._grids.get(key)
        if cached is None:
            cached = self._build_grid(meta)
            self._grids[key] = cached
        return cached

    def _build_grid(self, meta: StimulusMeta) -> PriorityMap:
        if self.grid_cache_dir is not None:
            path = self.grid_cache_dir / f"{meta.image_id}.smap"
            if path.is_file():
                from .io import read_smap

                return read_smap(path, self.downsample)
        points = _rescaled_voluntary_points(self.dataset, meta, meta.image_id)
        if len(points) == 0:
            raise ValueError(
                "center bias needs fixations on at least one other image"
            )
        kde = gaussian_kde_grid(points, self.bandwidth_px, meta, self.downsample)
        n = kde.n_cells
        values = (1.0 - self.uniform_weight) * kde.values + self.uniform_weight / n
        return PriorityMap(values, "probability", self.downsample)

    def export_grid_cache(self, directory: str | Path) -> None:
        """Write each stimulus grid as ``<image_id>.smap``."""
        from .io import write_saliency_dir

        write_saliency_dir(
            directory,
            ((iid, self.grid(meta)) for iid, meta in self.dataset.stimuli.items()),
        )

    def initialize(self, meta, first_fixation, subject_id=None):
        return _GridKeyState(meta)

    def update_state(self, state, fixation):
        return state

    def compute_priority_map(self, state: _GridKeyState) -> PriorityMap:
        return self.grid(state.meta)


class FixationNumberCenterBias(ConditionalModel):
    """Center bias with one grid per group of fixation numbers.

    ``intervals`` must partition the numbers 1, 2, ... into contiguous
    groups, the last one open-ended, e.g. ``((1, 1), (2, 2), (3, 5),
    (6, None))``.  As a conditional model it assumes the forced-start
    paradigm, where the next fixation's number equals the history length.
    """

    probabilistic = True
    dependency_order = 0

    def __init__(
        self,
        dataset: Dataset,
        intervals: Sequence[tuple[int, int | None]] = MIT_INTERVALS,
        bandwidth_px: float = DEFAULT_BANDWIDTH_PX,
        uniform_weight: float = CENTER_BIAS_UNIFORM_WEIGHT,
        downsample: int = 1,
    ):
        self.intervals = _validated_intervals(intervals)
        self.dataset = dataset
        self.bandwidth_px = float(bandwidth_px)
        self.uniform_weight = float(uniform_weight)
        self.downsample = int(downsample)
        self._grids: dict[tuple[str, int, tuple[int, int]], PriorityMap] = {}
        counts = [0] * len(self.intervals)
        for sp in dataset.scanpaths:
            start = 1 if sp.forced_initial else 0
            for idx in range(start, len(sp.fixations)):
                counts[self.interval_index(fixation_number(sp, idx))] += 1
        empty = [self.intervals[i] for i, c in enumerate(counts) if c == 0]
        if empty:
            raise ValueError(
                f"no fixations fall into interval(s) {empty}; "
                "coarsen the schedule or use the plain center bias"
            )

    def interval_index(self, number: int) -> int:
        if number < 1:
            raise ValueError("fixation numbers start at 1")
        for i, (lo, hi) in enumerate(self.intervals):
            if lo <= number and (hi is None or number <= hi):
                return i
        raise AssertionError("intervals do not cover the number line")

    def grid(self, meta: StimulusMeta, number: int) -> PriorityMap:
        idx = self.interval_index(number)
        key = (meta.image_id, idx, grid_shape(meta, self.downsample))
        cached = self._grids.get(key)
        if cached is None:
            points = _rescaled_voluntary_points(
                self.dataset, meta, meta.image_id, self.intervals[idx]
            )
            if len(points) == 0:
                raise ValueError(
                    f"no other-image fixations with number in "
                    f"{self.intervals[idx]}"
                )
            kde = gaussian_kde_grid(
                points, self.bandwidth_px, meta, self.downsample
            )
            values = (
                (1.0 - self.uniform_weight) * kde.values
                + self.uniform_weight / kde.n_cells
            )
            cached = PriorityMap(values, "probability", self.downsample)
            self._grids[key] = cached
        return cached

    def initialize(self, meta, first_fixation, subject_id=None):
        return _GridKeyState(meta, 1)

    def update_state(self, state: _GridKeyState, fixation):
        return _GridKeyState(state.meta, state.extra + 1)

    def compute_priority_map(self, state: _GridKeyState) -> PriorityMap:
        return self.grid(state.meta, state.extra)


def _validated_intervals(
    intervals: Sequence[tuple[int, int | None]]
) -> tuple[tuple[int, int | None], ...]:
    out = tuple((int(lo), None if hi is None else int(hi)) for lo, hi in intervals)
    if not out or out[0][0] != 1:
        raise ValueError("intervals must start at fixation number 1")
    for i, (lo, hi) in enumerate(out):
        last = i == len(out) - 1
        if last:
            if hi is not None:
                raise ValueError("the last interval must be open-ended")
        else:
            if hi is None or hi < lo:
                raise ValueError(f"interval {(lo, hi)} is not a valid range")
            if out[i + 1][0] != hi + 1:
                raise ValueError("intervals must be contiguous")
    return out


@dataclass(frozen=True)
class KdeParams:
    """Mixture parameters of the gold standard."""

    bandwidth_px: float
    uniform_weight: float = 0.0
    centerbias_weight: float = 0.0

    def __post_init__(self) -> None:
        if not (self.bandwidth_px > 0 and math.isfinite(self.bandwidth_px)):
            raise ValueError("bandwidth_px must be positive and finite")
        if self.uniform_weight < 0 or self.centerbias_weight < 0:
            raise ValueError("mixture weights must be non-negative")
        if self.uniform_weight + self.centerbias_weight > 1:
            raise ValueError("mixture weights must sum to at most 1")

    @property
    def kde_weight(self) -> float:
        return 1.0 - self.uniform_weight - self.centerbias_weight


@dataclass(frozen=True)
class _GoldState:
    meta: StimulusMeta
    excluded_subject: str | None


class GoldStandard(ConditionalModel):
    """Within-image population density, optionally leave-one-subject-out.

    In ``loso`` mode the subject being predicted is excluded from the
    kernel density, which is the honest cross-validated variant; in
    ``joint`` mode every subject contributes, which upper-bounds it.
    """

    probabilistic = True
    dependency_order = 0

    def __init__(
        self,
        dataset: Dataset,
        params: KdeParams,
        centerbias: CenterBias | None = None,
        downsample: int = 1,
        mode: str = "loso",
    ):
        if mode not in ("loso", "joint"):
            raise ValueError("mode must be 'loso' or 'joint'")
        self.dataset = dataset
        self.params = params
        self.downsample = int(downsample)
        self.mode = mode
        if centerbias is None and params.centerbias_weight > 0:
            centerbias = CenterBias(dataset, downsample=downsample)
        self.centerbias = centerbias
        self._grids: dict[tuple[str, str | None, tuple[int, int]], PriorityMap] = {}

    def _image_points(
        self, meta: StimulusMeta, excluded_subject: str | None
    ) -> np.ndarray:
        points = []
        for sp in self.dataset.scanpaths_for_image(meta.image_id):
            if sp.subject_id == excluded_subject:
                continue
            for fix in sp.voluntary_fixations():
                points.append((fix.x_px, fix.y_px))
        return np.asarray(points, dtype=np.float64).reshape(-1, 2)

    def grid(
        self, meta: StimulusMeta, excluded_subject: str | None = None
    ) -> PriorityMap:
        key = (meta.image_id, excluded_subject, grid_shape(meta, self.downsample))
        cached = self._grids.get(key)
        if cached is None:
            points = self._image_points(meta, excluded_subject)
            if len(points) == 0:
                raise ValueError(
                    f"no other-subject fixations on image {meta.image_id!r}"
                )
            kde = gaussian_kde_grid(
                points, self.params.bandwidth_px, meta, self.downsample
            )
            values = self.params.kde_weight * kde.values
            values = values + self.params.uniform_weight / kde.n_cells
            if self.params.centerbias_weight > 0:
                values = values + (
                    self.params.centerbias_weight
                    * self.centerbias.grid(meta).values
                )
            cached = PriorityMap(values, "probability", self.downsample)
            self._grids[key] = cached
        return cached

    def initialize(self, meta, first_fixation, subject_id=None):
        excluded = subject_id if self.mode == "loso" else None
        return _GoldState(meta, excluded)

    def update_state(self, state, fixation):
        return state

    def compute_priority_map(self, state: _GoldState) -> PriorityMap:
        return self.grid(state.meta, state.excluded_subject)


@dataclass(frozen=True)
class GoldStandardFit:
    params: KdeParams
    objective_bits: float
    joint_bits: float
    cycles: int
    evaluations: int
    centerbias_bandwidth_px: float


class _GoldObjective:
    """Leave-one-subject-out likelihood of the gold-standard mixture.

    Precomputes, per (held-out subject, image): the scored target cells,
    the center-bias and uniform probabilities there, and the other
    subjects' fixation positions.  Kernel densities at the target cells
    are cached per bandwidth, so coordinate steps on the mixture weights
    cost only vector arithmetic.
    """

    def __init__(
        self,
        dataset: Dataset,
        centerbias: CenterBias,
        downsample: int,
    ):
        self.downsample = downsample
        self.units: list[dict] = []
        subject_of_unit: list[str] = []
        for subject in dataset.subjects:
            for image_id in dataset.image_ids:
                meta = dataset.stimuli[image_id]
                rows, cols = [], []
                for sp in dataset.scanpaths_for_image(image_id):
                    if sp.subject_id != subject:
                        continue
                    shape = grid_shape(meta, downsample)
                    for fix in sp.fixations[1:]:
                        row = int(fix.y_px // downsample)
                        col = int(fix.x_px // downsample)
                        if not (0 <= row < shape[0] and 0 <= col < shape[1]):
                            raise ValueError(
                                f"fixation outside grid on image {image_id!r}"
                            )
                        rows.append(row)
                        cols.append(col)
                if not rows:
                    continue
                others = []
                for sp in dataset.scanpaths_for_image(image_id):
                    if sp.subject_id == subject:
                        continue
                    others.extend(
                        (f.x_px, f.y_px) for f in sp.voluntary_fixations()
                    )
                if not others:
                    continue
                n_cells = math.prod(grid_shape(meta, downsample))
                cb_values = centerbias.grid(meta).values
                rows = np.asarray(rows)
                cols = np.asarray(cols)
                self.units.append(
                    {
                        "meta": meta,
                        "rows": rows,
                        "cols": cols,
                        "points": np.asarray(others, dtype=np.float64),
                        "all_points": None,
                        "cb": cb_values[rows, cols],
                        "uniform": 1.0 / n_cells,
                        "offset": math.log2(n_cells),
                    }
                )
                subject_of_unit.append(subject)
        if not self.units:
            raise ValueError(
                "gold standard fitting needs images viewed by at least "
                "two subjects"
            )
        self.subject_of_unit = subject_of_unit
        self.subjects = sorted(set(subject_of_unit))
        self._kde_cache: dict[tuple[float, bool], list[np.ndarray]] = {}

    def _kde_values(self, bandwidth_px: float, joint: bool) -> list[np.ndarray]:
        key = (bandwidth_px, joint)
        cached = self._kde_cache.get(key)
        if cached is None:
            cached = []
            for unit in self.units:
                points = unit["all_points"] if joint else unit["points"]
                if points is None:
                    raise ValueError("joint evaluation not prepared")
                cached.append(
                    _kde_at_cells(
                        points,
                        bandwidth_px,
                        unit["meta"],
                        self.downsample,
                        unit["rows"],
                        unit["cols"],
                    )
                )
            self._kde_cache[key] = cached
        return cached

    def prepare_joint(self, dataset: Dataset) -> None:
        for unit in self.units:
            meta = unit["meta"]
            points = []
            for sp in dataset.scanpaths_for_image(meta.image_id):
                points.extend((f.x_px, f.y_px) for f in sp.voluntary_fixations())
            unit["all_points"] = np.asarray(points, dtype=np.float64)

    def bits(self, theta: np.ndarray, joint: bool = False) -> float:
        bandwidth_px = math.exp(theta[0])
        w_kde, w_uniform, w_cb = softmax_weights(theta[1:])
        kde_values = self._kde_values(bandwidth_px, joint)
        per_subject: dict[str, list[np.ndarray]] = {}
        for unit, kde, subject in zip(
            self.units, kde_values, self.subject_of_unit
        ):
            p = w_kde * kde + w_uniform * unit["uniform"] + w_cb * unit["cb"]
            bits = np.log2(np.maximum(p, 1e-300)) + unit["offset"]
            per_subject.setdefault(subject, []).append(bits)
        means = [
            float(np.mean(np.concatenate(chunks)))
            for subject, chunks in sorted(per_subject.items())
        ]
        return float(np.mean(means))


def fit_gold_standard(
    dataset: Dataset,
    downsample: int = 1,
    centerbias: CenterBias | None = None,
    max_cycles: int = 50,
) -> GoldStandardFit:
    """Maximum-likelihood bandwidth and mixture weights, LOSO objective.

    The center-bias component keeps its own bandwidth fixed; only the
    within-image kernel bandwidth and the three mixture weights move.
    Weights are optimized through a softmax over two free logits.
    """
    if len(dataset.subjects) < 2:
        raise ValueError("gold standard fitting needs at least two subjects")
    if centerbias is None:
        centerbias = CenterBias(dataset, downsample=downsample)
    objective = _GoldObjective(dataset, centerbias, downsample)
    objective.prepare_joint(dataset)

    lo, hi = BANDWIDTH_BOUNDS_PX
    spec = FitSpec(
        names=("log_bandwidth", "logit_uniform", "logit_centerbias"),
        lower=(math.log(lo), -12.0, -12.0),
        upper=(math.log(hi), 12.0, 12.0),
        initial=(math.log(min(hi, max(lo, DEFAULT_BANDWIDTH_PX))), -3.0, -3.0),
        objective=lambda theta: objective.bits(theta),
        split="loso",
    )
    result = maximize(spec, max_cycles=max_cycles)
    theta = np.array(
        [
            result.parameters["log_bandwidth"],
            result.parameters["logit_uniform"],
            result.parameters["logit_centerbias"],
        ]
    )
    w_kde, w_uniform, w_cb = softmax_weights(theta[1:])
    params = KdeParams(
        bandwidth_px=math.exp(theta[0]),
        uniform_weight=float(w_uniform),
        centerbias_weight=float(w_cb),
    )
    joint_bits = objective.bits(theta, joint=True)
    return GoldStandardFit(
        params=params,
        objective_bits=result.objective,
        joint_bits=joint_bits,
        cycles=result.cycles,
        evaluations=result.evaluations,
        centerbias_bandwidth_px=centerbias.bandwidth_px,
    )


def fit_center_bias_bandwidth(
    dataset: Dataset,
    downsample: int = 1,
    uniform_weight: float = CENTER_BIAS_UNIFORM_WEIGHT,
    bounds_px: tuple[float, float] = BANDWIDTH_BOUNDS_PX,
) -> tuple[float, float, int]:
    """Bandwidth maximizing held-out likelihood of the center bias.

    The estimator never sees the target image's own fixations, so plain
    likelihood over all images is already cross-validated.  Returns
    (bandwidth_px, mean bits per fixation, objective evaluations).
    """
    if len(dataset.image_ids) < 2:
        raise ValueError("center bias fitting needs at least two images")
    units = []
    for image_id in dataset.image_ids:
        meta = dataset.stimuli[image_id]
        shape = grid_shape(meta, downsample)
        rows, cols = [], []
        for sp in dataset.scanpaths_for_image(image_id):
            for fix in sp.fixations[1:]:
                row = int(fix.y_px // downsample)
                col = int(fix.x_px // downsample)
                if not (0 <= row < shape[0] and 0 <= col < shape[1]):
                    raise ValueError(f"fixation outside grid on {image_id!r}")
                rows.append(row)
                cols.append(col)
        if not rows:
            continue
        points = _rescaled_voluntary_points(dataset, meta, image_id)
        if len(points) == 0:
            raise ValueError("center bias fitting needs other-image fixations")
        units.append(
            {
                "meta": meta,
                "rows": np.asarray(rows),
                "cols": np.asarray(cols),
                "points": points,
                "n_cells": shape[0] * shape[1],
            }
        )
    if not units:
        raise ValueError("no scorable fixations in the dataset")

    def bits_at(log_bw: float) -> float:
        bandwidth = math.exp(log_bw)
        image_means = []
        for unit in units:
            kde = _kde_at_cells(
                unit["points"], bandwidth, unit["meta"], downsample,
                unit["rows"], unit["cols"],
            )
            p = (1.0 - uniform_weight) * kde + uniform_weight / unit["n_cells"]
            bits = np.log2(np.maximum(p, 1e-300)) + math.log2(unit["n_cells"])
            image_means.append(float(bits.mean()))
        return float(np.mean(image_means))

    log_bw, best, evaluations = golden_section_max(
        bits_at, math.log(bounds_px[0]), math.log(bounds_px[1])
    )
    return math.exp(log_bw), best, evaluations


def save_baseline_params(
    path: str | Path,
    kind: str,
    bandwidth_px: float,
    uniform_weight: float | None = None,
    centerbias_weight: float | None = None,
    interval_edges: Sequence[tuple[int, int | None]] | None = None,
) -> None:
    """Persist fitted baseline parameters as a small JSON object."""
    import json

    payload: dict[str, object] = {"kind": kind, "bandwidth_px": bandwidth_px}
    if uniform_weight is not None:
        payload["uniform_weight"] = uniform_weight
    if centerbias_weight is not None:
        payload["centerbias_weight"] = centerbias_weight
    if interval_edges is not None:
        payload["interval_edges"] = [list(edge) for edge in interval_edges]
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_baseline_params(path: str | Path) -> dict:
    import json

    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ValueError(f"{path}: not a baseline parameter file")
    if "interval_edges" in payload:
        payload["interval_edges"] = [
            (int(lo), None if hi is None else int(hi))
            for lo, hi in payload["interval_edges"]
        ]
    return payload
