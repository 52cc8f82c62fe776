"""Domain types for fixation scanpaths, stimuli and priority grids.

Coordinates are continuous pixel positions with the origin at the top-left
corner of the stimulus; x grows to the right, y grows downward.  A priority
grid divides the stimulus into square cells of ``downsample_factor`` pixels,
and the owning cell of a fixation is ``floor(x / downsample)``,
``floor(y / downsample)``.  All types are immutable values after
construction and safe to share between threads read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

#: Tolerance on the total mass of a probability grid.
PROBABILITY_SUM_TOL = 1e-9

MAP_KINDS = ("priority", "probability")


class ScanbenchError(Exception):
    """Base class for all errors raised by this package."""


class DatasetFormatError(ScanbenchError):
    """A dataset file is malformed or internally inconsistent."""


class OutOfBoundsError(ScanbenchError):
    """A fixation lies outside its stimulus or outside a grid."""


class GeometryMismatchError(ScanbenchError):
    """Two grids that must share a geometry do not."""


class DegenerateMapError(ScanbenchError):
    """A grid has no usable structure (zero variance, zero mass, ...)."""


class MissingSaliencyError(ScanbenchError):
    """A model needs a saliency map that was not supplied."""


@dataclass(frozen=True)
class StimulusMeta:
    """Identity and geometry of one stimulus image."""

    image_id: str
    width_px: int
    height_px: int
    px_per_dva: float

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("stimulus dimensions must be positive")
        if not (self.px_per_dva > 0 and math.isfinite(self.px_per_dva)):
            raise ValueError("px_per_dva must be positive and finite")

    @property
    def center(self) -> tuple[float, float]:
        return (self.width_px / 2.0, self.height_px / 2.0)


@dataclass(frozen=True)
class Fixation:
    """One fixation; ``duration_ms`` is optional, ``invalid`` marks a
    recording artifact that preprocessing may replace."""

    x_px: float
    y_px: float
    duration_ms: float | None = None
    invalid: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_px) and math.isfinite(self.y_px)):
            raise ValueError("fixation coordinates must be finite")
        if self.duration_ms is not None and not (
            self.duration_ms >= 0 and math.isfinite(self.duration_ms)
        ):
            raise ValueError("duration_ms must be non-negative and finite")


@dataclass(frozen=True)
class Scanpath:
    """An ordered fixation sequence of one subject on one image.

    ``forced_initial`` marks fixation 0 as the forced starting fixation of
    the viewing paradigm; a forced fixation is part of the conditioning
    history but is never itself a prediction target.
    """

    image_id: str
    subject_id: str
    fixations: tuple[Fixation, ...]
    forced_initial: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "fixations", tuple(self.fixations))
        if not self.image_id or not self.subject_id:
            raise ValueError("image_id and subject_id must be non-empty")

    def __len__(self) -> int:
        return len(self.fixations)

    def voluntary_fixations(self) -> tuple[Fixation, ...]:
        """Fixations excluding the forced initial one, if any."""
        return self.fixations[1:] if self.forced_initial else self.fixations


@dataclass(frozen=True)
class Dataset:
    """A named collection of stimuli and the scanpaths recorded on them."""

    name: str
    stimuli: Mapping[str, StimulusMeta]
    scanpaths: tuple[Scanpath, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stimuli", dict(self.stimuli))
        object.__setattr__(self, "scanpaths", tuple(self.scanpaths))
        for sp in self.scanpaths:
            if sp.image_id not in self.stimuli:
                raise DatasetFormatError(
                    f"scanpath references unknown stimulus {sp.image_id!r}"
                )
            if len(sp) < 1:
                raise DatasetFormatError(
                    f"empty scanpath for subject {sp.subject_id!r} "
                    f"on {sp.image_id!r}"
                )

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted({sp.subject_id for sp in self.scanpaths}))

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.stimuli))

    def scanpaths_for_image(self, image_id: str) -> tuple[Scanpath, ...]:
        return tuple(sp for sp in self.scanpaths if sp.image_id == image_id)

    def without_subject(self, subject_id: str) -> "Dataset":
        """View of this dataset with one subject's scanpaths removed."""
        kept = tuple(sp for sp in self.scanpaths if sp.subject_id != subject_id)
        return Dataset(self.name, self.stimuli, kept)

    def with_images(self, image_ids: Iterable[str]) -> "Dataset":
        """View restricted to the given stimuli and their scanpaths."""
        wanted = set(image_ids)
        missing = wanted - set(self.stimuli)
        if missing:
            raise KeyError(f"unknown image ids: {sorted(missing)}")
        stimuli = {iid: m for iid, m in self.stimuli.items() if iid in wanted}
        kept = tuple(sp for sp in self.scanpaths if sp.image_id in wanted)
        return Dataset(self.name, stimuli, kept)


def grid_shape(meta: StimulusMeta, downsample: int) -> tuple[int, int]:
    """(rows, cols) of the priority grid covering the stimulus."""
    if downsample < 1:
        raise ValueError("downsample must be a positive integer")
    return (
        -(-meta.height_px // downsample),
        -(-meta.width_px // downsample),
    )


def cell_centers_px(
    meta: StimulusMeta, downsample: int
) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates (ys, xs) of the grid's cell centers."""
    rows, cols = grid_shape(meta, downsample)
    ys = (np.arange(rows) + 0.5) * downsample
    xs = (np.arange(cols) + 0.5) * downsample
    return ys, xs


def in_bounds(fix: Fixation, meta: StimulusMeta) -> bool:
    return 0 <= fix.x_px < meta.width_px and 0 <= fix.y_px < meta.height_px


@dataclass(frozen=True, eq=False)
class PriorityMap:
    """A dense grid of priorities or probabilities over stimulus cells.

    ``values`` is float64 with shape (height, width); row 0 is the top of
    the stimulus.  A ``probability`` map is non-negative and sums to 1
    within ``PROBABILITY_SUM_TOL`` (checked at construction); a
    ``priority`` map carries arbitrary finite values whose meaning is
    ordinal only.
    """

    values: np.ndarray
    kind: str
    downsample_factor: int = 1

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("map values must be a non-empty 2-d array")
        if not np.isfinite(arr).all():
            raise DegenerateMapError("map contains non-finite values")
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if not (
            isinstance(self.downsample_factor, (int, np.integer))
            and self.downsample_factor >= 1
        ):
            raise ValueError("downsample_factor must be a positive integer")
        if self.kind == "probability":
            if (arr < 0).any():
                raise ValueError("probability map has negative entries")
            if abs(float(arr.sum()) - 1.0) > PROBABILITY_SUM_TOL:
                raise ValueError(
                    f"probability map sums to {arr.sum()!r}, expected 1"
                )
        arr = arr.copy() if arr is self.values else arr
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "downsample_factor", int(self.downsample_factor))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.size

    def same_geometry(self, other: "PriorityMap") -> bool:
        return (
            self.values.shape == other.values.shape
            and self.downsample_factor == other.downsample_factor
        )

    def cell_of(self, fix: Fixation) -> tuple[int, int]:
        """(row, col) of the cell owning ``fix``; raises if outside."""
        col = int(math.floor(fix.x_px / self.downsample_factor))
        row = int(math.floor(fix.y_px / self.downsample_factor))
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise OutOfBoundsError(
                f"fixation ({fix.x_px}, {fix.y_px}) outside "
                f"{self.width}x{self.height} grid at factor "
                f"{self.downsample_factor}"
            )
        return row, col

    def value_at(self, fix: Fixation) -> float:
        row, col = self.cell_of(fix)
        return float(self.values[row, col])


def uniform_map(shape: tuple[int, int], downsample: int = 1) -> PriorityMap:
    """Probability map assigning the same float to every cell."""
    n = shape[0] * shape[1]
    return PriorityMap(np.full(shape, 1.0 / n), "probability", downsample)


def probability_map(values: np.ndarray, downsample: int = 1) -> PriorityMap:
    """Normalize non-negative values into a probability map."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DegenerateMapError("cannot normalize non-finite values")
    if (arr < 0).any():
        raise ValueError("cannot normalize negative values")
    total = float(arr.sum())
    if total <= 0:
        raise DegenerateMapError("cannot normalize a zero-mass grid")
    return PriorityMap(arr / total, "probability", downsample)


@dataclass(frozen=True)
class PreprocessPolicy:
    """Which cleanup steps :func:`preprocess_scanpath` applies."""

    inject_central: bool = False
    replace_invalid_initial: bool = False
    collapse_duplicates: bool = True
    bounds: str = "reject"

    def __post_init__(self) -> None:
        if self.bounds not in ("reject", "clamp"):
            raise ValueError("bounds policy must be 'reject' or 'clamp'")


def central_fixation(meta: StimulusMeta) -> Fixation:
    cx, cy = meta.center
    return Fixation(cx, cy)


def preprocess_scanpath(
    sp: Scanpath, meta: StimulusMeta, policy: PreprocessPolicy
) -> Scanpath:
    """Normalize one scanpath for evaluation.  Idempotent.

    Steps, in order and each gated by the policy: prepend a central
    fixation flagged forced unless the scanpath already starts with one;
    replace an invalid or out-of-bounds initial fixation with the central
    fixation; collapse exact consecutive duplicate positions, keeping the
    first fixation and summing the durations that are present.
    """
    if sp.image_id != meta.image_id:
        raise ValueError("scanpath and stimulus metadata disagree on image")
    fixations = list(sp.fixations)
    forced = sp.forced_initial

    if policy.inject_central and not forced:
        fixations.insert(0, central_fixation(meta))
        forced = True
    if not fixations:
        raise ValueError("empty scanpath and no central injection requested")

    if policy.replace_invalid_initial:
        first = fixations[0]
        if first.invalid or not in_bounds(first, meta):
            fixations[0] = central_fixation(meta)
            forced = True

    if policy.collapse_duplicates:
        kept = [fixations[0]]
        for fix in fixations[1:]:
            last = kept[-1]
            if fix.x_px == last.x_px and fix.y_px == last.y_px:
                durations = [
                    d for d in (last.duration_ms, fix.duration_ms) if d is not None
                ]
                merged = sum(durations) if durations else None
                kept[-1] = replace(last, duration_ms=merged)
            else:
                kept.append(fix)
        fixations = kept

    return Scanpath(sp.image_id, sp.subject_id, tuple(fixations), forced)


def preprocess_dataset(ds: Dataset, policy: PreprocessPolicy) -> Dataset:
    """Apply :func:`preprocess_scanpath` to every scanpath."""
    processed = tuple(
        preprocess_scanpath(sp, ds.stimuli[sp.image_id], policy)
        for sp in ds.scanpaths
    )
    return Dataset(ds.name, ds.stimuli, processed)


def saccade_amplitude_dva(a: Fixation, b: Fixation, meta: StimulusMeta) -> float:
    """Euclidean distance between two fixations in degrees of visual angle."""
    return math.hypot(b.x_px - a.x_px, b.y_px - a.y_px) / meta.px_per_dva


def resample_grid(values: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resample of a grid onto a new shape.

    Source and target cells are aligned by their centers on the unit
    square, so the resampled grid covers the same spatial extent.
    """
    from scipy.interpolate import RegularGridInterpolator

    src = np.asarray(values, dtype=np.float64)
    if src.shape == tuple(shape):
        return src.copy()
    sh, sw = src.shape
    th, tw = shape
    sy = (np.arange(sh) + 0.5) / sh
    sx = (np.arange(sw) + 0.5) / sw
    interp = RegularGridInterpolator(
        (sy, sx), src, method="linear", bounds_error=False, fill_value=None
    )
    ty = (np.arange(th) + 0.5) / th
    tx = (np.arange(tw) + 0.5) / tw
    grid_y, grid_x = np.meshgrid(ty, tx, indexing="ij")
    out = interp(np.stack([grid_y.ravel(), grid_x.ravel()], axis=1))
    return out.reshape(th, tw)
