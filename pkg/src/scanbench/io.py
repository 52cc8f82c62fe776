"""File formats: JSON-lines scanpath datasets and SMAP binary grids.

Dataset files hold one JSON object per line with keys ``image_id``,
``subject_id``, ``width_px``, ``height_px``, ``px_per_dva``,
``forced_initial`` and ``fixations`` (a list of ``{"x", "y",
"duration_ms"}`` objects; ``duration_ms`` may be null and an optional
``"invalid": true`` marks recording artifacts).  Files are UTF-8 with
``\\n`` line endings; coordinates are written as decimal text with six
fractional digits, which round-trips such values bit-exactly.

SMAP files are little-endian binary: magic ``SMAP``, version byte 0x01, a
kind byte (0x00 priority, 0x01 probability), uint32 width, uint32 height,
then width*height float32 cell values in row-major order with row 0 at the
top of the stimulus.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import (
    Dataset,
    DatasetFormatError,
    Fixation,
    MissingSaliencyError,
    PriorityMap,
    Scanpath,
    StimulusMeta,
    grid_shape,
    resample_grid,
)

SMAP_MAGIC = b"SMAP"
SMAP_VERSION = 1
_SMAP_KINDS = {0: "priority", 1: "probability"}
_SMAP_KIND_BYTES = {v: k for k, v in _SMAP_KINDS.items()}

BOUNDS_POLICIES = ("reject", "clamp")


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    return format(value, ".6f")


def _format_record(sp: Scanpath, meta: StimulusMeta) -> str:
    import json

    parts = []
    for fix in sp.fixations:
        dur = "null" if fix.duration_ms is None else _format_float(fix.duration_ms)
        body = (
            f'{{"x":{_format_float(fix.x_px)},"y":{_format_float(fix.y_px)},'
            f'"duration_ms":{dur}'
        )
        if fix.invalid:
            body += ',"invalid":true'
        parts.append(body + "}")
    return (
        '{"image_id":' + json.dumps(sp.image_id)
        + ',"subject_id":' + json.dumps(sp.subject_id)
        + f',"width_px":{meta.width_px},"height_px":{meta.height_px}'
        + f',"px_per_dva":{_format_float(meta.px_per_dva)}'
        + ',"forced_initial":' + ("true" if sp.forced_initial else "false")
        + ',"fixations":[' + ",".join(parts) + "]}"
    )


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset as JSON lines."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for sp in ds.scanpaths:
            fh.write(_format_record(sp, ds.stimuli[sp.image_id]) + "\n")


def _parse_number(obj: dict, key: str, lineno: int) -> float:
    value = obj.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise DatasetFormatError(f"line {lineno}: {key!r} must be a number")
    return float(value)


def _clamp_fixation(fix: Fixation, meta: StimulusMeta) -> Fixation:
    from dataclasses import replace

    x = min(max(fix.x_px, 0.0), np.nextafter(float(meta.width_px), -np.inf))
    y = min(max(fix.y_px, 0.0), np.nextafter(float(meta.height_px), -np.inf))
    return replace(fix, x_px=x, y_px=y)


def load_dataset(
    path: str | Path, bounds: str = "reject", name: str | None = None
) -> Dataset:
    """Parse a dataset file; the whole load fails on the first bad record.

    ``bounds`` controls out-of-bounds fixations: ``reject`` raises,
    ``clamp`` moves them to the nearest in-bounds position.  An
    out-of-bounds initial fixation under ``reject`` is kept but marked
    invalid, so that preprocessing can replace it.
    """
    import json

    if bounds not in BOUNDS_POLICIES:
        raise ValueError(f"unknown bounds policy {bounds!r}")
    path = Path(path)
    stimuli: dict[str, StimulusMeta] = {}
    scanpaths: list[Scanpath] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise DatasetFormatError(f"line {lineno}: {err}") from err
            if not isinstance(obj, dict):
                raise DatasetFormatError(f"line {lineno}: record is not an object")
            try:
                sp, meta = _parse_record(obj, lineno, bounds)
            except DatasetFormatError:
                raise
            except (KeyError, TypeError, ValueError) as err:
                raise DatasetFormatError(f"line {lineno}: {err}") from err
            known = stimuli.get(meta.image_id)
            if known is None:
                stimuli[meta.image_id] = meta
            elif known != meta:
                raise DatasetFormatError(
                    f"line {lineno}: stimulus {meta.image_id!r} conflicts with "
                    f"an earlier record's dimensions"
                )
            scanpaths.append(sp)
    return Dataset(name or path.stem, stimuli, tuple(scanpaths))


def _parse_record(
    obj: dict, lineno: int, bounds: str
) -> tuple[Scanpath, StimulusMeta]:
    for key in ("image_id", "subject_id"):
        if not isinstance(obj.get(key), str) or not obj.get(key):
            raise DatasetFormatError(
                f"line {lineno}: {key!r} must be a non-empty string"
            )
    width = _parse_number(obj, "width_px", lineno)
    height = _parse_number(obj, "height_px", lineno)
    if width != int(width) or height != int(height):
        raise DatasetFormatError(f"line {lineno}: dimensions must be integers")
    meta = StimulusMeta(
        obj["image_id"], int(width), int(height),
        _parse_number(obj, "px_per_dva", lineno),
    )
    raw = obj.get("fixations")
    if not isinstance(raw, list) or not raw:
        raise DatasetFormatError(
            f"line {lineno}: 'fixations' must be a non-empty list"
        )
    forced = obj.get("forced_initial", False)
    if not isinstance(forced, bool):
        raise DatasetFormatError(f"line {lineno}: 'forced_initial' must be a bool")
    fixations = []
    for idx, f in enumerate(raw):
        if not isinstance(f, dict):
            raise DatasetFormatError(f"line {lineno}: fixation {idx} not an object")
        x = _parse_number(f, "x", lineno)
        y = _parse_number(f, "y", lineno)
        dur = f.get("duration_ms")
        if dur is not None:
            dur = _parse_number(f, "duration_ms", lineno)
            if dur < 0:
                raise DatasetFormatError(
                    f"line {lineno}: fixation {idx} has negative duration"
                )
        invalid = f.get("invalid", False)
        if not isinstance(invalid, bool):
            raise DatasetFormatError(f"line {lineno}: 'invalid' must be a bool")
        fix = Fixation(x, y, dur, invalid)
        if not (0 <= x < meta.width_px and 0 <= y < meta.height_px):
            if bounds == "clamp":
                fix = _clamp_fixation(fix, meta)
            elif idx == 0:
                from dataclasses import replace

                fix = replace(fix, invalid=True)
            else:
                raise DatasetFormatError(
                    f"line {lineno}: fixation {idx} at ({x}, {y}) is outside "
                    f"the {meta.width_px}x{meta.height_px} stimulus"
                )
        fixations.append(fix)
    sp = Scanpath(obj["image_id"], obj["subject_id"], tuple(fixations), forced)
    return sp, meta


def write_smap(path: str | Path, pmap: PriorityMap) -> None:
    """Write a grid in the SMAP binary format (float32, little-endian)."""
    header = SMAP_MAGIC + struct.pack(
        "<BBII",
        SMAP_VERSION,
        _SMAP_KIND_BYTES[pmap.kind],
        pmap.width,
        pmap.height,
    )
    Path(path).write_bytes(header + pmap.values.astype("<f4").tobytes())


def read_smap(path: str | Path, downsample: int = 1) -> PriorityMap:
    """Read an SMAP file.

    Probability grids are renormalized after the float32 round trip so the
    unit-mass invariant holds exactly again.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 14 or blob[:4] != SMAP_MAGIC:
        raise DatasetFormatError(f"{path}: not an SMAP file")
    version, kind_byte, width, height = struct.unpack("<BBII", blob[4:14])
    if version != SMAP_VERSION:
        raise DatasetFormatError(f"{path}: unsupported SMAP version {version}")
    if kind_byte not in _SMAP_KINDS:
        raise DatasetFormatError(f"{path}: unknown SMAP kind byte {kind_byte}")
    expected = 14 + 4 * width * height
    if len(blob) != expected:
        raise DatasetFormatError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=14).astype(np.float64)
    values = values.reshape(height, width)
    kind = _SMAP_KINDS[kind_byte]
    if kind == "probability":
        total = values.sum()
        if total <= 0:
            raise DatasetFormatError(f"{path}: probability grid has no mass")
        values = values / total
    return PriorityMap(values, kind, downsample)


class SaliencyStore:
    """Per-image saliency grids read from ``<dir>/<image_id>.smap``.

    Grids are resampled to the requested evaluation geometry and cached.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._cache: dict[tuple[str, tuple[int, int]], np.ndarray] = {}

    def grid_for(self, meta: StimulusMeta, downsample: int) -> np.ndarray:
        shape = grid_shape(meta, downsample)
        key = (meta.image_id, shape)
        cached = self._cache.get(key)
        if cached is None:
            path = self.directory / f"{meta.image_id}.smap"
            if not path.is_file():
                raise MissingSaliencyError(
                    f"no saliency map for image {meta.image_id!r} "
                    f"in {self.directory}"
                )
            cached = resample_grid(read_smap(path).values, shape)
            cached.setflags(write=False)
            self._cache[key] = cached
        return cached


class ConstantSaliency:
    """Uniform stand-in used when a model runs without image features."""

    def grid_for(self, meta: StimulusMeta, downsample: int) -> np.ndarray:
        shape = grid_shape(meta, downsample)
        values = np.full(shape, 1.0 / (shape[0] * shape[1]))
        values.setflags(write=False)
        return values


def write_saliency_dir(
    directory: str | Path, grids: Iterable[tuple[str, PriorityMap]]
) -> None:
    """Write ``<image_id>.smap`` files for each (image_id, grid) pair."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for image_id, pmap in grids:
        write_smap(directory / f"{image_id}.smap", pmap)
