"""Derivative-free parameter fitting and data splits.

The optimizer is bounded cyclic coordinate descent with a golden-section
line search per coordinate.  It is deterministic, needs only objective
evaluations, and is adequate for the small smooth problems that arise
here (a handful of parameters).  Mixture weights on a simplex should be
reparameterized through a softmax so the box constraints stay honest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .core import Dataset

#: Interior point ratio of the golden-section search.
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

SPLIT_NAMES = ("loso", "train_all", "subset")


@dataclass
class FitSpec:
    """A bounded maximization problem over named parameters."""

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    initial: tuple[float, ...]
    objective: Callable[[np.ndarray], float]
    split: str = "train_all"

    def __post_init__(self) -> None:
        k = len(self.names)
        if not (len(self.lower) == len(self.upper) == len(self.initial) == k):
            raise ValueError("names, bounds and initial point must align")
        if k == 0:
            raise ValueError("need at least one parameter")
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {self.split!r}")
        for lo, hi, x0 in zip(self.lower, self.upper, self.initial):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError("bounds must be finite with lower < upper")
            if not (lo <= x0 <= hi):
                raise ValueError("initial point must lie within bounds")


@dataclass(frozen=True)
class FitResult:
    parameters: dict[str, float]
    objective: float
    cycles: int
    evaluations: int
    split: str


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float | None = None,
    max_iter: int = 60,
) -> tuple[float, float, int]:
    """Maximize a unimodal function on [lo, hi].

    Returns (argmax, max, evaluations).  The original endpoints are always
    evaluated, so an optimum sitting on a bound is returned exactly.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if tol is None:
        tol = (hi - lo) * 1e-5
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    evaluations = 2
    while b - a > tol and evaluations < max_iter:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        evaluations += 1
    candidates = [(f1, x1), (f2, x2), (f(lo), lo), (f(hi), hi)]
    evaluations += 2
    best_value, best_x = max(candidates, key=lambda pair: pair[0])
    return best_x, best_value, evaluations


def maximize(
    spec: FitSpec, max_cycles: int = 50, rel_tol: float = 1e-6
) -> FitResult:
    """Coordinate descent inside the parameter box until improvement stalls.

    Stops when a full cycle over all coordinates improves the objective by
    less than ``rel_tol`` relatively, or after ``max_cycles`` cycles.  The
    returned objective is never below the objective at the initial point.
    """
    x = np.asarray(spec.initial, dtype=np.float64).copy()
    current = float(spec.objective(x))
    if not math.isfinite(current):
        raise ValueError("objective is not finite at the initial point")
    evaluations = 1
    cycles = 0
    for _ in range(max_cycles):
        previous = current
        for j in range(len(x)):
            def along(v: float, j: int = j) -> float:
                trial = x.copy()
                trial[j] = v
                value = float(spec.objective(trial))
                return value if math.isfinite(value) else -math.inf

            best_v, best_value, used = golden_section_max(
                along, spec.lower[j], spec.upper[j]
            )
            evaluations += used
            if best_value > current:
                x[j] = best_v
                current = best_value
        cycles += 1
        if current - previous <= rel_tol * max(1.0, abs(previous)):
            break
    parameters = dict(zip(spec.names, (float(v) for v in x)))
    return FitResult(parameters, current, cycles, evaluations, spec.split)


def softmax_weights(logits: Sequence[float]) -> np.ndarray:
    """Simplex point from unconstrained logits; a leading 0 is implied.

    ``softmax_weights([a, b])`` returns the 3-vector proportional to
    ``(1, e**a, e**b)``, so two free parameters cover the 3-simplex.
    """
    z = np.concatenate([[0.0], np.asarray(logits, dtype=np.float64)])
    z = np.exp(z - z.max())
    return z / z.sum()


def loso_splits(ds: Dataset) -> Iterator[tuple[str, Dataset]]:
    """Yield (held-out subject, training view) per subject, sorted."""
    subjects = ds.subjects
    if len(subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least two subjects")
    for subject in subjects:
        yield subject, ds.without_subject(subject)


def subset_sample(ds: Dataset, n_images: int, seed: int) -> Dataset:
    """Seeded uniform sample of images, with their scanpaths."""
    ids = ds.image_ids
    if not 1 <= n_images <= len(ids):
        raise ValueError(
            f"cannot sample {n_images} of {len(ids)} images"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(ids), size=n_images, replace=False)
    return ds.with_images(ids[i] for i in sorted(chosen))


def save_fit_result(
    path: str | Path,
    parameters: Mapping[str, object],
    objective_bits_per_fix: float,
    split: str,
    seed: int | None,
    iterations: int,
    extra: Mapping[str, object] | None = None,
) -> None:
    """Persist a fit as JSON with a fixed top-level schema."""
    payload: dict[str, object] = {
        "parameters": dict(parameters),
        "objective_bits_per_fix": objective_bits_per_fix,
        "split": split,
        "seed": seed,
        "iterations": iterations,
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_fit_parameters(path: str | Path) -> dict:
    """Read parameters from a fit-result file or a bare parameter object."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: expected a JSON object")
    inner = payload.get("parameters")
    if isinstance(inner, dict):
        return inner
    return payload
