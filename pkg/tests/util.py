"""Shared builders for the test suite."""

import numpy as np

from scanbench.core import (
    Dataset,
    Fixation,
    PriorityMap,
    Scanpath,
    StimulusMeta,
    central_fixation,
)


def make_meta(image_id="img-a", width=100, height=100, px_per_dva=10.0):
    return StimulusMeta(image_id, width, height, px_per_dva)


def make_path(image_id, subject_id, coords, forced=True, durations=None):
    fixations = []
    for i, (x, y) in enumerate(coords):
        duration = durations[i] if durations is not None else None
        fixations.append(Fixation(x, y, duration))
    return Scanpath(image_id, subject_id, tuple(fixations), forced_initial=forced)


def prob_map(values, downsample=1):
    arr = np.asarray(values, dtype=np.float64)
    return PriorityMap(arr / arr.sum(), "probability", downsample)


def random_dataset(
    seed,
    n_images=3,
    n_subjects=3,
    n_fixations=5,
    width=80,
    height=60,
    px_per_dva=10.0,
    name="random",
):
    """Seeded dataset with forced central starts and in-bounds fixations."""
    rng = np.random.default_rng(seed)
    stimuli = {
        f"im{i}": StimulusMeta(f"im{i}", width, height, px_per_dva)
        for i in range(n_images)
    }
    scanpaths = []
    for image_id in sorted(stimuli):
        meta = stimuli[image_id]
        for s in range(n_subjects):
            coords = [central_fixation(meta)]
            for _ in range(n_fixations - 1):
                coords.append(
                    Fixation(
                        rng.uniform(0.0, width * 0.999),
                        rng.uniform(0.0, height * 0.999),
                        float(rng.integers(120, 400)),
                    )
                )
            scanpaths.append(
                Scanpath(image_id, f"s{s}", tuple(coords), forced_initial=True)
            )
    return Dataset(name, stimuli, tuple(scanpaths))


def random_prob_map(rng, shape=(6, 8), downsample=1):
    values = rng.random(shape) + 1e-3
    return prob_map(values, downsample)
