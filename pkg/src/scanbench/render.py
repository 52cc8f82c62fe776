"""Rendering of case-study grids to image files.

Each equalized conditional map becomes a grayscale PNG, and each case
additionally gets a labeled overview figure with one panel per model and
markers for the fixation history and the true next fixation.  Rendering
is strictly presentational; every number lives in the CSV and SMAP
outputs next to these files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .bench import CaseStudyItem
from .core import Dataset, PriorityMap


def save_graymap_png(pmap: PriorityMap, path: str | Path) -> None:
    """Write a map as an 8-bit grayscale PNG, dark = low priority."""
    values = pmap.values
    span = values.max() - values.min()
    norm = (values - values.min()) / span if span > 0 else values * 0.0
    plt.imsave(str(path), norm, cmap="gray", vmin=0.0, vmax=1.0)


def save_case_overview(
    item: CaseStudyItem,
    maps_by_model: Mapping[str, PriorityMap],
    dataset: Dataset,
    path: str | Path,
) -> None:
    """One figure per case: model panels with history and target marks."""
    sp = dataset.scanpaths[item.scanpath_index]
    labels = list(maps_by_model)
    fig, axes = plt.subplots(
        1, len(labels), figsize=(3.2 * len(labels), 3.4), squeeze=False
    )
    for ax, label in zip(axes[0], labels):
        pmap = maps_by_model[label]
        ds = pmap.downsample_factor
        ax.imshow(
            pmap.values,
            cmap="gray",
            vmin=0.0,
            vmax=1.0,
            extent=(0, pmap.width * ds, pmap.height * ds, 0),
        )
        history = sp.fixations[: item.fixation_index]
        target = sp.fixations[item.fixation_index]
        ax.plot(
            [f.x_px for f in history],
            [f.y_px for f in history],
            "o-",
            color="tab:blue",
            markersize=3,
            linewidth=1.0,
        )
        ax.plot([target.x_px], [target.y_px], "*", color="tab:red", markersize=10)
        auc = item.auc_by_model.get(label)
        title = label if auc is None else f"{label} ({100 * auc:.1f}%)"
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle(
        f"{item.image_id} / {item.subject_id} / fixation {item.fixation_index} "
        f"(AUC sd {item.auc_std:.3f})",
        fontsize=10,
    )
    fig.tight_layout()
    fig.savefig(str(path), dpi=120)
    plt.close(fig)


def render_case_studies(
    items: Sequence[CaseStudyItem],
    maps: Mapping[tuple[str, tuple], PriorityMap],
    dataset: Dataset,
    directory: str | Path,
) -> list[Path]:
    """PNGs for every case: per-model graymaps plus an overview figure."""
    directory = Path(directory)
    written = []
    for rank, item in enumerate(items, 1):
        case_dir = directory / f"case{rank:02d}"
        case_dir.mkdir(parents=True, exist_ok=True)
        per_model = {
            label: pmap
            for (label, key), pmap in maps.items()
            if key == item.key
        }
        for label, pmap in per_model.items():
            target = case_dir / f"{label}.png"
            save_graymap_png(pmap, target)
            written.append(target)
        overview = case_dir / "overview.png"
        save_case_overview(item, per_model, dataset, overview)
        written.append(overview)
    return written
