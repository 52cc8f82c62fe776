"""Evaluation orchestration: scoring runs, reports, case studies, synthesis.

``evaluate`` replays every scanpath through a conditional model, scoring
each fixation from index 1 on the priority map predicted from its
history.  Scanpaths are independent work units, so runs can be
parallelized over processes; results are merged in dataset order, which
makes parallel and serial runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import (
    Dataset,
    PriorityMap,
    ScanbenchError,
    StimulusMeta,
    saccade_amplitude_dva,
)
from .density import CenterBias
from .metrics import (
    METRIC_NAMES,
    FixationScore,
    aggregate,
    auc_uniform,
    histogram_equalize,
    information_gain,
    log_likelihood,
    nss,
    read_scores_csv,
    write_scores_csv,
)
from .models.base import ConditionalModel, conditional_prediction, sample_scanpath


class EvaluationError(ScanbenchError):
    """A model failed while scoring; carries the failing position."""


@dataclass(frozen=True)
class EvaluationRun:
    """All scores and aggregates of one model on one dataset."""

    model_label: str
    dataset_name: str
    metrics: tuple[str, ...]
    probabilistic: bool
    saliency: str
    scores: tuple[FixationScore, ...]
    aggregates: dict[str, float]
    provenance: dict

    def recompute_aggregates(self) -> dict[str, float]:
        out = {}
        for metric in self.metrics:
            if any(s.metric == metric for s in self.scores):
                out[metric] = aggregate(self.scores, metric)
        return out


def _normalized_metrics(metrics: Sequence[str]) -> tuple[str, ...]:
    seen = []
    for metric in metrics:
        if metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {metric!r}")
        if metric not in seen:
            seen.append(metric)
    if not seen:
        raise ValueError("need at least one metric")
    return tuple(seen)


def _score_scanpath(
    model: ConditionalModel,
    dataset: Dataset,
    index: int,
    metrics: tuple[str, ...],
    centerbias: CenterBias | None,
) -> list[FixationScore]:
    sp = dataset.scanpaths[index]
    meta = dataset.stimuli[sp.image_id]
    wants_prob = model.probabilistic
    cb_map = None
    if "ig" in metrics and wants_prob:
        cb_map = centerbias.grid(meta)
    scores: list[FixationScore] = []
    i = 0
    try:
        state = model.initialize(meta, sp.fixations[0], subject_id=sp.subject_id)
        for i in range(1, len(sp.fixations)):
            pmap = model.compute_priority_map(state)
            fix = sp.fixations[i]
            for metric in metrics:
                if metric == "ll":
                    if not wants_prob:
                        continue
                    value = log_likelihood(pmap, fix)
                elif metric == "ig":
                    if not wants_prob:
                        continue
                    value = information_gain(pmap, cb_map, fix)
                elif metric == "auc":
                    value = auc_uniform(pmap, fix)
                else:
                    value = nss(pmap, fix)
                scores.append(
                    FixationScore(
                        sp.image_id, sp.subject_id, index, i, metric, value
                    )
                )
            state = model.update_state(state, fix)
    except ScanbenchError as err:
        raise EvaluationError(
            f"image {sp.image_id!r}, scanpath {index}, fixation {i}: {err}"
        ) from err
    return scores


_WORKER_ARGS: dict = {}


def _init_worker(model, dataset, metrics, centerbias) -> None:
    _WORKER_ARGS["args"] = (model, dataset, metrics, centerbias)


def _worker_task(index: int) -> list[FixationScore]:
    model, dataset, metrics, centerbias = _WORKER_ARGS["args"]
    return _score_scanpath(model, dataset, index, metrics, centerbias)


def evaluate(
    model: ConditionalModel,
    dataset: Dataset,
    metrics: Sequence[str] = METRIC_NAMES,
    centerbias: CenterBias | None = None,
    jobs: int = 1,
    seed: int | None = None,
    model_label: str = "model",
    saliency_label: str = "none",
    provenance: Mapping[str, object] | None = None,
) -> EvaluationRun:
    """Score every fixation of every scanpath under the model.

    ``ll`` and ``ig`` are only computed for probabilistic models; ``ig``
    is measured against a center-bias baseline, built from the evaluated
    dataset if none is passed in.  Fixation 0 of each scanpath is history
    only and is never scored.
    """
    metrics = _normalized_metrics(metrics)
    if len(dataset.scanpaths) == 0:
        raise ValueError("dataset has no scanpaths")
    if "ig" in metrics and model.probabilistic and centerbias is None:
        centerbias = CenterBias(
            dataset, downsample=getattr(model, "downsample", 1)
        )
    jobs = max(1, int(jobs))
    indices = range(len(dataset.scanpaths))
    if jobs == 1:
        chunks = [
            _score_scanpath(model, dataset, i, metrics, centerbias)
            for i in indices
        ]
    else:
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(model, dataset, metrics, centerbias),
        ) as pool:
            chunksize = max(1, len(dataset.scanpaths) // (jobs * 4))
            chunks = list(pool.map(_worker_task, indices, chunksize=chunksize))
    scores = tuple(score for chunk in chunks for score in chunk)

    aggregates = {}
    for metric in metrics:
        if any(s.metric == metric for s in scores):
            aggregates[metric] = aggregate(scores, metric)

    meta = {
        "downsample": getattr(model, "downsample", 1),
        "jobs": jobs,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if provenance:
        meta.update(provenance)
    meta["config_hash"] = config_hash(
        {
            "model": model_label,
            "dataset": dataset.name,
            "metrics": list(metrics),
            "downsample": meta["downsample"],
            "seed": seed,
        }
    )
    return EvaluationRun(
        model_label=model_label,
        dataset_name=dataset.name,
        metrics=metrics,
        probabilistic=model.probabilistic,
        saliency=saliency_label,
        scores=scores,
        aggregates=aggregates,
        provenance=meta,
    )


def config_hash(config: Mapping[str, object]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_run(run: EvaluationRun, json_path: str | Path,
             csv_path: str | Path) -> None:
    """Write the score table as CSV and the run summary as JSON."""
    json_path = Path(json_path)
    csv_path = Path(csv_path)
    write_scores_csv(run.scores, csv_path)
    try:
        csv_ref = str(csv_path.relative_to(json_path.parent))
    except ValueError:
        csv_ref = str(csv_path)
    payload = {
        "model": run.model_label,
        "dataset": run.dataset_name,
        "metrics": list(run.metrics),
        "probabilistic": run.probabilistic,
        "saliency": run.saliency,
        "aggregates": run.aggregates,
        "n_scores": len(run.scores),
        "scores_csv": csv_ref,
        "provenance": run.provenance,
    }
    json_path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_run(path: str | Path) -> EvaluationRun:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    csv_ref = Path(payload["scores_csv"])
    if not csv_ref.is_absolute():
        csv_ref = path.parent / csv_ref
    scores = tuple(read_scores_csv(csv_ref)) if csv_ref.is_file() else ()
    return EvaluationRun(
        model_label=payload["model"],
        dataset_name=payload["dataset"],
        metrics=tuple(payload["metrics"]),
        probabilistic=bool(payload["probabilistic"]),
        saliency=payload.get("saliency", "none"),
        scores=scores,
        aggregates={k: float(v) for k, v in payload["aggregates"].items()},
        provenance=payload.get("provenance", {}),
    )


REPORT_COLUMNS = ("model", "saliency", "ll", "ig", "auc", "nss")


def _format_cell(metric: str, value: float | None) -> str:
    if value is None:
        return ""
    if metric == "auc":
        return f"{100.0 * value:.1f}%"
    return f"{value:.4f}"


def report_rows(runs: Sequence[EvaluationRun]) -> list[list[str]]:
    """Formatted table rows: probabilistic models sorted by LL, then the
    non-probabilistic ones sorted by AUC; ties break on the model name."""
    probabilistic = [r for r in runs if r.probabilistic]
    priority_only = [r for r in runs if not r.probabilistic]
    probabilistic.sort(
        key=lambda r: (-r.aggregates.get("ll", -math.inf), r.model_label)
    )
    priority_only.sort(
        key=lambda r: (-r.aggregates.get("auc", -math.inf), r.model_label)
    )
    rows = []
    for run in probabilistic + priority_only:
        agg = run.aggregates
        rows.append(
            [
                run.model_label,
                run.saliency,
                _format_cell("ll", agg.get("ll")),
                _format_cell("ig", agg.get("ig")),
                _format_cell("auc", agg.get("auc")),
                _format_cell("nss", agg.get("nss")),
            ]
        )
    return rows


def report(runs: Sequence[EvaluationRun], fmt: str = "markdown") -> str:
    """Leaderboard over runs, as a markdown table or CSV text.

    Both formats contain identical cell strings; the markdown variant
    adds a blank separator row before the non-probabilistic models.
    """
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    if not runs:
        raise ValueError("no runs to report")
    rows = report_rows(runs)
    if fmt == "csv":
        import csv as _csv
        import io

        buf = io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()

    n_prob = sum(1 for r in runs if r.probabilistic)
    lines = [
        "| " + " | ".join(REPORT_COLUMNS) + " |",
        "| " + " | ".join("---" for _ in REPORT_COLUMNS) + " |",
    ]
    for i, row in enumerate(rows):
        if i == n_prob and 0 < n_prob < len(rows):
            lines.append("| " + " | ".join("" for _ in REPORT_COLUMNS) + " |")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CaseStudyQuery:
    """Filters and size of a disagreement ranking."""

    min_amplitude_dva: float | None = None
    min_distance_to_previous_dva: float | None = None
    top_k: int = 10

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class CaseStudyItem:
    image_id: str
    subject_id: str
    scanpath_index: int
    fixation_index: int
    auc_std: float
    auc_by_model: dict[str, float]

    @property
    def key(self) -> tuple[str, str, int, int]:
        return (
            self.image_id,
            self.subject_id,
            self.scanpath_index,
            self.fixation_index,
        )


def case_study_ranking(
    runs: Sequence[EvaluationRun], dataset: Dataset, query: CaseStudyQuery
) -> list[CaseStudyItem]:
    """Fixations ranked by model disagreement.

    Disagreement is the population standard deviation of the models' AUC
    scores for a single fixation.  Both distance filters are strict:
    a fixation passes only if the saccade amplitude, respectively the
    distance to every previous fixation, exceeds the threshold.
    """
    if len(runs) < 2:
        raise ValueError("case studies need at least two runs to disagree")
    per_run: list[dict[tuple, float]] = []
    for run in runs:
        table = {
            (s.image_id, s.subject_id, s.scanpath_index, s.fixation_index): s.value
            for s in run.scores
            if s.metric == "auc"
        }
        if not table:
            raise ValueError(f"run {run.model_label!r} carries no AUC scores")
        per_run.append(table)
    keys = set(per_run[0])
    for run, table in zip(runs[1:], per_run[1:]):
        if set(table) != keys:
            raise ValueError(
                f"run {run.model_label!r} scored different fixations; "
                "case studies need runs on the same dataset"
            )

    items = []
    for key in sorted(keys):
        image_id, subject_id, scanpath_index, fixation_index = key
        if scanpath_index >= len(dataset.scanpaths):
            raise ValueError("runs do not match the dataset")
        sp = dataset.scanpaths[scanpath_index]
        if sp.image_id != image_id or sp.subject_id != subject_id:
            raise ValueError("runs do not match the dataset")
        meta = dataset.stimuli[image_id]
        target = sp.fixations[fixation_index]
        if query.min_amplitude_dva is not None:
            amplitude = saccade_amplitude_dva(
                sp.fixations[fixation_index - 1], target, meta
            )
            if not amplitude > query.min_amplitude_dva:
                continue
        if query.min_distance_to_previous_dva is not None:
            distances = [
                saccade_amplitude_dva(sp.fixations[j], target, meta)
                for j in range(fixation_index)
            ]
            if not all(d > query.min_distance_to_previous_dva for d in distances):
                continue
        values = np.array([table[key] for table in per_run])
        items.append(
            CaseStudyItem(
                image_id,
                subject_id,
                scanpath_index,
                fixation_index,
                float(values.std()),
                {run.model_label: float(v) for run, v in zip(runs, values)},
            )
        )
    items.sort(key=lambda item: (-item.auc_std, item.key))
    return items[: query.top_k]


def case_study_maps(
    models: Mapping[str, ConditionalModel],
    dataset: Dataset,
    items: Sequence[CaseStudyItem],
) -> dict[tuple[str, tuple], PriorityMap]:
    """Histogram-equalized conditional maps for each (model, case).

    Equalization puts every model's map on the same value scale, so the
    rendered grids are visually comparable; it cannot change any
    rank-based score.
    """
    out = {}
    for item in items:
        sp = dataset.scanpaths[item.scanpath_index]
        meta = dataset.stimuli[sp.image_id]
        history = sp.fixations[: item.fixation_index]
        for label, model in models.items():
            pmap = conditional_prediction(
                model, meta, history, subject_id=sp.subject_id
            )
            out[(label, item.key)] = histogram_equalize(pmap)
    return out


DEFAULT_GENERATOR = {"kind": "kde_mixture"}


class MixtureSpatialModel(ConditionalModel):
    """History-blind sampler from a per-image Gaussian mixture.

    Components are (x_px, y_px, sigma_px, weight) tuples; each component
    is truncated to the grid and renormalized before weighting, and a
    uniform component takes the remaining mass.
    """

    probabilistic = True
    dependency_order = 0

    def __init__(
        self,
        components_by_image: Mapping[str, Sequence[tuple[float, float, float, float]]],
        uniform_weight: float = 0.02,
        downsample: int = 1,
    ):
        if not 0 < uniform_weight <= 1:
            raise ValueError("uniform_weight must lie in (0, 1]")
        self.components_by_image = {
            k: tuple(tuple(c) for c in v) for k, v in components_by_image.items()
        }
        self.uniform_weight = float(uniform_weight)
        self.downsample = int(downsample)
        self._grids: dict[str, PriorityMap] = {}

    def _grid(self, meta: StimulusMeta) -> PriorityMap:
        cached = self._grids.get(meta.image_id)
        if cached is not None:
            return cached
        components = self.components_by_image.get(meta.image_id)
        if components is None:
            raise KeyError(f"no mixture components for image {meta.image_id!r}")
        from .core import cell_centers_px, grid_shape

        shape = grid_shape(meta, self.downsample)
        ys, xs = cell_centers_px(meta, self.downsample)
        values = np.full(shape, self.uniform_weight / (shape[0] * shape[1]))
        for x, y, sigma, weight in components:
            gy = np.exp(-0.5 * ((ys - y) / sigma) ** 2)
            gx = np.exp(-0.5 * ((xs - x) / sigma) ** 2)
            bump = gy[:, None] * gx[None, :]
            values += weight * bump / bump.sum()
        pmap = PriorityMap(values / values.sum(), "probability", self.downsample)
        self._grids[meta.image_id] = pmap
        return pmap

    def initialize(self, meta, first_fixation, subject_id=None):
        return meta

    def update_state(self, state, fixation):
        return state

    def compute_priority_map(self, state: StimulusMeta) -> PriorityMap:
        return self._grid(state)


def build_generator_model(
    config: Mapping[str, object],
    stimuli: Mapping[str, StimulusMeta],
    rng: np.random.Generator,
    downsample: int,
) -> tuple[ConditionalModel, dict]:
    """Generating model and its ground-truth description."""
    kind = config.get("kind", "kde_mixture")
    if kind == "kde_mixture":
        n_components = int(config.get("n_components", 2))
        some_meta = next(iter(stimuli.values()))
        scale = min(some_meta.width_px, some_meta.height_px)
        component_sigma = float(config.get("component_sigma_px", 0.06 * scale))
        center_weight = float(config.get("center_weight", 0.35))
        center_sigma = float(config.get("center_sigma_px", 0.22 * scale))
        uniform_weight = float(config.get("uniform_weight", 0.02))
        component_weight = (1.0 - center_weight - uniform_weight) / n_components
        if component_weight <= 0:
            raise ValueError("mixture weights leave no mass for components")
        components: dict[str, list[tuple[float, float, float, float]]] = {}
        for image_id in sorted(stimuli):
            meta = stimuli[image_id]
            per_image = [
                (
                    meta.width_px / 2.0,
                    meta.height_px / 2.0,
                    center_sigma,
                    center_weight,
                )
            ]
            for _ in range(n_components):
                x = rng.uniform(0.15, 0.85) * meta.width_px
                y = rng.uniform(0.15, 0.85) * meta.height_px
                per_image.append((x, y, component_sigma, component_weight))
            components[image_id] = per_image
        model = MixtureSpatialModel(components, uniform_weight, downsample)
        truth = {
            "kind": kind,
            "component_sigma_px": component_sigma,
            "center_sigma_px": center_sigma,
            "center_weight": center_weight,
            "uniform_weight": uniform_weight,
            "components": {
                k: [list(c) for c in v] for k, v in components.items()
            },
        }
        return model, truth
    if kind == "jump":
        from .models.jump import JumpModel, JumpModelParams

        params = JumpModelParams(
            kernel=str(config.get("kernel", "cauchy")),
            scale_px=float(config.get("scale_px", 80.0)),
            saliency_exponent=0.0,
        )
        truth = {
            "kind": kind,
            "kernel": params.kernel,
            "scale_px": params.scale_px,
        }
        return JumpModel(params, None, downsample), truth
    if kind == "saccadic_flow":
        from .models.flow import SaccadicFlowModel, SaccadicFlowParams

        params = SaccadicFlowParams(
            mean_x=tuple(config["mean_x"]),
            mean_y=tuple(config["mean_y"]),
            log_var_x=tuple(config["log_var_x"]),
            log_var_y=tuple(config["log_var_y"]),
            corr=float(config.get("corr", 0.0)),
        )
        truth = {
            "kind": kind,
            "mean_x": list(params.mean_x),
            "mean_y": list(params.mean_y),
            "log_var_x": list(params.log_var_x),
            "log_var_y": list(params.log_var_y),
            "corr": params.corr,
        }
        return SaccadicFlowModel(params, downsample), truth
    raise ValueError(f"unknown generator kind {kind!r}")


def generate_synthetic_dataset(
    config: Mapping[str, object], seed: int
) -> tuple[Dataset, dict]:
    """Seeded dataset from a configured generating model.

    The rollout order (images outer, subjects inner) is fixed, so the
    same config and seed always produce the identical dataset.
    """
    required = ("n_images", "n_subjects", "n_fixations")
    for key in required:
        if key not in config:
            raise ValueError(f"synthetic config is missing {key!r}")
    n_images = int(config["n_images"])
    n_subjects = int(config["n_subjects"])
    n_fixations = int(config["n_fixations"])
    if min(n_images, n_subjects, n_fixations) < 1:
        raise ValueError("counts must be positive")
    width = int(config.get("width_px", 256))
    height = int(config.get("height_px", 256))
    px_per_dva = float(config.get("px_per_dva", 16.0))
    downsample = int(config.get("downsample", 8))
    name = str(config.get("name", "synthetic"))

    stimuli = {
        f"img{i:03d}": StimulusMeta(f"img{i:03d}", width, height, px_per_dva)
        for i in range(n_images)
    }
    rng = np.random.default_rng(seed)
    generator_cfg = dict(config.get("generator", DEFAULT_GENERATOR))
    model, truth = build_generator_model(generator_cfg, stimuli, rng, downsample)

    scanpaths = []
    for image_id in sorted(stimuli):
        meta = stimuli[image_id]
        for j in range(n_subjects):
            scanpaths.append(
                sample_scanpath(
                    model, meta, n_fixations, rng, subject_id=f"s{j:02d}"
                )
            )
    dataset = Dataset(name, stimuli, tuple(scanpaths))
    truth_payload = {
        "seed": seed,
        "downsample": downsample,
        "generator": truth,
    }
    return dataset, truth_payload


def resolve_jobs(requested: int | None) -> int:
    """Worker count: the SCANBENCH_JOBS variable overrides the flag."""
    env = os.environ.get("SCANBENCH_JOBS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as err:
            raise ValueError(
                f"SCANBENCH_JOBS must be an integer, got {env!r}"
            ) from err
    return max(1, requested if requested is not None else 1)
