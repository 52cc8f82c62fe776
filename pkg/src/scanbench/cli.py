"""Command-line entry points.

Subcommands::

    load              validate / preprocess a dataset, print a summary
    synth             sample a seeded dataset from a generating model
    fit-centerbias    image-independent spatial bias bandwidth
    fit-goldstandard  within-image mixture: bandwidth and weights
    fit-model         jump, saccadic-flow or scenewalk parameters
    evaluate          score a model, write scores CSV plus run JSON
    report            leaderboard table over saved runs
    case-studies      export and render highest-disagreement fixations

Exit status is 0 on success, 2 for bad inputs or arguments, and 1 for
internal failures.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import traceback
from pathlib import Path

from .bench import (
    CaseStudyQuery,
    case_study_maps,
    case_study_ranking,
    evaluate,
    generate_synthetic_dataset,
    load_run,
    report,
    resolve_jobs,
    save_run,
)
from .core import Dataset, PreprocessPolicy, ScanbenchError, preprocess_dataset
from .density import (
    CENTER_BIAS_UNIFORM_WEIGHT,
    DEFAULT_BANDWIDTH_PX,
    MIT_INTERVALS,
    CenterBias,
    FixationNumberCenterBias,
    GoldStandard,
    KdeParams,
    fit_center_bias_bandwidth,
    fit_gold_standard,
)
from .io import SaliencyStore, load_dataset, save_dataset, write_smap
from .fitting import load_fit_parameters, save_fit_result, subset_sample
from .models import (
    JumpModel,
    JumpModelParams,
    SaccadicFlowModel,
    SaccadicFlowParams,
    SceneWalkModel,
    SceneWalkParams,
    UniformModel,
    fit_jump_model,
    fit_saccadic_flow,
    fit_scenewalk,
    flow_mean_bits,
    saccade_pairs_normalized,
)

MODEL_NAMES = (
    "uniform",
    "centerbias",
    "fixnum-centerbias",
    "goldstandard",
    "goldstandard-joint",
    "jump",
    "saccadic-flow",
    "scenewalk",
)

FITTABLE_MODELS = ("jump", "saccadic-flow", "scenewalk")

_FLOW_KEYS = ("mean_x", "mean_y", "log_var_x", "log_var_y")

_SCENEWALK_KEYS = (
    "sigma_attention_dva",
    "sigma_inhibition_dva",
    "tau_attention_ms",
    "tau_inhibition_ms",
    "inhibition_strength",
    "exponent",
    "uniform_floor",
    "default_duration_ms",
)


def build_model(
    name: str,
    params: dict,
    dataset: Dataset,
    saliency_store: SaliencyStore | None,
    downsample: int,
):
    """Instantiate a registered model from a loose parameter dict.

    Unknown keys (``kind`` tags and the like) are ignored so that both
    fit-result files and hand-written parameter files work.
    """
    bandwidth = float(params.get("bandwidth_px", DEFAULT_BANDWIDTH_PX))
    uniform = float(params.get("uniform_weight", CENTER_BIAS_UNIFORM_WEIGHT))
    if name == "uniform":
        return UniformModel(downsample)
    if name == "centerbias":
        return CenterBias(dataset, bandwidth, uniform, downsample)
    if name == "fixnum-centerbias":
        intervals = params.get("interval_edges", MIT_INTERVALS)
        return FixationNumberCenterBias(
            dataset, intervals, bandwidth, uniform, downsample
        )
    if name in ("goldstandard", "goldstandard-joint"):
        kde = KdeParams(
            bandwidth_px=bandwidth,
            uniform_weight=float(params.get("uniform_weight", 0.01)),
            centerbias_weight=float(params.get("centerbias_weight", 0.0)),
        )
        centerbias = None
        if kde.centerbias_weight > 0:
            centerbias = CenterBias(
                dataset,
                float(params.get("centerbias_bandwidth_px", DEFAULT_BANDWIDTH_PX)),
                downsample=downsample,
            )
        mode = "joint" if name.endswith("-joint") else "loso"
        return GoldStandard(dataset, kde, centerbias, downsample, mode=mode)
    if name == "jump":
        jump_params = JumpModelParams(
            kernel=str(params.get("kernel", "cauchy")),
            scale_px=float(params.get("scale_px", 100.0)),
            saliency_exponent=float(
                params.get(
                    "saliency_exponent", 1.0 if saliency_store is not None else 0.0
                )
            ),
        )
        return JumpModel(jump_params, saliency_store, downsample)
    if name == "saccadic-flow":
        missing = [k for k in _FLOW_KEYS if k not in params]
        if missing:
            raise ValueError(
                "saccadic-flow needs fitted parameters; missing "
                + ", ".join(missing)
            )
        flow_params = SaccadicFlowParams(
            mean_x=tuple(params["mean_x"]),
            mean_y=tuple(params["mean_y"]),
            log_var_x=tuple(params["log_var_x"]),
            log_var_y=tuple(params["log_var_y"]),
            corr=float(params.get("corr", 0.0)),
        )
        return SaccadicFlowModel(flow_params, downsample)
    if name == "scenewalk":
        kwargs = {k: params[k] for k in _SCENEWALK_KEYS if k in params}
        return SceneWalkModel(SceneWalkParams(**kwargs), saliency_store, downsample)
    raise ValueError(f"unknown model {name!r}")


def _load_params(path: str | None) -> dict:
    return load_fit_parameters(path) if path else {}


def _saliency_store(args) -> SaliencyStore | None:
    directory = getattr(args, "saliency_dir", None)
    if directory is None:
        return None
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"saliency directory {directory} does not exist")
    return SaliencyStore(directory)


def _fit_dataset(args) -> tuple[Dataset, str]:
    """Dataset for a fit command, optionally a seeded image subset."""
    ds = load_dataset(args.dataset)
    if args.subset is not None:
        return subset_sample(ds, args.subset, args.seed), "subset"
    return ds, "train_all"


def _safe_name(label: str) -> str:
    return re.sub(r"[^\w.+-]", "_", label)


def cmd_load(args) -> int:
    ds = load_dataset(args.dataset, bounds=args.bounds)
    if args.inject_central or args.replace_invalid_initial or args.dedup:
        policy = PreprocessPolicy(
            inject_central=args.inject_central,
            replace_invalid_initial=args.replace_invalid_initial,
            collapse_duplicates=args.dedup,
            bounds=args.bounds,
        )
        ds = preprocess_dataset(ds, policy)
    n_fix = sum(len(sp.fixations) for sp in ds.scanpaths)
    print(f"dataset: {ds.name}")
    print(
        f"images: {len(ds.image_ids)}  subjects: {len(ds.subjects)}  "
        f"scanpaths: {len(ds.scanpaths)}"
    )
    print(f"fixations: {n_fix} (mean {n_fix / len(ds.scanpaths):.2f} per scanpath)")
    if args.out:
        save_dataset(ds, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_synth(args) -> int:
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError(f"{args.config}: expected a JSON object")
    ds, truth = generate_synthetic_dataset(config, args.seed)
    out = Path(args.out)
    save_dataset(ds, out)
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"wrote {len(ds.scanpaths)} scanpaths over {len(ds.image_ids)} images "
        f"to {out} (truth: {truth_path})"
    )
    return 0


def cmd_fit_centerbias(args) -> int:
    ds, split = _fit_dataset(args)
    bandwidth, bits, evaluations = fit_center_bias_bandwidth(
        ds, downsample=args.downsample
    )
    save_fit_result(
        args.params,
        parameters={
            "kind": "centerbias",
            "bandwidth_px": bandwidth,
            "uniform_weight": CENTER_BIAS_UNIFORM_WEIGHT,
        },
        objective_bits_per_fix=bits,
        split=split,
        seed=args.seed,
        iterations=evaluations,
    )
    print(f"bandwidth_px: {bandwidth:.3f}  held-out bits/fix: {bits:.4f}")
    print(f"wrote {args.params}")
    return 0


def cmd_fit_goldstandard(args) -> int:
    ds, split = _fit_dataset(args)
    fit = fit_gold_standard(ds, downsample=args.downsample, max_cycles=args.max_cycles)
    save_fit_result(
        args.params,
        parameters={
            "kind": "goldstandard",
            "bandwidth_px": fit.params.bandwidth_px,
            "uniform_weight": fit.params.uniform_weight,
            "centerbias_weight": fit.params.centerbias_weight,
            "centerbias_bandwidth_px": fit.centerbias_bandwidth_px,
        },
        objective_bits_per_fix=fit.objective_bits,
        split="loso" if split == "train_all" else split,
        seed=args.seed,
        iterations=fit.cycles,
        extra={
            "joint_bits_per_fix": fit.joint_bits,
            "evaluations": fit.evaluations,
        },
    )
    print(
        f"bandwidth_px: {fit.params.bandwidth_px:.3f}  "
        f"uniform: {fit.params.uniform_weight:.4f}  "
        f"centerbias: {fit.params.centerbias_weight:.4f}"
    )
    print(
        f"held-out bits/fix: {fit.objective_bits:.4f}  "
        f"joint bits/fix: {fit.joint_bits:.4f}"
    )
    print(f"wrote {args.params}")
    return 0


def cmd_fit_model(args) -> int:
    ds, split = _fit_dataset(args)
    store = _saliency_store(args)
    if args.model == "jump":
        params, result = fit_jump_model(
            ds,
            kernel=args.kernel,
            downsample=args.downsample,
            saliency_store=store,
            split=split,
            max_cycles=args.max_cycles,
        )
        save_fit_result(
            args.params,
            parameters={
                "kind": "jump",
                "kernel": params.kernel,
                "scale_px": params.scale_px,
                "saliency_exponent": params.saliency_exponent,
            },
            objective_bits_per_fix=result.objective,
            split=result.split,
            seed=args.seed,
            iterations=result.cycles,
        )
        print(
            f"kernel: {params.kernel}  scale_px: {params.scale_px:.3f}  "
            f"bits/fix: {result.objective:.4f}"
        )
    elif args.model == "saccadic-flow":
        prev_uv, next_uv = saccade_pairs_normalized(ds)
        params = fit_saccadic_flow(prev_uv, next_uv)
        bits = flow_mean_bits(ds, params, args.downsample)
        save_fit_result(
            args.params,
            parameters={
                "kind": "saccadic_flow",
                "mean_x": list(params.mean_x),
                "mean_y": list(params.mean_y),
                "log_var_x": list(params.log_var_x),
                "log_var_y": list(params.log_var_y),
                "corr": params.corr,
            },
            objective_bits_per_fix=bits,
            split=split,
            seed=args.seed,
            iterations=1,
        )
        print(f"fitted on {len(prev_uv)} saccades  bits/fix: {bits:.4f}")
    else:
        if store is None:
            raise ValueError("scenewalk fitting needs --saliency-dir")
        params, result = fit_scenewalk(
            ds,
            store,
            downsample=args.downsample,
            split=split,
            max_cycles=args.max_cycles,
        )
        save_fit_result(
            args.params,
            parameters={
                "kind": "scenewalk",
                "sigma_attention_dva": params.sigma_attention_dva,
                "sigma_inhibition_dva": params.sigma_inhibition_dva,
                "tau_attention_ms": params.tau_attention_ms,
                "tau_inhibition_ms": params.tau_inhibition_ms,
                "inhibition_strength": params.inhibition_strength,
                "exponent": params.exponent,
                "uniform_floor": params.uniform_floor,
                "default_duration_ms": params.default_duration_ms,
            },
            objective_bits_per_fix=result.objective,
            split=result.split,
            seed=args.seed,
            iterations=result.cycles,
        )
        print(f"bits/fix: {result.objective:.4f}")
    print(f"wrote {args.params}")
    return 0


def cmd_evaluate(args) -> int:
    ds = load_dataset(args.dataset, bounds=args.bounds)
    store = _saliency_store(args)
    model = build_model(
        args.model, _load_params(args.params), ds, store, args.downsample
    )
    metric_names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    centerbias = None
    if args.centerbias_params:
        cb = load_fit_parameters(args.centerbias_params)
        centerbias = CenterBias(
            ds,
            float(cb.get("bandwidth_px", DEFAULT_BANDWIDTH_PX)),
            float(cb.get("uniform_weight", CENTER_BIAS_UNIFORM_WEIGHT)),
            args.downsample,
        )
    provenance = {
        "model_kind": args.model,
        "dataset_path": str(Path(args.dataset).resolve()),
        "params_file": str(Path(args.params).resolve()) if args.params else None,
        "saliency_dir": (
            str(Path(args.saliency_dir).resolve()) if args.saliency_dir else None
        ),
        "centerbias_params_file": (
            str(Path(args.centerbias_params).resolve())
            if args.centerbias_params
            else None
        ),
    }
    run = evaluate(
        model,
        ds,
        metrics=metric_names,
        centerbias=centerbias,
        jobs=resolve_jobs(args.jobs),
        seed=args.seed,
        model_label=args.label or args.model,
        saliency_label=Path(args.saliency_dir).name if args.saliency_dir else "none",
        provenance=provenance,
    )
    out = Path(args.out)
    run_json = out.with_suffix(".run.json")
    save_run(run, run_json, out)
    for metric in run.metrics:
        if metric in run.aggregates:
            print(f"{metric}: {run.aggregates[metric]:.6f}")
    print(f"wrote {out} and {run_json}")
    return 0


def cmd_report(args) -> int:
    runs = [load_run(p) for p in args.runs]
    text = report(runs, fmt=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_case_studies(args) -> int:
    runs = [load_run(p) for p in args.runs]
    labels = [run.model_label for run in runs]
    if len(set(labels)) != len(labels):
        raise ValueError("runs must carry distinct model labels")
    for run in runs:
        if not run.scores:
            raise ValueError(
                f"run {run.model_label!r} has no score table; "
                "keep the scores CSV next to the run JSON"
            )

    if args.dataset:
        dataset_path = args.dataset
    else:
        paths = {run.provenance.get("dataset_path") for run in runs}
        if len(paths) != 1 or None in paths:
            raise ValueError(
                "runs disagree on the dataset; pass --dataset explicitly"
            )
        dataset_path = paths.pop()
    ds = load_dataset(dataset_path)

    query = CaseStudyQuery(
        min_amplitude_dva=args.min_amplitude_dva,
        min_distance_to_previous_dva=args.no_return_dva,
        top_k=args.top,
    )
    items = case_study_ranking(runs, ds, query)
    if not items:
        print("no fixations pass the filters", file=sys.stderr)
        return 0

    models = {}
    for run in runs:
        kind = run.provenance.get("model_kind")
        if kind is None:
            raise ValueError(
                f"run {run.model_label!r} records no model kind; "
                "re-evaluate with this toolkit to render its maps"
            )
        params_file = run.provenance.get("params_file")
        saliency_dir = run.provenance.get("saliency_dir")
        store = SaliencyStore(saliency_dir) if saliency_dir else None
        models[run.model_label] = build_model(
            kind,
            _load_params(params_file),
            ds,
            store,
            int(run.provenance.get("downsample", 1)),
        )
    maps = case_study_maps(models, ds, items)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {
        "query": {
            "min_amplitude_dva": query.min_amplitude_dva,
            "no_return_dva": query.min_distance_to_previous_dva,
            "top": query.top_k,
        },
        "models": labels,
        "cases": [],
    }
    csv_lines = [
        "rank,image_id,subject_id,scanpath_index,fixation_index,auc_std,"
        + ",".join(_safe_name(label) for label in labels)
    ]
    for rank, item in enumerate(items, 1):
        case_dir = out / f"case{rank:02d}"
        case_dir.mkdir(exist_ok=True)
        map_files = {}
        for label in labels:
            smap_path = case_dir / f"{_safe_name(label)}.smap"
            write_smap(smap_path, maps[(label, item.key)])
            map_files[label] = str(smap_path.relative_to(out))
        index["cases"].append(
            {
                "rank": rank,
                "image_id": item.image_id,
                "subject_id": item.subject_id,
                "scanpath_index": item.scanpath_index,
                "fixation_index": item.fixation_index,
                "auc_std": item.auc_std,
                "auc_by_model": item.auc_by_model,
                "maps": map_files,
            }
        )
        csv_lines.append(
            f"{rank},{item.image_id},{item.subject_id},{item.scanpath_index},"
            f"{item.fixation_index},{item.auc_std!r},"
            + ",".join(repr(item.auc_by_model[label]) for label in labels)
        )
    (out / "ranking.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    (out / "index.json").write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if not args.no_render:
        from .render import render_case_studies

        render_case_studies(items, maps, ds, out)
    print(f"wrote {len(items)} cases to {out}")
    return 0


def _add_fit_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dataset", required=True, help="scanpath JSONL file")
    sub.add_argument("--params", required=True, help="output JSON path")
    sub.add_argument("--downsample", type=int, default=1, metavar="K")
    sub.add_argument(
        "--subset", type=int, default=None, metavar="N",
        help="fit on a seeded sample of N images",
    )
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanbench",
        description="Fixation-by-fixation scanpath model benchmarking.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("load", help="validate and preprocess a dataset")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--inject-central", action="store_true",
                     help="prepend a forced central fixation")
    sub.add_argument("--replace-invalid-initial", action="store_true",
                     help="replace a flagged initial fixation by the center")
    sub.add_argument("--dedup", action="store_true",
                     help="collapse consecutive duplicate fixations")
    sub.add_argument("--bounds", choices=("reject", "clamp"), default="reject")
    sub.add_argument("--out", help="write the processed dataset here")
    sub.set_defaults(func=cmd_load)

    sub = commands.add_parser("synth", help="generate a synthetic dataset")
    sub.add_argument("--config", required=True, help="generator config JSON")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output JSONL path")
    sub.set_defaults(func=cmd_synth)

    sub = commands.add_parser(
        "fit-centerbias", help="fit the image-independent bias bandwidth"
    )
    _add_fit_common(sub)
    sub.set_defaults(func=cmd_fit_centerbias)

    sub = commands.add_parser(
        "fit-goldstandard", help="fit the within-image mixture"
    )
    _add_fit_common(sub)
    sub.add_argument("--max-cycles", type=int, default=50)
    sub.set_defaults(func=cmd_fit_goldstandard)

    sub = commands.add_parser("fit-model", help="fit a scanpath model")
    _add_fit_common(sub)
    sub.add_argument("--model", required=True, choices=FITTABLE_MODELS)
    sub.add_argument("--saliency-dir", help="directory of <image_id>.smap grids")
    sub.add_argument("--kernel", choices=("cauchy", "gaussian"), default="cauchy")
    sub.add_argument("--max-cycles", type=int, default=50)
    sub.set_defaults(func=cmd_fit_model)

    sub = commands.add_parser("evaluate", help="score a model on a dataset")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--model", required=True, choices=MODEL_NAMES)
    sub.add_argument("--params", help="fitted or hand-written parameter JSON")
    sub.add_argument("--saliency-dir", help="directory of <image_id>.smap grids")
    sub.add_argument("--metrics", default="ll,ig,auc,nss",
                     help="comma-separated subset of ll,ig,auc,nss")
    sub.add_argument("--out", required=True, help="scores CSV path")
    sub.add_argument("--jobs", type=int, default=None,
                     help="worker processes (SCANBENCH_JOBS overrides)")
    sub.add_argument("--downsample", type=int, default=1, metavar="K")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--centerbias-params",
                     help="baseline parameters for information gain")
    sub.add_argument("--label", help="model label in reports")
    sub.add_argument("--bounds", choices=("reject", "clamp"), default="reject")
    sub.set_defaults(func=cmd_evaluate)

    sub = commands.add_parser("report", help="tabulate saved runs")
    sub.add_argument("runs", nargs="+", help="run JSON files")
    sub.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_report)

    sub = commands.add_parser(
        "case-studies", help="rank and render model disagreements"
    )
    sub.add_argument("--runs", nargs="+", required=True, help="run JSON files")
    sub.add_argument("--dataset", help="override the runs' recorded dataset")
    sub.add_argument("--min-amplitude-dva", type=float, default=None)
    sub.add_argument("--no-return-dva", type=float, default=None,
                     help="minimum distance to every earlier fixation")
    sub.add_argument("--top", type=int, default=10)
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--no-render", action="store_true",
                     help="skip PNG rendering, keep SMAP/CSV/JSON only")
    sub.set_defaults(func=cmd_case_studies)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    try:
        return args.func(args)
    except ScanbenchError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, FileNotFoundError, IsADirectoryError,
            NotADirectoryError, PermissionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
