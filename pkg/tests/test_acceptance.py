"""Release gate: one test and one printed verdict line per criterion.

Each test checks a property end to end and prints a single PASS or FAIL
line with the measured numbers, so a plain ``pytest -v tests/test_acceptance.py``
doubles as the sign-off protocol.  Tolerances and budgets are stated in
the verdict labels.  Monte-Carlo checks run under fixed seeds chosen
once up front, which keeps the suite deterministic while the per-cell
bounds stay at four multinomial sigmas.
"""

import contextlib
import io
import itertools
import json
import math
import time

import numpy as np
import pytest

from scanbench.bench import (
    CaseStudyQuery,
    EvaluationRun,
    case_study_ranking,
    evaluate,
    generate_synthetic_dataset,
)
from scanbench.bestofk import (
    DiscreteDistribution,
    best_of_k_density,
    best_of_k_with_rejection,
)
from scanbench.cli import main as cli_main
from scanbench.core import Dataset, Fixation, PriorityMap, Scanpath, StimulusMeta
from scanbench.core import probability_map, uniform_map
from scanbench.density import fit_gold_standard
from scanbench.metrics import (
    FixationScore,
    auc_uniform,
    histogram_equalize,
    log_likelihood,
    nss,
)
from scanbench.models import UniformModel
from scanbench.models.base import conditional_prediction, sample_from_map
from scanbench.models.flow import (
    SaccadicFlowModel,
    SaccadicFlowParams,
    fit_saccadic_flow,
    poly_features,
)
from scanbench.models.jump import JumpModel, JumpModelParams, fit_jump_model
from scanbench.models.scenewalk import SceneWalkModel, SceneWalkParams

from util import make_meta, make_path


def _verdict(ok: bool, label: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {label}", flush=True)
    assert ok, label


# --- 1. closed-form winner distribution vs brute-force enumeration ----------


def _enumerated_winner_mass(probs, gains, n, fallback=None):
    """Brute force over all ordered candidate tuples.

    A tuple's winner is its highest finite-gain draw; exact ties split
    the tuple's mass evenly between the tied draws.  Tuples without any
    accepted draw hand their mass to ``fallback``.
    """
    m = len(probs)
    out = np.zeros(m)
    for combo in itertools.product(range(m), repeat=n):
        mass = math.prod(probs[i] for i in combo)
        live = [i for i in combo if math.isfinite(gains[i])]
        if not live:
            out += mass * fallback
            continue
        top = max(gains[i] for i in live)
        winners = [i for i in live if gains[i] == top]
        for i in winners:
            out[i] += mass / len(winners)
    return out


def _random_instance(rng):
    size = int(rng.integers(1, 7))
    n = int(rng.integers(1, 5))
    probs = rng.dirichlet(np.ones(size))
    if size > 2 and rng.random() < 0.25:
        probs[int(rng.integers(size))] = 0.0
        probs = probs / probs.sum()
    if size > 1 and rng.random() < 0.3:
        gains = rng.choice([-0.5, 0.25, 1.0], size=size)
    else:
        gains = rng.normal(size=size)
    support = rng.permutation(64)[:size]
    return support, probs, gains, n


def test_01_best_of_k_matches_enumeration():
    rng = np.random.default_rng(12)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        support, probs, gains, n = _random_instance(rng)
        closed = best_of_k_density(DiscreteDistribution(support, probs, gains), n)
        oracle = _enumerated_winner_mass(probs, gains, n)
        worst = max(worst, float(np.abs(closed.probabilities - oracle).max()))

    worst_rejection = 0.0
    for _ in range(50):
        support, probs, gains, n = _random_instance(rng)
        while len(support) < 2:
            support, probs, gains, n = _random_instance(rng)
        rejected = rng.random(len(support)) < 0.4
        rejected[int(rng.integers(len(support)))] = True
        rejected[int(np.argmax(probs))] = False
        gains = np.where(rejected, -np.inf, gains)
        accepted = ~rejected
        fb_probs = rng.dirichlet(np.ones(int(accepted.sum())))
        fallback = DiscreteDistribution(
            support[accepted], fb_probs, np.zeros(int(accepted.sum()))
        )
        closed = best_of_k_with_rejection(
            DiscreteDistribution(support, probs, gains), n, fallback
        )
        fb_full = np.zeros(len(support))
        fb_full[accepted] = fb_probs
        oracle = _enumerated_winner_mass(probs, gains, n, fb_full)[accepted]
        worst_rejection = max(
            worst_rejection, float(np.abs(closed.probabilities - oracle).max())
        )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and worst_rejection <= 1e-12 and elapsed < 5.0
    _verdict(
        ok,
        "best-of-k closed form vs enumeration: max cell error "
        f"{worst:.2e} plain / {worst_rejection:.2e} with rejection "
        f"(limit 1e-12), {elapsed:.2f}s < 5s",
    )


# --- 2. frozen metric oracle values ------------------------------------------


def test_02_metric_oracle_values():
    quad = PriorityMap(np.array([[0.1, 0.2], [0.3, 0.4]]), "probability")
    auc_top = auc_uniform(quad, Fixation(1.0, 1.0))
    auc_bottom = auc_uniform(quad, Fixation(0.0, 0.0))

    spiked = PriorityMap(np.array([[1.0, 1.0], [1.0, 5.0]]), "priority")
    nss_err = abs(nss(spiked, Fixation(1.0, 1.0)) - math.sqrt(3.0))

    flat = uniform_map((8, 8))
    ll_flat = log_likelihood(flat, Fixation(3.0, 5.0))
    auc_flat = auc_uniform(flat, Fixation(6.0, 2.0))

    ok = (
        auc_top == 0.875
        and auc_bottom == 0.125
        and nss_err <= 1e-9
        and ll_flat == 0.0
        and auc_flat == 0.5
    )
    _verdict(
        ok,
        f"metric oracles: corner AUC {auc_top}/{auc_bottom} (want 0.875/0.125), "
        f"spiked NSS off sqrt(3) by {nss_err:.1e} (limit 1e-9), "
        f"flat LL {ll_flat} (want 0.0), flat AUC {auc_flat} (want 0.5)",
    )


# --- 3. rank and affine invariance -------------------------------------------


def test_03_rank_and_affine_invariance():
    rng = np.random.default_rng(3)
    auc_exact = True
    equalized_exact = True
    nss_err = 0.0
    for trial in range(50):
        values = rng.normal(size=(12, 16))
        pmap = PriorityMap(values, "priority")
        fix = Fixation(int(rng.integers(16)) + 0.5, int(rng.integers(12)) + 0.5)

        a = float(rng.uniform(0.2, 3.0))
        b = float(rng.uniform(-2.0, 2.0))
        c = float(rng.uniform(0.1, 1.5))
        if trial % 3 == 0:
            monotone = a * values + b
        elif trial % 3 == 1:
            monotone = a * np.exp(c * values) + b
        else:
            monotone = a * values**3 + c * values
        auc_exact &= auc_uniform(
            PriorityMap(monotone, "priority"), fix
        ) == auc_uniform(pmap, fix)

        affine = PriorityMap(a * values + b, "priority")
        nss_err = max(nss_err, abs(nss(affine, fix) - nss(pmap, fix)))

        dense = probability_map(rng.random((9, 11)) + 1e-3)
        fix2 = Fixation(int(rng.integers(11)) + 0.5, int(rng.integers(9)) + 0.5)
        equalized_exact &= auc_uniform(histogram_equalize(dense), fix2) == auc_uniform(
            dense, fix2
        )
    ok = auc_exact and nss_err <= 1e-9 and equalized_exact
    _verdict(
        ok,
        "invariances over 50 trials each: AUC exact under monotone transforms "
        f"({auc_exact}), NSS affine error {nss_err:.1e} <= 1e-9, "
        f"equalization keeps AUC exactly ({equalized_exact})",
    )


# --- 4. per-fixation scores reconstruct the joint scanpath probability -------


def test_04_chain_rule_reconstructs_joint_log_prob():
    meta = StimulusMeta("chain", 64, 64, 16.0)
    model = JumpModel(JumpModelParams("cauchy", 18.0, 0.0), None, 1)
    rng = np.random.default_rng(4)
    paths = tuple(
        Scanpath(
            "chain",
            f"s{i:02d}",
            tuple(
                Fixation(float(rng.uniform(0, 64)), float(rng.uniform(0, 64)))
                for _ in range(6)
            ),
            forced_initial=True,
        )
        for i in range(20)
    )
    ds = Dataset("chainds", {"chain": meta}, paths)
    run = evaluate(model, ds, metrics=("ll",))

    worst = 0.0
    for sp_idx, sp in enumerate(ds.scanpaths):
        lls = [s.value for s in run.scores if s.scanpath_index == sp_idx]
        from_scores = sum(lls) - len(lls) * math.log2(64 * 64)
        product = 1.0
        for i in range(1, len(sp.fixations)):
            pmap = conditional_prediction(model, meta, sp.fixations[:i])
            product *= pmap.value_at(sp.fixations[i])
        worst = max(worst, abs(from_scores - math.log2(product)))
    _verdict(
        worst <= 1e-9,
        "chain rule: summed conditional scores minus the uniform offset equal "
        f"the joint log2 probability, max gap {worst:.2e} <= 1e-9 "
        "over 20 scanpaths",
    )


# --- 5. one-step sampling frequencies match the conditional maps -------------


class _FixedStore:
    """Saliency source returning one fixed grid for every stimulus."""

    def __init__(self, grid):
        self.grid = np.asarray(grid, dtype=np.float64)

    def grid_for(self, meta, downsample):
        return self.grid


def test_05_sampling_frequencies_match_maps():
    meta = StimulusMeta("mc", 32, 32, 8.0)
    history = [Fixation(10.5, 20.5, 200.0), Fixation(16.5, 14.5, 250.0)]
    constant = lambda c: (c, 0.0, 0.0, 0.0, 0.0, 0.0)  # noqa: E731
    saliency = np.random.default_rng(0).random((32, 32)) + 0.05
    models = {
        "uniform": UniformModel(1),
        "jump": JumpModel(JumpModelParams("cauchy", 5.0, 0.0), None, 1),
        "flow": SaccadicFlowModel(
            SaccadicFlowParams(
                constant(0.05), constant(-0.03), constant(-3.0), constant(-3.2), 0.4
            ),
            1,
        ),
        "scenewalk": SceneWalkModel(SceneWalkParams(), _FixedStore(saliency), 1),
    }
    n = 100_000
    start = time.perf_counter()
    margins = {}
    for name, model in models.items():
        pmap = conditional_prediction(model, meta, history)
        p = pmap.values.ravel()
        rng = np.random.default_rng(0)
        counts = np.zeros(p.size)
        for _ in range(n):
            row, col = pmap.cell_of(sample_from_map(pmap, rng))
            counts[row * pmap.width + col] += 1
        bound = 4.0 * np.sqrt(p * (1.0 - p) / n) + 1.0 / n
        margins[name] = float((np.abs(counts / n - p) - bound).max())
    elapsed = time.perf_counter() - start
    worst = max(margins.values())
    ok = worst <= 0.0 and elapsed < 60.0
    _verdict(
        ok,
        f"one-step sampling, 1e5 draws on 32x32: every cell within "
        f"4 sigma + 1/n of its map probability for {', '.join(margins)} "
        f"(worst margin {worst:.1e}), {elapsed:.1f}s < 60s",
    )


# --- 6. parameter recovery on synthetic data ---------------------------------


def test_06_parameter_recovery():
    # (a) spatial-pool bandwidth from mixture data with a known blob width.
    sigma = 20.0
    config = {
        "n_images": 20, "n_subjects": 8, "n_fixations": 8,
        "width_px": 128, "height_px": 128, "px_per_dva": 16.0,
        "downsample": 4, "name": "gold-recovery",
        "generator": {
            "kind": "kde_mixture", "n_components": 3,
            "component_sigma_px": sigma, "center_sigma_px": sigma,
            "center_weight": 0.25, "uniform_weight": 0.02,
        },
    }
    ds, _ = generate_synthetic_dataset(config, seed=101)
    start = time.perf_counter()
    fit = fit_gold_standard(ds, downsample=4)
    gold_time = time.perf_counter() - start
    bandwidth = fit.params.bandwidth_px
    gold_ok = sigma / 2 <= bandwidth <= 2 * sigma and gold_time < 120.0

    # (b) mean-offset polynomials from continuously sampled saccade pairs.
    rng = np.random.default_rng(9)
    true_mx = np.array([0.18, -0.35, 0.10, 0.12, -0.08, 0.05])
    true_my = np.array([-0.12, 0.05, -0.30, 0.06, 0.10, 0.04])
    prev = rng.uniform(0.05, 0.95, size=(10_000, 2))
    phi = poly_features(prev[:, 0], prev[:, 1])
    nxt = prev + np.column_stack([phi @ true_mx, phi @ true_my])
    nxt = nxt + rng.normal(0.0, math.exp(0.5 * -6.0), size=prev.shape)
    start = time.perf_counter()
    flow = fit_saccadic_flow(prev, nxt)
    flow_time = time.perf_counter() - start
    flow_err = max(
        np.linalg.norm(np.array(flow.mean_x) - true_mx) / np.linalg.norm(true_mx),
        np.linalg.norm(np.array(flow.mean_y) - true_my) / np.linalg.norm(true_my),
    )
    flow_ok = flow_err <= 0.10 and flow_time < 120.0

    # (c) heavy-tailed jump scale from a rollout of the same model family.
    true_scale = 40.0
    config_jump = {
        "n_images": 8, "n_subjects": 6, "n_fixations": 8,
        "width_px": 128, "height_px": 128, "px_per_dva": 16.0,
        "downsample": 4, "name": "jump-recovery",
        "generator": {"kind": "jump", "kernel": "cauchy", "scale_px": true_scale},
    }
    ds_jump, _ = generate_synthetic_dataset(config_jump, seed=202)
    start = time.perf_counter()
    jump_params, _ = fit_jump_model(ds_jump, kernel="cauchy", downsample=4)
    jump_time = time.perf_counter() - start
    jump_err = abs(jump_params.scale_px - true_scale) / true_scale
    jump_ok = jump_err <= 0.15 and jump_time < 120.0

    _verdict(
        gold_ok and flow_ok and jump_ok,
        f"parameter recovery: pooled-KDE bandwidth {bandwidth:.1f}px within "
        f"[{sigma / 2:.0f}, {2 * sigma:.0f}] of blob width {sigma:.0f}px; "
        f"flow mean coefficients {100 * flow_err:.1f}% <= 10% on 1e4 saccades; "
        f"jump scale error {100 * jump_err:.1f}% <= 15%; fit times "
        f"{gold_time:.1f}/{flow_time:.1f}/{jump_time:.1f}s < 120s each",
    )


# --- 7..8. command-line pipeline: ordering, determinism, parallelism ---------


def _run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def ladder_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    config = {
        "n_images": 5, "n_subjects": 6, "n_fixations": 6,
        "width_px": 128, "height_px": 128, "px_per_dva": 16.0,
        "downsample": 4, "name": "ladder",
    }
    (root / "config.json").write_text(json.dumps(config), encoding="utf-8")
    code, _, err = _run_cli(
        "synth", "--config", str(root / "config.json"), "--seed", "33",
        "--out", str(root / "ladder.jsonl"),
    )
    assert code == 0, err
    return root


def test_07_baseline_ordering_end_to_end(ladder_dataset):
    root = ladder_dataset
    start = time.perf_counter()
    bits = {}
    for model in ("uniform", "centerbias", "goldstandard", "goldstandard-joint"):
        code, _, err = _run_cli(
            "evaluate", "--dataset", str(root / "ladder.jsonl"),
            "--model", model, "--downsample", "4", "--metrics", "ll",
            "--out", str(root / f"{model}.csv"),
        )
        assert code == 0, err
        payload = json.loads(
            (root / f"{model}.run.json").read_text(encoding="utf-8")
        )
        bits[model] = payload["aggregates"]["ll"]
    elapsed = time.perf_counter() - start
    ok = (
        bits["goldstandard-joint"] >= bits["goldstandard"]
        and bits["goldstandard"] > bits["centerbias"]
        and bits["centerbias"] > bits["uniform"]
        and bits["uniform"] == 0.0
        and elapsed < 60.0
    )
    _verdict(
        ok,
        "baseline ladder via the CLI: "
        f"joint {bits['goldstandard-joint']:.4f} >= "
        f"held-out {bits['goldstandard']:.4f} > "
        f"centerbias {bits['centerbias']:.4f} > "
        f"uniform {bits['uniform']:.4f} == 0, {elapsed:.1f}s < 60s",
    )


def test_08_determinism_and_parallel_equivalence(ladder_dataset, tmp_path):
    root = ladder_dataset
    for jobs, name in (("1", "serial"), ("8", "parallel")):
        code, _, err = _run_cli(
            "evaluate", "--dataset", str(root / "ladder.jsonl"),
            "--model", "centerbias", "--downsample", "4", "--jobs", jobs,
            "--out", str(tmp_path / f"{name}.csv"),
        )
        assert code == 0, err
    csv_equal = (
        (tmp_path / "serial.csv").read_bytes()
        == (tmp_path / "parallel.csv").read_bytes()
    )

    for name in ("one", "two"):
        code, _, err = _run_cli(
            "synth", "--config", str(root / "config.json"), "--seed", "77",
            "--out", str(tmp_path / f"{name}.jsonl"),
        )
        assert code == 0, err
    synth_equal = (
        (tmp_path / "one.jsonl").read_bytes() == (tmp_path / "two.jsonl").read_bytes()
    )
    _verdict(
        csv_equal and synth_equal,
        f"determinism: scores CSV byte-identical for 1 vs 8 jobs ({csv_equal}), "
        f"reseeded synthetic dataset byte-identical ({synth_equal})",
    )


# --- 9. strict amplitude filtering of case studies ---------------------------


def _auc_run(label, dataset_name, table):
    scores = tuple(
        FixationScore(img, subj, sp_idx, fix_idx, "auc", value)
        for (img, subj, sp_idx, fix_idx), value in sorted(table.items())
    )
    return EvaluationRun(
        model_label=label,
        dataset_name=dataset_name,
        metrics=("auc",),
        probabilistic=True,
        saliency="none",
        scores=scores,
        aggregates={"auc": float(np.mean([s.value for s in scores]))},
        provenance={},
    )


def test_09_amplitude_filter_strictness():
    # Saccades of 4.9, 5.0, and 5.1 dva into fixations 1, 2, and 3.
    meta = make_meta(image_id="line", width=160, height=20, px_per_dva=10.0)
    coords = [(0.5, 10.0), (49.5, 10.0), (99.5, 10.0), (150.5, 10.0)]
    ds = Dataset("line", {"line": meta}, (make_path("line", "s0", coords),))
    table_a = {("line", "s0", 0, i): v for i, v in ((1, 0.2), (2, 0.4), (3, 0.9))}
    table_b = {("line", "s0", 0, i): v for i, v in ((1, 0.8), (2, 0.5), (3, 0.1))}
    runs = [_auc_run("a", "line", table_a), _auc_run("b", "line", table_b)]

    unfiltered = case_study_ranking(runs, ds, CaseStudyQuery(top_k=10))
    kept_all = sorted(item.fixation_index for item in unfiltered)
    filtered = case_study_ranking(
        runs, ds, CaseStudyQuery(min_amplitude_dva=5.0, top_k=10)
    )
    kept = sorted(item.fixation_index for item in filtered)
    ok = kept_all == [1, 2, 3] and kept == [3]
    _verdict(
        ok,
        "amplitude filter at 5.0 dva keeps exactly the 5.1 dva saccade: "
        f"unfiltered fixations {kept_all}, filtered {kept} (strict >)",
    )
