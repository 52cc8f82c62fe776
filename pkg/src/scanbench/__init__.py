"""Fixation-by-fixation benchmarking of scanpath models.

Models expose one-step-ahead priority maps conditioned on the fixation
history; the toolkit scores those maps with log-likelihood, information
gain, AUC and NSS, fits reference baselines, and ships a CLI for the
whole load / fit / evaluate / report / case-study loop.
"""

from .bench import (
    CaseStudyItem,
    CaseStudyQuery,
    EvaluationRun,
    case_study_maps,
    case_study_ranking,
    evaluate,
    generate_synthetic_dataset,
    load_run,
    report,
    save_run,
)
from .bestofk import (
    DiscreteDistribution,
    best_of_k_density,
    best_of_k_with_rejection,
)
from .core import (
    Dataset,
    DatasetFormatError,
    DegenerateMapError,
    Fixation,
    GeometryMismatchError,
    MissingSaliencyError,
    OutOfBoundsError,
    PreprocessPolicy,
    PriorityMap,
    ScanbenchError,
    Scanpath,
    StimulusMeta,
    preprocess_dataset,
    preprocess_scanpath,
    uniform_map,
)
from .density import (
    CenterBias,
    FixationNumberCenterBias,
    GoldStandard,
    KdeParams,
    fit_center_bias_bandwidth,
    fit_gold_standard,
    gaussian_kde_grid,
)
from .io import (
    SaliencyStore,
    load_dataset,
    read_smap,
    save_dataset,
    write_smap,
)
from .metrics import (
    FixationScore,
    aggregate,
    auc_uniform,
    histogram_equalize,
    information_gain,
    log_likelihood,
    nss,
)
from .models import (
    ConditionalModel,
    JumpModel,
    JumpModelParams,
    SaccadicFlowModel,
    SaccadicFlowParams,
    SceneWalkModel,
    SceneWalkParams,
    UniformModel,
    conditional_prediction,
    sample_scanpath,
)

__version__ = "0.1.0"

__all__ = [
    "CaseStudyItem",
    "CaseStudyQuery",
    "EvaluationRun",
    "case_study_maps",
    "case_study_ranking",
    "evaluate",
    "generate_synthetic_dataset",
    "load_run",
    "report",
    "save_run",
    "DiscreteDistribution",
    "best_of_k_density",
    "best_of_k_with_rejection",
    "Dataset",
    "DatasetFormatError",
    "DegenerateMapError",
    "Fixation",
    "GeometryMismatchError",
    "MissingSaliencyError",
    "OutOfBoundsError",
    "PreprocessPolicy",
    "PriorityMap",
    "ScanbenchError",
    "Scanpath",
    "StimulusMeta",
    "preprocess_dataset",
    "preprocess_scanpath",
    "uniform_map",
    "CenterBias",
    "FixationNumberCenterBias",
    "GoldStandard",
    "KdeParams",
    "fit_center_bias_bandwidth",
    "fit_gold_standard",
    "gaussian_kde_grid",
    "SaliencyStore",
    "load_dataset",
    "read_smap",
    "save_dataset",
    "write_smap",
    "FixationScore",
    "aggregate",
    "auc_uniform",
    "histogram_equalize",
    "information_gain",
    "log_likelihood",
    "nss",
    "ConditionalModel",
    "JumpModel",
    "JumpModelParams",
    "SaccadicFlowModel",
    "SaccadicFlowParams",
    "SceneWalkModel",
    "SceneWalkParams",
    "UniformModel",
    "conditional_prediction",
    "sample_scanpath",
    "__version__",
]
