"""Conditional scanpath models and replay helpers."""

from .base import (
    ConditionalModel,
    UniformModel,
    argmax_fixation,
    conditional_prediction,
    sample_from_map,
    sample_scanpath,
)
from .encoding import (
    DEFAULT_POINT_SIGMA_DVA,
    SIGMA_GRID_DVA,
    fit_sigma_nss,
    point_to_map,
)
from .flow import (
    SaccadicFlowModel,
    SaccadicFlowParams,
    fit_saccadic_flow,
    flow_mean_bits,
    saccade_pairs_normalized,
    saccadic_flow_map,
)
from .jump import (
    JumpModel,
    JumpModelParams,
    fit_jump_model,
    jump_model_map,
    radial_kernel_grid,
)
from .scenewalk import SceneWalkModel, SceneWalkParams, fit_scenewalk

__all__ = [
    "ConditionalModel",
    "UniformModel",
    "argmax_fixation",
    "conditional_prediction",
    "sample_from_map",
    "sample_scanpath",
    "DEFAULT_POINT_SIGMA_DVA",
    "SIGMA_GRID_DVA",
    "fit_sigma_nss",
    "point_to_map",
    "SaccadicFlowModel",
    "SaccadicFlowParams",
    "fit_saccadic_flow",
    "flow_mean_bits",
    "saccade_pairs_normalized",
    "saccadic_flow_map",
    "JumpModel",
    "JumpModelParams",
    "fit_jump_model",
    "jump_model_map",
    "radial_kernel_grid",
    "SceneWalkModel",
    "SceneWalkParams",
    "fit_scenewalk",
]
