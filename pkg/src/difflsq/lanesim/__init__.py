"""Synthetic lane-fitting benchmark built on the differentiable fit."""

from .generator import WeightGenerator, design_matrix, forward_weights, pixel_features, weight_maps
from .scene import (
    SceneConfig,
    SyntheticScene,
    distance_to_curves,
    distractor_mask,
    generate_scene,
    ground_plane_homography,
    marking_coverage,
    marking_labels,
)
from .training import (
    EvalResult,
    SceneData,
    TrainConfig,
    TrainReport,
    distractor_weight_fraction,
    evaluate,
    pipeline_grad,
    pipeline_loss,
    prepare,
    train_cross_entropy,
    train_end_to_end,
)
