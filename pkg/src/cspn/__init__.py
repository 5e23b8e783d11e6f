"""Size-constrained simplex projection of per-class confidence maps.

Core pieces: exact projection onto the scaled simplex (sort oracle and a
randomized expected-linear solver), the constraint layer that turns logits
into size-respecting pseudo ground truth, saliency-based size estimation,
and a small fully deterministic training demo showing the layer's benefit
under image-level supervision.
"""

from .grids import (BACKGROUND_ID, ChannelStack, ConstraintError,
                    DivergenceError, SizeConstraints, validate_labels)
from .layer import (RefineResult, argmax_target, project_heatmaps,
                    project_heatmaps_with_stats, projection_loss,
                    projection_loss_grad, refine, softmax_channels)
from .model import ToyModel, backward, forward, forward_with_cache, init_model
from .projection import (ProjectionResult, project_simplex_linear,
                         project_simplex_sort, verify_kkt)
from .saliency import (DEFAULT_TAU, assign_salient_pixels, estimate_sizes,
                       synthetic_saliency)
from .scenes import Scene, generate_scene
from .train import (EpochMetrics, MiouResult, TrainConfig, baseline_config,
                    evaluate_miou, scene_constraints, train, train_step)

__version__ = "0.1.0"

__all__ = [
    "BACKGROUND_ID", "ChannelStack", "ConstraintError", "DivergenceError",
    "SizeConstraints", "validate_labels",
    "RefineResult", "argmax_target", "project_heatmaps",
    "project_heatmaps_with_stats", "projection_loss", "projection_loss_grad",
    "refine", "softmax_channels",
    "ToyModel", "backward", "forward", "forward_with_cache", "init_model",
    "ProjectionResult", "project_simplex_linear", "project_simplex_sort",
    "verify_kkt",
    "DEFAULT_TAU", "assign_salient_pixels", "estimate_sizes",
    "synthetic_saliency",
    "Scene", "generate_scene",
    "EpochMetrics", "MiouResult", "TrainConfig", "baseline_config",
    "evaluate_miou", "scene_constraints", "train", "train_step",
    "__version__",
]
