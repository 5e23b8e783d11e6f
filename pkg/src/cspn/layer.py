"""The size-constraint layer: softmax, per-class projection, argmax targets
and the cross-entropy training loss with its analytic gradient.

The layer turns per-pixel class logits into a pseudo ground-truth mask:
softmax over channels, independent projection of each constrained class
channel onto {w >= 0, sum(w) = size_k}, then a per-pixel argmax.  The loss
is standard cross entropy between the (unprojected) probabilities and that
mask, treated as a constant target, so its gradient with respect to the
logits is simply softmax minus one-hot.

The background channel is never projected; it passes through softmax
unchanged and competes in the argmax.  Per-pixel channel sums are NOT
renormalized after projection - the argmax does not need it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ChannelStack, ConstraintError, SizeConstraints, validate_labels
from .projection import as_generator, project_simplex_linear, project_simplex_sort

LOG_CLAMP = 1e-12


def softmax_channels(logits: ChannelStack) -> ChannelStack:
    """Per-pixel softmax across channels, stabilized by max subtraction."""
    shifted = logits.data - logits.data.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return ChannelStack(e / e.sum(axis=0, keepdims=True), logits.class_ids)


def project_heatmaps_with_stats(probs: ChannelStack, constraints: SizeConstraints,
                                algorithm: str = "sort", rng=None):
    """Like ``project_heatmaps``, also returning per-class projection stats.

    The second return value maps each constrained class id to its
    ``ProjectionResult`` (threshold and support size included).
    """
    area = probs.height * probs.width
    out = probs.data.copy()
    if algorithm == "sort":
        project = project_simplex_sort
    elif algorithm == "partition":
        gen = as_generator(rng)
        project = lambda v, total: project_simplex_linear(v, total, gen)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    stats = {}
    for class_id in constraints.classes:
        size = constraints.size_of(class_id)
        if size > area:
            raise ConstraintError(
                f"infeasible size constraint: class {class_id} needs {size} "
                f"pixels but the map has only {area}")
        try:
            channel = probs.channel_index(class_id)
        except KeyError:
            raise ConstraintError(f"constrained class {class_id} not in stack") from None
        result = project(out[channel].ravel(), size)
        out[channel] = result.projected.reshape(probs.height, probs.width)
        stats[class_id] = result
    return ChannelStack(out, probs.class_ids), stats


def project_heatmaps(probs: ChannelStack, constraints: SizeConstraints,
                     algorithm: str = "sort", rng=None) -> ChannelStack:
    """Project each constrained class channel onto its size budget.

    Every class id listed in ``constraints`` has its channel flattened and
    projected onto {w >= 0, sum(w) = size_k}; unconstrained channels (the
    background in particular) pass through unchanged.
    """
    projected, _ = project_heatmaps_with_stats(probs, constraints,
                                               algorithm=algorithm, rng=rng)
    return projected


def argmax_target(projected: ChannelStack) -> np.ndarray:
    """Per-pixel argmax over channels; ties go to the lowest class id."""
    order = np.argsort(projected.class_ids)
    ids = np.asarray(projected.class_ids, dtype=np.int64)[order]
    # np.argmax keeps the first maximum, which after sorting is the lowest id.
    return ids[np.argmax(projected.data[order], axis=0)]


def _target_channel_indices(stack: ChannelStack, target: np.ndarray) -> np.ndarray:
    target = validate_labels(target, stack.class_ids)
    if target.shape != (stack.height, stack.width):
        raise ValueError("target shape does not match stack")
    idx = np.empty(target.shape, dtype=np.int64)
    for channel, class_id in enumerate(stack.class_ids):
        idx[target == class_id] = channel
    return idx


def projection_loss(probs: ChannelStack, target: np.ndarray,
                    average: bool = True) -> float:
    """Cross entropy of ``probs`` against an integer label mask.

    Averaged over pixels by default; ``average=False`` restores the plain
    sum.  Probabilities are clamped at 1e-12 before the log so channels
    projected to zero cannot produce an infinite loss.
    """
    idx = _target_channel_indices(probs, target)
    picked = np.take_along_axis(probs.data, idx[None], axis=0)[0]
    losses = -np.log(np.maximum(picked, LOG_CLAMP))
    return float(losses.mean() if average else losses.sum())


def projection_loss_grad(logits: ChannelStack, target: np.ndarray,
                         average: bool = True) -> ChannelStack:
    """Gradient of ``projection_loss(softmax(logits), target)`` w.r.t. logits.

    The target is a constant, so the gradient is softmax minus one-hot,
    divided by the pixel count when the loss is averaged.
    """
    probs = softmax_channels(logits)
    idx = _target_channel_indices(logits, target)
    grad = probs.data.copy()
    rows, cols = np.indices(idx.shape)
    grad[idx, rows, cols] -= 1.0
    if average:
        grad /= logits.height * logits.width
    return ChannelStack(grad, logits.class_ids)


def _soft_target_loss_grad(probs: ChannelStack, projected: ChannelStack,
                           average: bool) -> tuple[float, ChannelStack]:
    # Ablation mode: softmax the projected maps into per-pixel target
    # distributions instead of taking their argmax.
    soft = softmax_channels(projected)
    losses = -(soft.data * np.log(np.maximum(probs.data, LOG_CLAMP))).sum(axis=0)
    loss = float(losses.mean() if average else losses.sum())
    grad = probs.data - soft.data
    if average:
        grad = grad / (probs.height * probs.width)
    return loss, ChannelStack(grad, probs.class_ids)


@dataclass
class RefineResult:
    projected: ChannelStack
    target: np.ndarray
    loss: float
    grad: ChannelStack


def refine(logits: ChannelStack, constraints: SizeConstraints,
           soft_target: bool = False, average: bool = True,
           algorithm: str = "sort", rng=None) -> RefineResult:
    """Full layer pass: softmax -> project -> argmax -> loss and gradient.

    The returned target mask is constant with respect to the logits; no
    gradient flows through the projection.  With ``soft_target=True`` the
    loss uses softmaxed projected maps as per-pixel target distributions
    instead of the argmax mask (the mask is still returned for inspection).
    """
    probs = softmax_channels(logits)
    projected = project_heatmaps(probs, constraints, algorithm=algorithm, rng=rng)
    target = argmax_target(projected)
    if soft_target:
        loss, grad = _soft_target_loss_grad(probs, projected, average)
    else:
        loss = projection_loss(probs, target, average=average)
        grad = projection_loss_grad(logits, target, average=average)
    return RefineResult(projected, target, loss, grad)
