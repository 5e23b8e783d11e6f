"""Weakly supervised training of the toy model on synthetic scenes.

Supervision per scene is image-level only: the set of present classes,
a size budget per class (exact counts or noisy-saliency estimates), and a
one-pixel localization seed per present class taken from the saliency
maximum.  The training loss adds the size-constraint layer loss and the
seed cross entropy; the baseline arm drops the constraint term.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grids import BACKGROUND_ID, ChannelStack, DivergenceError, SizeConstraints
from .layer import refine, softmax_channels
from .model import ToyModel, backward, forward, forward_with_cache, init_model, sgd_update
from .saliency import DEFAULT_TAU, estimate_sizes, synthetic_saliency
from .scenes import Scene, generate_scene

SIZE_SOURCES = ("oracle", "saliency")


@dataclass
class TrainConfig:
    num_classes: int = 4
    height: int = 32
    width: int = 32
    train_scenes: int = 200
    val_scenes: int = 50
    lr: float = 0.05
    epochs: int = 5
    seed: int = 42
    size_source: str = "oracle"
    tau: float = DEFAULT_TAU
    use_projection_loss: bool = True
    use_seed_loss: bool = True
    soft_target: bool = False
    average_loss: bool = True
    hidden: int = 8
    max_shapes: int = 3
    saliency_sigma: float = 0.15

    def __post_init__(self):
        if self.size_source not in SIZE_SOURCES:
            raise ValueError(f"size_source must be one of {SIZE_SOURCES}")
        for name in ("num_classes", "height", "width", "train_scenes",
                     "val_scenes", "hidden", "max_shapes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.lr < 0 or not self.tau > 0:
            raise ValueError("epochs and lr must be nonnegative, tau positive")


@dataclass
class EpochMetrics:
    epoch: int
    mean_loss: float
    val_miou: float
    per_class_iou: dict[int, float] = field(default_factory=dict)


@dataclass
class MiouResult:
    per_class: dict[int, float]
    mean: float


def _seed_pixels(saliency: ChannelStack | None) -> dict[int, tuple[int, int]]:
    """One localization cue per present class: its saliency argmax pixel."""
    if saliency is None:
        return {}
    seeds = {}
    for channel, class_id in enumerate(saliency.class_ids):
        flat = int(np.argmax(saliency.data[channel]))
        seeds[class_id] = (flat // saliency.width, flat % saliency.width)
    return seeds


def _seed_loss_and_grad(probs: ChannelStack, seeds: dict[int, tuple[int, int]],
                        average: bool):
    """Cross entropy at the seed pixels, averaged over seeds."""
    grad = np.zeros_like(probs.data)
    if not seeds:
        return 0.0, grad
    scale = 1.0 / len(seeds) if average else 1.0
    loss = 0.0
    for class_id, (row, col) in seeds.items():
        channel = probs.channel_index(class_id)
        p = probs.data[:, row, col]
        loss += -np.log(max(p[channel], 1e-12)) * scale
        grad[:, row, col] += p * scale
        grad[channel, row, col] -= scale
    return float(loss), grad


def scene_constraints(scene: Scene, config: TrainConfig,
                      saliency: ChannelStack | None) -> SizeConstraints:
    """Size budgets for every foreground class of the label universe."""
    universe = range(1, config.num_classes)
    if config.size_source == "oracle":
        sizes = {k: scene.true_sizes.size_of(k) for k in universe}
        return SizeConstraints(sizes)
    return estimate_sizes(saliency, config.tau,
                          config.height * config.width, universe=universe)


def train_step(model: ToyModel, scene: Scene, constraints: SizeConstraints,
               config: TrainConfig, saliency: ChannelStack | None = None) -> float:
    """One SGD step on one scene; returns the scalar loss before the update."""
    logits, cache = forward_with_cache(model, scene.image)
    total_grad = np.zeros_like(logits.data)
    loss = 0.0

    if config.use_projection_loss:
        refined = refine(logits, constraints, soft_target=config.soft_target,
                         average=config.average_loss)
        loss += refined.loss
        total_grad += refined.grad.data
    if config.use_seed_loss:
        probs = softmax_channels(logits)
        seed_loss, seed_grad = _seed_loss_and_grad(
            probs, _seed_pixels(saliency), config.average_loss)
        loss += seed_loss
        total_grad += seed_grad

    if not np.isfinite(loss):
        raise DivergenceError("diverged")
    grads = backward(model, cache, total_grad)
    sgd_update(model, grads, config.lr)
    return float(loss)


def predict(model: ToyModel, image: np.ndarray) -> np.ndarray:
    """Per-pixel argmax of the softmaxed logits."""
    probs = softmax_channels(forward(model, image))
    return np.argmax(probs.data, axis=0).astype(np.int64)


def evaluate_miou(model: ToyModel, scenes) -> MiouResult:
    """Dataset-level IoU per class and their mean.

    Intersections and unions accumulate over the whole scene list; classes
    whose union is empty are left out of the mean.
    """
    scenes = list(scenes)
    if not scenes:
        raise ValueError("empty scene list")
    num_classes = model.num_classes
    inter = np.zeros(num_classes)
    union = np.zeros(num_classes)
    for scene in scenes:
        pred = predict(model, scene.image)
        for k in range(num_classes):
            p = pred == k
            t = scene.true_mask == k
            inter[k] += np.count_nonzero(p & t)
            union[k] += np.count_nonzero(p | t)
    per_class = {k: float(inter[k] / union[k])
                 for k in range(num_classes) if union[k] > 0}
    return MiouResult(per_class, float(np.mean(list(per_class.values()))))


def _dataset(config: TrainConfig, count: int, rng: np.random.Generator):
    seeds = rng.integers(np.iinfo(np.int64).max, size=count)
    return [generate_scene(int(s), config) for s in seeds]


def _streams(config: TrainConfig):
    """Independent, reproducible randomness streams derived from the seed."""
    names = ("train", "val", "init", "shuffle", "saliency")
    children = np.random.SeedSequence(config.seed).spawn(len(names))
    return dict(zip(names, children))


def validation_scenes(config: TrainConfig):
    """The validation split, identical to the one ``train`` evaluates on."""
    return _dataset(config, config.val_scenes,
                    np.random.default_rng(_streams(config)["val"]))


def initial_model(config: TrainConfig) -> ToyModel:
    """The untrained model ``train`` would start from."""
    return init_model(config.num_classes, config.hidden,
                      np.random.default_rng(_streams(config)["init"]))


def train(config: TrainConfig):
    """Train on a generated dataset; returns (model, per-epoch metrics).

    Everything - scenes, init, shuffling, saliency noise - derives from
    ``config.seed``, so identical configs reproduce identical histories.
    """
    streams = _streams(config)
    train_scenes = _dataset(config, config.train_scenes,
                            np.random.default_rng(streams["train"]))
    val_scenes = _dataset(config, config.val_scenes,
                          np.random.default_rng(streams["val"]))
    model = init_model(config.num_classes, config.hidden,
                       np.random.default_rng(streams["init"]))

    # Saliency is drawn once per scene and reused every epoch, like maps
    # computed offline would be.
    saliency_rng = np.random.default_rng(streams["saliency"])
    saliencies = [synthetic_saliency(scene.true_mask, scene.labels, saliency_rng,
                                     noise_sigma=config.saliency_sigma)
                  for scene in train_scenes]
    constraints = [scene_constraints(scene, config, sal)
                   for scene, sal in zip(train_scenes, saliencies)]

    shuffle_rng = np.random.default_rng(streams["shuffle"])
    history: list[EpochMetrics] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train_scenes))
        losses = [train_step(model, train_scenes[i], constraints[i], config,
                             saliency=saliencies[i])
                  for i in order]
        result = evaluate_miou(model, val_scenes)
        history.append(EpochMetrics(epoch, float(np.mean(losses)),
                                    result.mean, result.per_class))
    return model, history


def baseline_config(config: TrainConfig) -> TrainConfig:
    """The seed-only arm: same data and seeds, no size-constraint loss."""
    return replace(config, use_projection_loss=False)
