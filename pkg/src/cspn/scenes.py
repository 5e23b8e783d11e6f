"""Synthetic desk-scale scenes: colored shapes on a textured background.

Each scene is an (H, W, 3) image in [0, 1] together with its ground-truth
mask, the set of foreground classes present and their exact pixel counts.
Shape kind doubles as class id: 1 = rectangle, 2 = disk, 3 = triangle.
Colors are class-correlated but jittered per scene and per pixel, so a
model has to learn the color-class mapping rather than read it off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import BACKGROUND_ID, SizeConstraints

# Base RGB per class id; jittered per scene.
SHAPE_COLORS = {
    1: (0.85, 0.25, 0.25),
    2: (0.25, 0.80, 0.30),
    3: (0.25, 0.35, 0.85),
}
MAX_FOREGROUND_CLASSES = len(SHAPE_COLORS)
PLACEMENT_RETRIES = 200


@dataclass
class Scene:
    image: np.ndarray
    true_mask: np.ndarray
    labels: frozenset[int]
    true_sizes: SizeConstraints

    def __post_init__(self):
        counted = {int(k): float(np.count_nonzero(self.true_mask == k))
                   for k in np.unique(self.true_mask) if k != BACKGROUND_ID}
        if counted != {k: v for k, v in self.true_sizes.sizes.items() if v > 0}:
            raise ValueError("true_sizes disagrees with the mask pixel counts")
        if self.labels != frozenset(counted):
            raise ValueError("label set disagrees with the mask")


def _shape_mask(kind: int, height: int, width: int, rng: np.random.Generator):
    """One randomly sized and placed shape as a boolean mask, or None."""
    if kind == 1:
        h = int(rng.integers(6, 13))
        w = int(rng.integers(6, 13))
        if height < h or width < w:
            return None
        top = int(rng.integers(0, height - h + 1))
        left = int(rng.integers(0, width - w + 1))
        mask = np.zeros((height, width), dtype=bool)
        mask[top:top + h, left:left + w] = True
        return mask
    if kind == 2:
        r = int(rng.integers(3, 7))
        if height < 2 * r + 1 or width < 2 * r + 1:
            return None
        cy = int(rng.integers(r, height - r))
        cx = int(rng.integers(r, width - r))
        yy, xx = np.ogrid[:height, :width]
        return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    if kind == 3:
        h = int(rng.integers(6, 13))
        base = 2 * h - 1
        if height < h or width < base:
            return None
        top = int(rng.integers(0, height - h + 1))
        left = int(rng.integers(0, width - base + 1))
        mask = np.zeros((height, width), dtype=bool)
        for row in range(h):
            half = row
            mid = left + h - 1
            mask[top + row, mid - half:mid + half + 1] = True
        return mask
    raise ValueError(f"unknown shape kind {kind}")


def generate_scene(seed, config) -> Scene:
    """Deterministically build one scene from ``seed`` and a TrainConfig."""
    rng = np.random.default_rng(seed)
    height, width = config.height, config.width
    num_fg = config.num_classes - 1
    if not 1 <= num_fg <= MAX_FOREGROUND_CLASSES:
        raise ValueError(f"num_classes must be in [2, {MAX_FOREGROUND_CLASSES + 1}]")

    # Textured background: per-scene gray level plus pixel noise and a
    # gentle horizontal gradient.
    base = rng.uniform(0.4, 0.55)
    gradient = np.linspace(-0.04, 0.04, width)[None, :, None]
    image = np.full((height, width, 3), base) + gradient
    image += rng.normal(0.0, 0.03, size=(height, width, 3))

    max_shapes = min(getattr(config, "max_shapes", 3), num_fg)
    n_shapes = int(rng.integers(1, max_shapes + 1))
    classes = rng.choice(np.arange(1, num_fg + 1), size=n_shapes, replace=False)

    mask = np.full((height, width), BACKGROUND_ID, dtype=np.int64)
    occupied = np.zeros((height, width), dtype=bool)
    for class_id in classes:
        placed = False
        for _ in range(PLACEMENT_RETRIES):
            candidate = _shape_mask(int(class_id), height, width, rng)
            if candidate is None or (candidate & occupied).any():
                continue
            occupied |= candidate
            mask[candidate] = class_id
            color = np.asarray(SHAPE_COLORS[int(class_id)])
            color = color + rng.uniform(-0.05, 0.05, size=3)
            image[candidate] = color + rng.normal(0.0, 0.03, size=(candidate.sum(), 3))
            placed = True
            break
        if not placed:
            raise RuntimeError(
                f"could not place a class-{class_id} shape on a "
                f"{height}x{width} grid after {PLACEMENT_RETRIES} retries")

    image = np.clip(image, 0.0, 1.0)
    sizes = {int(k): float(np.count_nonzero(mask == k)) for k in classes}
    return Scene(image, mask, frozenset(int(k) for k in classes), SizeConstraints(sizes))
