"""Per-class size estimates from class-specific saliency maps.

A saliency stack holds one real-valued map per class present in the image;
negative values mark non-salient regions.  A pixel is counted for a class
when its saliency clears a positive threshold, and when several classes
clear it the pixel goes to the one with the highest score so nothing is
counted twice.  Class sizes are the resulting per-class pixel counts.

``synthetic_saliency`` stands in for an external saliency estimator: it
derives deliberately imperfect maps from a ground-truth mask, with a graded
interior profile, random dilation or erosion, and additive Gaussian noise.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .grids import BACKGROUND_ID, ChannelStack, SizeConstraints

DEFAULT_TAU = 0.125


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0.0:
        raise ValueError("threshold must be positive")
    return tau


def assign_salient_pixels(saliency: ChannelStack, tau: float) -> np.ndarray:
    """Assign each pixel to its most salient class at threshold ``tau``.

    Pixels where no class reaches ``tau`` become background.  Ties between
    classes go to the lowest class id.
    """
    tau = _check_tau(tau)
    if BACKGROUND_ID in saliency.class_ids:
        raise ValueError("saliency stacks must not contain the background class")

    order = np.argsort(saliency.class_ids)
    ids = np.asarray(saliency.class_ids, dtype=np.int64)[order]
    scores = saliency.data[order]
    best = np.argmax(scores, axis=0)
    rows, cols = np.indices(best.shape)
    labels = ids[best]
    labels[scores[best, rows, cols] < tau] = BACKGROUND_ID
    return labels


def estimate_sizes(saliency: ChannelStack | None, tau: float, image_area: int,
                   universe=None) -> SizeConstraints:
    """Count pixels per class in the salient-pixel assignment.

    ``image_area`` must match the stack area and caps every count.  When
    ``universe`` is given, classes in it but absent from the stack get an
    explicit size of zero, so their channels are projected away downstream.
    ``saliency=None`` stands for an image with no classes present.
    """
    _check_tau(tau)
    image_area = int(image_area)
    if saliency is None:
        sizes = {}
    else:
        if image_area != saliency.height * saliency.width:
            raise ValueError("image_area does not match the saliency stack")
        labels = assign_salient_pixels(saliency, tau)
        sizes = {class_id: float(np.count_nonzero(labels == class_id))
                 for class_id in saliency.class_ids}
    if universe is not None:
        for class_id in universe:
            if class_id != BACKGROUND_ID:
                sizes.setdefault(int(class_id), 0.0)
    return SizeConstraints(sizes)


def synthetic_saliency(true_mask: np.ndarray, present_ids, rng,
                       noise_sigma: float = 0.15, rim_level: float = 0.35,
                       nonsalient_level: float = -0.05,
                       morph_prob: float = 0.5) -> ChannelStack:
    """Noisy stand-in for an external class-saliency estimator.

    For each present class the true object mask is randomly dilated or
    eroded by one pixel and turned into a graded score profile: 1 at the
    deepest object pixel, ``rim_level`` at the object rim (quadratic in
    depth, so scores near 1 hug the core the way real estimators peak at
    object centers), and ``nonsalient_level`` outside.  N(0, noise_sigma)
    noise is added on top.  The slightly negative floor marks non-salient
    regions; with the floor at exactly zero, symmetric noise would push a
    fifth of the background past the default counting threshold and the
    size estimates would run several times too large.
    """
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    true_mask = np.asarray(true_mask)
    ids = tuple(sorted(int(k) for k in present_ids))
    if BACKGROUND_ID in ids:
        raise ValueError("present classes must not include the background")

    channels = np.empty((len(ids),) + true_mask.shape, dtype=np.float64)
    for c, class_id in enumerate(ids):
        mask = true_mask == class_id
        draw = gen.random()
        radius = int(gen.integers(1, 3))
        if draw < morph_prob / 2:
            mask = ndimage.binary_dilation(mask, iterations=radius)
        elif draw < morph_prob:
            eroded = ndimage.binary_erosion(mask, iterations=radius)
            if eroded.any():
                mask = eroded
        signal = np.full(true_mask.shape, float(nonsalient_level))
        if mask.any():
            depth = ndimage.distance_transform_edt(mask)
            signal[mask] = rim_level + (1.0 - rim_level) * (depth[mask] / depth.max()) ** 2
        channels[c] = signal + gen.normal(0.0, noise_sigma, size=true_mask.shape)
    return ChannelStack(channels, ids)
