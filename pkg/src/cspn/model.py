"""A tiny fully convolutional network with explicit forward and backward.

Architecture: conv 3x3 (3 -> F, pad 1) -> ReLU -> conv 3x3 (F -> F, pad 1)
-> ReLU -> conv 1x1 (F -> C logits).  Spatial size is preserved, so the
logits form a (C, H, W) stack aligned with the input image.  Convolutions
run as im2col matrix products; the backward pass mirrors them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ChannelStack, DivergenceError

_OFFSETS = [(di, dj) for di in range(3) for dj in range(3)]


@dataclass
class ToyModel:
    w1: np.ndarray  # (F, 3, 3, 3)
    b1: np.ndarray  # (F,)
    w2: np.ndarray  # (F, F, 3, 3)
    b2: np.ndarray  # (F,)
    w3: np.ndarray  # (C, F)
    b3: np.ndarray  # (C,)

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.w3.shape[0]

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(range(self.num_classes))

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2,
                "b2": self.b2, "w3": self.w3, "b3": self.b3}

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters().values())


def init_model(num_classes: int, hidden: int = 8, rng=None) -> ToyModel:
    """Seeded uniform init, each weight in +-sqrt(3 / fan_in); zero biases."""
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    def uniform(shape, fan_in):
        limit = np.sqrt(3.0 / fan_in)
        return gen.uniform(-limit, limit, size=shape)

    return ToyModel(
        w1=uniform((hidden, 3, 3, 3), 3 * 9),
        b1=np.zeros(hidden),
        w2=uniform((hidden, hidden, 3, 3), hidden * 9),
        b2=np.zeros(hidden),
        w3=uniform((num_classes, hidden), hidden),
        b3=np.zeros(num_classes),
    )


def _im2col(x: np.ndarray) -> np.ndarray:
    """(C, H, W) -> (C*9, H*W) patch matrix for a padded 3x3 convolution."""
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    cols = np.empty((c, 9, h * w))
    for slot, (di, dj) in enumerate(_OFFSETS):
        cols[:, slot, :] = xp[:, di:di + h, dj:dj + w].reshape(c, h * w)
    return cols.reshape(c * 9, h * w)


def _col2im(dcols: np.ndarray, c: int, h: int, w: int) -> np.ndarray:
    """Scatter-add the im2col adjoint back to a (C, H, W) gradient."""
    dxp = np.zeros((c, h + 2, w + 2))
    dcols = dcols.reshape(c, 9, h * w)
    for slot, (di, dj) in enumerate(_OFFSETS):
        dxp[:, di:di + h, dj:dj + w] += dcols[:, slot, :].reshape(c, h, w)
    return dxp[:, 1:h + 1, 1:w + 1]


def _image_to_planes(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"image must be (H, W, 3), got shape {image.shape}")
    if not np.isfinite(image).all():
        raise ValueError("non-finite values in image")
    return np.transpose(image, (2, 0, 1))


def forward_with_cache(model: ToyModel, image: np.ndarray):
    """Logits stack plus the intermediates needed by ``backward``."""
    if not model.all_finite():
        raise DivergenceError("diverged")
    x = _image_to_planes(image)
    _, h, w = x.shape
    f = model.hidden

    cols1 = _im2col(x)
    z1 = model.w1.reshape(f, -1) @ cols1 + model.b1[:, None]
    a1 = np.maximum(z1, 0.0)

    cols2 = _im2col(a1.reshape(f, h, w))
    z2 = model.w2.reshape(f, -1) @ cols2 + model.b2[:, None]
    a2 = np.maximum(z2, 0.0)

    logits = model.w3 @ a2 + model.b3[:, None]
    stack = ChannelStack(logits.reshape(model.num_classes, h, w), model.class_ids)
    cache = {"cols1": cols1, "z1": z1, "cols2": cols2, "z2": z2, "a2": a2,
             "height": h, "width": w}
    return stack, cache


def forward(model: ToyModel, image: np.ndarray) -> ChannelStack:
    """Logits (C, H, W) for an (H, W, 3) image; deterministic."""
    stack, _ = forward_with_cache(model, image)
    return stack


def backward(model: ToyModel, cache: dict, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients for a given d(loss)/d(logits) of shape (C, H, W)."""
    h, w = cache["height"], cache["width"]
    f = model.hidden
    dlogits = np.asarray(grad_logits, dtype=np.float64).reshape(model.num_classes, h * w)

    dw3 = dlogits @ cache["a2"].T
    db3 = dlogits.sum(axis=1)
    da2 = model.w3.T @ dlogits

    dz2 = da2 * (cache["z2"] > 0.0)
    dw2 = (dz2 @ cache["cols2"].T).reshape(model.w2.shape)
    db2 = dz2.sum(axis=1)
    dcols2 = model.w2.reshape(f, -1).T @ dz2
    da1 = _col2im(dcols2, f, h, w).reshape(f, h * w)

    dz1 = da1 * (cache["z1"] > 0.0)
    dw1 = (dz1 @ cache["cols1"].T).reshape(model.w1.shape)
    db1 = dz1.sum(axis=1)

    return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "w3": dw3, "b3": db3}


def sgd_update(model: ToyModel, grads: dict[str, np.ndarray], lr: float) -> None:
    """In-place vanilla SGD step."""
    for name, param in model.parameters().items():
        param -= lr * grads[name]
