"""Grid-shaped containers shared across the library.

A dense map is a plain (H, W) float array, a label mask a plain (H, W)
integer array.  Channel stacks bundle one dense map per class id, and size
constraints map class ids to required pixel masses.  Background is always
class id 0 and is never size-constrained.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BACKGROUND_ID = 0


class ConstraintError(ValueError):
    """A size constraint is invalid or incompatible with its stack."""


class DivergenceError(RuntimeError):
    """A numerical computation produced non-finite values."""


@dataclass
class ChannelStack:
    """A (C, H, W) stack of per-class score maps.

    ``class_ids[c]`` names the class held in channel ``c``.  Entries must be
    finite; whether they are logits, probabilities or saliency scores is up
    to the caller.
    """

    data: np.ndarray
    class_ids: tuple[int, ...]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.class_ids = tuple(int(k) for k in self.class_ids)
        if self.data.ndim != 3:
            raise ValueError(f"stack data must be (C, H, W), got shape {self.data.shape}")
        c, h, w = self.data.shape
        if c < 1 or h < 1 or w < 1:
            raise ValueError(f"stack dimensions must be positive, got {self.data.shape}")
        if len(self.class_ids) != c:
            raise ValueError(f"{c} channels but {len(self.class_ids)} class ids")
        if len(set(self.class_ids)) != c:
            raise ValueError("duplicate class ids in stack")
        if not np.isfinite(self.data).all():
            raise ValueError("non-finite values in stack")

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def channel_index(self, class_id: int) -> int:
        try:
            return self.class_ids.index(class_id)
        except ValueError:
            raise KeyError(f"class {class_id} not in stack") from None

    def channel(self, class_id: int) -> np.ndarray:
        return self.data[self.channel_index(class_id)]

    def is_probability_stack(self, atol: float = 1e-9) -> bool:
        """True if entries lie in [0, 1] and per-pixel channel sums are 1."""
        if np.any(self.data < -atol) or np.any(self.data > 1.0 + atol):
            return False
        return bool(np.allclose(self.data.sum(axis=0), 1.0, atol=atol))


@dataclass
class SizeConstraints:
    """Required pixel mass per class id.

    Classes listed in ``sizes`` participate in the projection, including
    those pinned to zero (absent classes).  Classes not listed are left
    untouched; ``size_of`` reports 0 for them.
    """

    sizes: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for class_id, size in self.sizes.items():
            size = float(size)
            if not np.isfinite(size) or size < 0.0:
                raise ConstraintError(f"negative or non-finite size for class {class_id}")
            cleaned[int(class_id)] = size
        self.sizes = cleaned

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted(self.sizes))

    def size_of(self, class_id: int) -> float:
        return self.sizes.get(int(class_id), 0.0)

    def __eq__(self, other) -> bool:
        return isinstance(other, SizeConstraints) and self.sizes == other.sizes


def validate_labels(mask: np.ndarray, class_ids) -> np.ndarray:
    """Check an (H, W) label mask against a set of class ids."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"label mask must be (H, W), got shape {mask.shape}")
    if not np.issubdtype(mask.dtype, np.integer):
        raise ValueError("label mask must be integer typed")
    if not np.isin(mask, np.asarray(list(class_ids))).all():
        raise ValueError("invalid label in mask")
    return mask
