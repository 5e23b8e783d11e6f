"""On-disk formats: confidence-map stacks, constraints, masks, checkpoints.

Map stacks use a text-headed binary layout so the header stays readable in
a pager while the payload stays bit-exact:

    CSPN-MAP 1 C H W\\n
    <class id> <class id> ...\\n
    C*H*W little-endian float64, row-major within each channel

Constraints are JSON objects mapping class-id strings to numbers.  Label
masks are written as binary portable graymaps (P5) with class id as gray
value.  Model checkpoints carry the magic ``CSPNMODL1`` followed by, per
parameter array, a little-endian uint32 rank and dims, then the raw
little-endian float64 payload.  Training metrics are emitted as JSON lines.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grids import ChannelStack, SizeConstraints
from .model import ToyModel

MAP_MAGIC = "CSPN-MAP"
MAP_VERSION = 1
MODEL_MAGIC = b"CSPNMODL1"


def write_map(path, stack: ChannelStack) -> None:
    path = Path(path)
    header = (f"{MAP_MAGIC} {MAP_VERSION} {stack.num_channels} "
              f"{stack.height} {stack.width}\n")
    ids = " ".join(str(k) for k in stack.class_ids) + "\n"
    with path.open("wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(ids.encode("ascii"))
        fh.write(np.ascontiguousarray(stack.data, dtype="<f8").tobytes())


def _read_header_line(fh) -> str:
    raw = bytearray()
    while True:
        byte = fh.read(1)
        if not byte:
            raise ValueError("truncated map header")
        if byte == b"\n":
            break
        raw += byte
        if len(raw) > 4096:
            raise ValueError("malformed map header")
    return raw.decode("ascii")


def read_map(path) -> ChannelStack:
    path = Path(path)
    with path.open("rb") as fh:
        fields = _read_header_line(fh).split()
        if len(fields) != 5 or fields[0] != MAP_MAGIC:
            raise ValueError(f"{path}: not a {MAP_MAGIC} file")
        if int(fields[1]) != MAP_VERSION:
            raise ValueError(f"{path}: unsupported map version {fields[1]}")
        c, h, w = (int(x) for x in fields[2:])
        class_ids = tuple(int(x) for x in _read_header_line(fh).split())
        if len(class_ids) != c:
            raise ValueError(f"{path}: header declares {c} channels, "
                             f"class-id line has {len(class_ids)}")
        payload = fh.read(c * h * w * 8)
        if len(payload) != c * h * w * 8:
            raise ValueError(f"{path}: truncated payload")
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(c, h, w)
    if not np.isfinite(data).all():
        raise ValueError(f"{path}: non-finite values in payload")
    return ChannelStack(data.astype(np.float64), class_ids)


def write_constraints(path, constraints: SizeConstraints) -> None:
    payload = {str(k): constraints.sizes[k] for k in constraints.classes}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_constraints(path) -> SizeConstraints:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: constraints file must hold a JSON object")
    try:
        sizes = {int(k): float(v) for k, v in raw.items()}
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: bad constraints entry: {exc}") from None
    return SizeConstraints(sizes)


def write_mask_pgm(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    if mask.min() < 0 or mask.max() > 255:
        raise ValueError("mask values must fit in one gray byte")
    h, w = mask.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(mask.astype(np.uint8).tobytes())


def read_mask_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError(f"{path}: not a supported P5 graymap")
    w, h = (int(x) for x in parts[1].split())
    payload = parts[3]
    if len(payload) != h * w:
        raise ValueError(f"{path}: graymap payload size mismatch")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w).astype(np.int64)


def save_model(path, model: ToyModel) -> None:
    with Path(path).open("wb") as fh:
        fh.write(MODEL_MAGIC)
        params = model.parameters()
        fh.write(np.uint32(len(params)).astype("<u4").tobytes())
        for array in params.values():
            fh.write(np.uint32(array.ndim).astype("<u4").tobytes())
            fh.write(np.asarray(array.shape, dtype="<u4").tobytes())
            fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def load_model(path) -> ToyModel:
    path = Path(path)
    with path.open("rb") as fh:
        if fh.read(len(MODEL_MAGIC)) != MODEL_MAGIC:
            raise ValueError(f"{path}: not a {MODEL_MAGIC.decode()} checkpoint")

        def read_u32():
            raw = fh.read(4)
            if len(raw) != 4:
                raise ValueError(f"{path}: truncated checkpoint")
            return int(np.frombuffer(raw, dtype="<u4")[0])

        arrays = []
        for _ in range(read_u32()):
            shape = tuple(read_u32() for _ in range(read_u32()))
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"{path}: truncated checkpoint")
            arrays.append(np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64))
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after checkpoint")
    try:
        model = ToyModel(*arrays)
    except TypeError:
        raise ValueError(f"{path}: wrong number of parameter arrays") from None
    expected = {"w1": 4, "b1": 1, "w2": 4, "b2": 1, "w3": 2, "b3": 1}
    for name, array in model.parameters().items():
        if array.ndim != expected[name]:
            raise ValueError(f"{path}: parameter {name} has rank {array.ndim}")
    return model


def append_metrics_line(fh, record: dict) -> None:
    fh.write(json.dumps(record, sort_keys=True) + "\n")
