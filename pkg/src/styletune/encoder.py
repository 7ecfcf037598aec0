"""Frozen convolutional feature extractor for the perceptual losses.

A four-stage ladder of conv3x3 -> relu -> 2x2 average pool with channel
widths (16, 32, 64, 128).  Weights are fixed random features drawn from a
seeded xorshift64* stream; they take the place of a pretrained network and
never receive gradients.  Real pretrained weights can be swapped in via
:func:`import_encoder`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import CheckpointKeyError, load_checkpoint, save_checkpoint
from .ops import avg_pool2x2, conv2d
from .rng import Xorshift64Star
from .tensor import ShapeError, Tensor, relu

__all__ = [
    "STAGE_WIDTHS",
    "EncoderWeights",
    "FeatureSet",
    "generate_encoder",
    "encode",
    "save_encoder",
    "import_encoder",
]

STAGE_WIDTHS = (16, 32, 64, 128)
CONTENT_STAGE = 3  # content loss reads stage 3; style losses read all four


@dataclass(frozen=True)
class EncoderWeights:
    """Per-stage (conv weight, bias) pairs; never trainable."""

    stages: tuple[tuple[Tensor, Tensor], ...]
    seed: int | None

    @property
    def dtype(self):
        return self.stages[0][0].dtype

    def astype(self, dtype) -> "EncoderWeights":
        stages = tuple(
            (Tensor(w.data.astype(dtype)), Tensor(b.data.astype(dtype)))
            for w, b in self.stages
        )
        return EncoderWeights(stages=stages, seed=self.seed)

    def tensor_map(self) -> dict[str, np.ndarray]:
        out = {}
        for s, (w, b) in enumerate(self.stages, start=1):
            out[f"enc.stage{s}.weight"] = w.data
            out[f"enc.stage{s}.bias"] = b.data
        return out


@dataclass(frozen=True)
class FeatureSet:
    """Stage activations f1..f4 of one encode pass."""

    stages: tuple[Tensor, ...]

    @property
    def content(self) -> Tensor:
        return self.stages[CONTENT_STAGE - 1]

    @property
    def style(self) -> tuple[Tensor, ...]:
        return self.stages


def _stage_shapes() -> list[tuple[int, int]]:
    chain = (3,) + STAGE_WIDTHS
    return [(chain[i + 1], chain[i]) for i in range(len(STAGE_WIDTHS))]


def generate_encoder(seed: int, dtype=np.float64) -> EncoderWeights:
    """Deterministic fixed random features.

    Conv weights are zero-mean gaussians with std sqrt(2 / (c_in * 9)) drawn
    from xorshift64*(seed) in stage order; biases are zero.  The same seed
    always reproduces bit-identical weights.
    """
    rng = Xorshift64Star(seed)
    stages = []
    for cout, cin in _stage_shapes():
        std = float(np.sqrt(2.0 / (cin * 9)))
        w = rng.normal_array((cout, cin, 3, 3), std=std).astype(dtype)
        b = np.zeros(cout, dtype=dtype)
        stages.append((Tensor(w), Tensor(b)))
    return EncoderWeights(stages=tuple(stages), seed=seed)


def encode(x: Tensor, enc: EncoderWeights) -> FeatureSet:
    """Run the four-stage ladder; stage s halves spatial dims s times.

    Gradients flow to ``x`` but never to the encoder weights.
    """
    if x.data.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"encode: expected (n, 3, h, w), got shape {x.shape}")
    n, c, h, w = x.shape
    if h % 16 or w % 16 or h < 16 or w < 16:
        raise ShapeError(f"encode: spatial dims must be multiples of 16, got {h}x{w}")
    if x.dtype != enc.dtype:
        raise ShapeError(f"encode: input dtype {x.dtype} != encoder dtype {enc.dtype}")
    feats = []
    cur = x
    for weight, bias in enc.stages:
        cur = avg_pool2x2(relu(conv2d(cur, weight, bias, stride=1, reflect_pad=1)))
        feats.append(cur)
    return FeatureSet(stages=tuple(feats))


def save_encoder(enc: EncoderWeights, path: str) -> None:
    save_checkpoint(enc.tensor_map(), path)


def import_encoder(path: str, dtype=None) -> EncoderWeights:
    """Load frozen encoder weights from a checkpoint file.

    The file must contain enc.stage{1..4}.weight/bias with the fixed ladder
    shapes.  Stored float32 values are kept unless ``dtype`` asks for a
    cast (float32 -> float64 is exact).
    """
    tensors = load_checkpoint(path)
    stages = []
    for s, (cout, cin) in enumerate(_stage_shapes(), start=1):
        wname, bname = f"enc.stage{s}.weight", f"enc.stage{s}.bias"
        for name in (wname, bname):
            if name not in tensors:
                raise CheckpointKeyError(f"missing tensor {name!r}")
        w, b = tensors[wname], tensors[bname]
        if w.shape != (cout, cin, 3, 3):
            raise CheckpointKeyError(
                f"{wname!r} has shape {w.shape}, expected {(cout, cin, 3, 3)}"
            )
        if b.shape != (cout,):
            raise CheckpointKeyError(f"{bname!r} has shape {b.shape}, expected {(cout,)}")
        if dtype is not None:
            w, b = w.astype(dtype), b.astype(dtype)
        stages.append((Tensor(w), Tensor(b)))
    return EncoderWeights(stages=tuple(stages), seed=None)
