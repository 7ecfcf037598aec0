"""Checkpoint loading and the one shared stylize path.

The CLI and the HTTP service both call :func:`stylize_png_bytes`, so for
identical model, input bytes, strength, and size they produce identical
output bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .checkpoint import checkpoint_crc, load_checkpoint
from .imageio import decode_image, to_png_bytes
from .network import ArchitectureConfig, TransformerWeights, forward, infer_config
from .tensor import Tensor

__all__ = ["load_transformer", "load_model_meta", "stylize_png_bytes"]


def load_transformer(path: str, dtype=np.float32) -> TransformerWeights:
    """Load transformer weights from a checkpoint, inferring the architecture."""
    tensors = load_checkpoint(path)
    cfg = infer_config({k: v.shape for k, v in tensors.items()})
    params = {
        name: Tensor(arr.astype(dtype), requires_grad=True) for name, arr in tensors.items()
    }
    return TransformerWeights(params, cfg)


def load_model_meta(path: str) -> dict:
    """Sidecar metadata written by the trainer, if present."""
    meta_path = path + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            return json.load(fh)
    return {}


def stylize_png_bytes(
    weights: TransformerWeights, data: bytes, alpha: float, size: int
) -> bytes:
    """Decode -> resize/crop to ``size`` -> forward at ``alpha`` -> PNG bytes."""
    x = decode_image(data, size=size, dtype=weights.dtype)
    y = forward(x, weights, alpha)
    return to_png_bytes(y)


def model_metadata(weights: TransformerWeights, checkpoint_path: str, image_size: int) -> dict:
    meta = load_model_meta(checkpoint_path)
    cfg: ArchitectureConfig = weights.config
    return {
        "widths": list(cfg.widths),
        "residual_blocks": cfg.residual_blocks,
        "alpha_min": 0.0,
        "alpha_max": 10.0,
        "image_size": image_size,
        "checkpoint_crc32": checkpoint_crc(checkpoint_path),
        "training_seed": meta.get("seed"),
    }
