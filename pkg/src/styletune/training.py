"""Randomized-strength training loop.

Each minibatch draws one strength alpha uniformly from the 101-point grid
{0.0, 0.1, ..., 10.0}, multiplies the style loss by it, and takes one Adam
step, so a single set of weights learns the whole strength range.  Desk
defaults (64x64 images, batch 4) keep runs in the minutes; full-scale
values remain reachable through the config.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .checkpoint import save_checkpoint
from .encoder import EncoderWeights
from .imageio import load_image
from .losses import LossBreakdown, LossWeights, make_style_target, total_loss
from .network import ArchitectureConfig, TransformerWeights, forward, init_weights
from .rng import splitmix64
from .tensor import Tape, Tensor

__all__ = [
    "ALPHA_GRID",
    "TrainConfig",
    "ConfigError",
    "TrainingError",
    "AdamState",
    "adam_step",
    "sample_strength",
    "train",
    "write_train_log",
]

ALPHA_GRID = tuple(k / 10.0 for k in range(101))

_IMAGE_EXTS = (".png", ".ppm")


class ConfigError(ValueError):
    """Bad or incomplete training configuration."""


class TrainingError(RuntimeError):
    """Training aborted; carries the failing step index."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass
class TrainConfig:
    content_dir: str = ""
    style_image_path: str = ""
    checkpoint_out: str = ""
    image_size: int = 64
    batch_size: int = 4
    epochs: int = 1
    learning_rate: float = 1e-3
    alpha_grid: tuple[float, ...] = ALPHA_GRID
    loss_weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    widths: tuple[int, int, int] = (32, 64, 128)
    residual_blocks: int = 5
    precision: str = "float64"

    def __post_init__(self):
        if self.image_size % 16 or self.image_size < 16:
            raise ConfigError(f"image_size must be a positive multiple of 16, got {self.image_size}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be float32 or float64, got {self.precision!r}")
        grid = tuple(float(a) for a in self.alpha_grid)
        if grid != ALPHA_GRID:
            raise ConfigError("alpha_grid must be the 101 exact tenths 0.0, 0.1, ..., 10.0")
        self.alpha_grid = grid
        if isinstance(self.loss_weights, dict):
            self.loss_weights = LossWeights(**self.loss_weights)
        self.widths = tuple(int(w) for w in self.widths)

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64

    def architecture(self) -> ArchitectureConfig:
        return ArchitectureConfig(widths=self.widths, residual_blocks=self.residual_blocks)

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r}")
        for required in ("content_dir", "style_image_path"):
            if not raw.get(required):
                raise ConfigError(f"config is missing required key {required!r}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str) -> "TrainConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be a JSON object, got {type(raw).__name__}")
        return cls.from_dict(raw)

    def resolved(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, LossWeights):
                v = {"lambda_content": v.lambda_content, "lambda_style": v.lambda_style, "lambda_tv": v.lambda_tv}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def sample_strength(seed: int, step: int) -> float:
    """Uniform draw from the strength grid, keyed by (seed, step).

    Counter-based: the value depends only on the two integers, so any step
    of any run can be replayed in isolation.
    """
    u = splitmix64(splitmix64(seed) ^ (step & ((1 << 64) - 1)))
    return ALPHA_GRID[u % len(ALPHA_GRID)]


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """First/second moments per parameter plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    b1: float = 0.9
    b2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p.data) for k, p in params.items()},
            v={k: np.zeros_like(p.data) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One bias-corrected Adam update, in place on the parameter tensors."""
    state.t += 1
    bc1 = 1.0 - state.b1 ** state.t
    bc2 = 1.0 - state.b2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(
                f"adam_step: gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= state.b1
        m += (1.0 - state.b1) * g
        v *= state.b2
        v += (1.0 - state.b2) * (g * g)
        mhat = m / bc1
        vhat = v / bc2
        p.data = p.data - lr * mhat / (np.sqrt(vhat) + state.eps)


# ---------------------------------------------------------------------------
# Data handling


def list_content_images(content_dir: str) -> list[str]:
    try:
        names = sorted(os.listdir(content_dir))
    except OSError as exc:
        raise ConfigError(f"cannot read content_dir {content_dir!r}: {exc}") from exc
    paths = [
        os.path.join(content_dir, n)
        for n in names
        if n.lower().endswith(_IMAGE_EXTS)
    ]
    if not paths:
        raise ConfigError(f"content_dir {content_dir!r} contains no .png/.ppm images")
    return paths


def write_train_log(entries: list[dict], path: str) -> None:
    with open(path, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")


def _write_meta(cfg: TrainConfig, path: str) -> None:
    meta = {
        "widths": list(cfg.widths),
        "residual_blocks": cfg.residual_blocks,
        "image_size": cfg.image_size,
        "seed": cfg.seed,
        "precision": cfg.precision,
    }
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def train(
    cfg: TrainConfig,
    enc: EncoderWeights,
    fixed_alpha: float | None = None,
    log_path: str | None = None,
) -> tuple[TransformerWeights, list[dict]]:
    """Train the transformer; returns final weights and the step log.

    Per minibatch: draw alpha (or use ``fixed_alpha``), run the transformer,
    evaluate the combined loss at that alpha, backpropagate, take one Adam
    step.  The beta gates receive gradients through the strength gate.  A
    non-finite loss aborts with the failing step index.
    """
    dtype = cfg.dtype
    if enc.dtype != dtype:
        enc = enc.astype(dtype)
    weights = init_weights(cfg.architecture(), cfg.seed, dtype=dtype)
    paths = list_content_images(cfg.content_dir)
    images = [load_image(p, size=cfg.image_size, dtype=dtype) for p in paths]
    style_img = load_image(cfg.style_image_path, size=cfg.image_size, dtype=dtype)
    target = make_style_target(style_img, enc)

    state = AdamState.for_params(weights.params)
    shuffle_rng = np.random.default_rng(splitmix64(cfg.seed) & 0xFFFFFFFF)
    batch = min(cfg.batch_size, len(images))
    log: list[dict] = []
    step = 0
    for _epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(images))
        for start in range(0, len(images) - batch + 1, batch):
            chunk = [images[i] for i in order[start:start + batch]]
            x = Tensor(np.concatenate([im.data for im in chunk], axis=0))
            alpha = fixed_alpha if fixed_alpha is not None else sample_strength(cfg.seed, step)
            weights.zero_grads()
            with Tape() as tape:
                y = forward(x, weights, alpha)
                loss, breakdown = total_loss(x, y, target, alpha, cfg.loss_weights, enc)
            if not math.isfinite(breakdown.total):
                raise TrainingError(
                    f"non-finite loss {breakdown.total!r} at step {step}", step=step
                )
            tape.backward(loss)
            grads = {
                name: p.grad for name, p in weights.params.items() if p.grad is not None
            }
            adam_step(weights.params, grads, state, cfg.learning_rate)
            log.append({"step": step, **breakdown.as_dict()})
            step += 1

    if log_path:
        write_train_log(log, log_path)
    if cfg.checkpoint_out:
        save_checkpoint(weights.tensor_map(), cfg.checkpoint_out)
        _write_meta(cfg, cfg.checkpoint_out)
    return weights, log
