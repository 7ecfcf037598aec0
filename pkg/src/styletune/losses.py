"""Training objective: content, Gram-matrix style, and total-variation terms.

The combined loss is lambda_content * content + alpha * lambda_style * style
+ lambda_tv * tv, where alpha is the stylization strength of the current
batch.  Multiplying the style term by a per-batch random alpha is what makes
a single network track the whole strength range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import EncoderWeights, FeatureSet, encode
from .ops import gram, mse, total_variation
from .tensor import ShapeError, Tensor, add, scale

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "StyleTarget",
    "make_style_target",
    "content_loss",
    "style_loss",
    "total_loss",
]


@dataclass(frozen=True)
class LossWeights:
    lambda_content: float = 1.0
    lambda_style: float = 5.0
    lambda_tv: float = 1e-5

    def __post_init__(self):
        for name in ("lambda_content", "lambda_style", "lambda_tv"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class LossBreakdown:
    """Component values of one batch at one strength."""

    content: float
    style: float
    tv: float
    total: float
    alpha_used: float

    def recombine(self, lw: LossWeights) -> float:
        return (
            self.content * lw.lambda_content
            + self.alpha_used * lw.lambda_style * self.style
        ) + lw.lambda_tv * self.tv

    def check(self, lw: LossWeights, rel: float = 1e-12) -> None:
        expect = self.recombine(lw)
        if abs(expect - self.total) > rel * max(abs(expect), abs(self.total), 1.0):
            raise AssertionError(
                f"loss breakdown inconsistent: total={self.total!r}, recombined={expect!r}"
            )

    def as_dict(self) -> dict:
        return {
            "content": self.content,
            "style": self.style,
            "tv": self.tv,
            "total": self.total,
            "alpha": self.alpha_used,
        }


@dataclass(frozen=True)
class StyleTarget:
    """Per-layer Gram matrices of one style image under one encoder."""

    grams: tuple[np.ndarray, ...]


def make_style_target(style_image: Tensor, enc: EncoderWeights) -> StyleTarget:
    """Precompute the style image's Gram matrices (computed once per style)."""
    feats = encode(style_image, enc)
    grams = []
    for f in feats.style:
        g = gram(f).data
        grams.append(g.mean(axis=0))  # (c, c); style batches are normally 1
    return StyleTarget(grams=tuple(grams))


def content_loss(y_feats: FeatureSet, x_feats: FeatureSet) -> Tensor:
    """MSE between content-stage features of output and content image."""
    return mse(y_feats.content, x_feats.content)


def style_loss(y_feats: FeatureSet, target: StyleTarget) -> Tensor:
    """Sum over style layers of ||gram(y_s) - G_s||_F^2 / c_s^2, batch mean.

    mse over the (n, c, c) Gram stack against the tiled target computes
    exactly that normalization.
    """
    if len(target.grams) != len(y_feats.style):
        raise ShapeError(
            f"style_loss: target has {len(target.grams)} layers, features have {len(y_feats.style)}"
        )
    total = None
    for f, g_target in zip(y_feats.style, target.grams):
        n, c = f.shape[0], f.shape[1]
        if g_target.shape != (c, c):
            raise ShapeError(
                f"style_loss: target gram is {g_target.shape}, features have {c} channels"
            )
        tiled = Tensor(np.broadcast_to(g_target.astype(f.dtype), (n, c, c)).copy())
        term = mse(gram(f), tiled)
        total = term if total is None else add(total, term)
    return total


def total_loss(
    x_c: Tensor,
    y: Tensor,
    target: StyleTarget,
    alpha: float,
    lw: LossWeights,
    enc: EncoderWeights,
) -> tuple[Tensor, LossBreakdown]:
    """Full objective for one batch; differentiable w.r.t. ``y``.

    Returns the scalar loss tensor and a plain-float breakdown satisfying
    total = lambda_content*content + alpha*lambda_style*style + lambda_tv*tv.
    """
    if x_c.shape != y.shape:
        raise ShapeError(f"total_loss: image shapes differ, {x_c.shape} vs {y.shape}")
    alpha = float(alpha)
    y_feats = encode(y, enc)
    x_feats = encode(x_c.detach(), enc)
    c_term = content_loss(y_feats, x_feats)
    s_term = style_loss(y_feats, target)
    tv_term = total_variation(y)
    total = add(
        add(scale(c_term, lw.lambda_content), scale(s_term, alpha * lw.lambda_style)),
        scale(tv_term, lw.lambda_tv),
    )
    # The recorded total is recombined from the component floats so the
    # breakdown invariant holds exactly at any tensor precision.
    c_val, s_val, tv_val = float(c_term.data), float(s_term.data), float(tv_term.data)
    total_val = (c_val * lw.lambda_content + alpha * lw.lambda_style * s_val) + lw.lambda_tv * tv_val
    breakdown = LossBreakdown(
        content=c_val, style=s_val, tv=tv_val, total=total_val, alpha_used=alpha
    )
    return total, breakdown
