"""Loss-ratio evaluation of a strength-conditioned model against baselines.

For every strength in a sweep, the conditioned model's content/style/total
losses are divided by those of a dedicated fixed-strength baseline; the
report carries the per-style ratios and their mean and population standard
deviation across styles.  Evaluation never updates weights.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .encoder import EncoderWeights
from .losses import LossWeights, StyleTarget, total_loss
from .network import TransformerWeights, forward
from .tensor import Tensor
from .training import TrainConfig, train

__all__ = [
    "LossTableRow",
    "RatioReport",
    "evaluate_model",
    "loss_ratio",
    "train_fixed_strength_baseline",
]

_METRICS = ("total", "content", "style")


@dataclass(frozen=True)
class LossTableRow:
    style: str
    alpha: float
    model: str
    content: float
    style_loss: float
    tv: float
    total: float

    def as_dict(self) -> dict:
        return {
            "style": self.style,
            "alpha": self.alpha,
            "model": self.model,
            "content": self.content,
            "style_loss": self.style_loss,
            "tv": self.tv,
            "total": self.total,
        }


def evaluate_model(
    weights: TransformerWeights,
    contents: list[Tensor],
    style_targets: dict[str, StyleTarget],
    strengths: list[float],
    lw: LossWeights,
    enc: EncoderWeights,
    model_label: str = "model",
) -> list[LossTableRow]:
    """Mean loss components over the content set, per (style, strength)."""
    if not contents:
        raise ValueError("evaluate_model needs at least one content image")
    if not style_targets:
        raise ValueError("evaluate_model needs at least one style target")
    if not strengths:
        raise ValueError("evaluate_model needs a non-empty strength sweep")
    rows = []
    for style_name, target in style_targets.items():
        for alpha in strengths:
            sums = {"content": 0.0, "style": 0.0, "tv": 0.0, "total": 0.0}
            for x in contents:
                y = forward(x, weights, alpha)
                _, bd = total_loss(x, y, target, alpha, lw, enc)
                sums["content"] += bd.content
                sums["style"] += bd.style
                sums["tv"] += bd.tv
                sums["total"] += bd.total
            k = len(contents)
            rows.append(
                LossTableRow(
                    style=style_name,
                    alpha=float(alpha),
                    model=model_label,
                    content=sums["content"] / k,
                    style_loss=sums["style"] / k,
                    tv=sums["tv"] / k,
                    total=sums["total"] / k,
                )
            )
    return rows


@dataclass
class RatioReport:
    """Per-strength loss ratios (conditioned / baseline) across styles."""

    strengths: list[float]
    styles: list[str]
    ratios: dict[str, dict[float, dict[str, float]]]  # style -> alpha -> metric -> ratio
    raw_rows: list[LossTableRow] = field(default_factory=list)

    def ratio_values(self, alpha: float, metric: str) -> list[float]:
        return [self.ratios[s][alpha][metric] for s in self.styles]

    def mean(self, alpha: float, metric: str) -> float:
        vals = self.ratio_values(alpha, metric)
        return sum(vals) / len(vals)

    def std(self, alpha: float, metric: str) -> float:
        """Population standard deviation across styles."""
        vals = self.ratio_values(alpha, metric)
        mu = sum(vals) / len(vals)
        return float(np.sqrt(sum((v - mu) ** 2 for v in vals) / len(vals)))

    def summary(self) -> dict:
        out: dict = {"strengths": self.strengths, "styles": self.styles, "per_strength": {}}
        for alpha in self.strengths:
            entry = {}
            for metric in _METRICS:
                entry[f"ratio_{metric}_mean"] = self.mean(alpha, metric)
                entry[f"ratio_{metric}_std"] = self.std(alpha, metric)
            out["per_strength"][repr(alpha)] = entry
        out["per_style"] = {
            s: {repr(a): dict(self.ratios[s][a]) for a in self.strengths} for s in self.styles
        }
        out["raw"] = [r.as_dict() for r in self.raw_rows]
        return out

    def write_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)

    def write_csv(self, path: str) -> None:
        cols = ["style", "alpha", "model", "content", "style_loss", "tv", "total"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            for row in self.raw_rows:
                writer.writerow(row.as_dict())


def loss_ratio(
    model: TransformerWeights,
    baselines: dict[float, TransformerWeights],
    contents: list[Tensor],
    style_targets: dict[str, StyleTarget],
    strengths: list[float],
    lw: LossWeights,
    enc: EncoderWeights,
) -> RatioReport:
    """ratio_X(alpha, style) = loss_X(model) / loss_X(baseline_alpha).

    The report mean is the mean of per-style ratios (not a ratio of means),
    and every raw per-style loss row for both models is retained so the
    aggregates can be recomputed downstream.
    """
    strengths = [float(a) for a in strengths]
    missing = [a for a in strengths if a not in baselines]
    if missing:
        raise ValueError(f"no baseline model for strength {missing[0]!r}")

    cond_rows = evaluate_model(model, contents, style_targets, strengths, lw, enc, "conditioned")
    base_rows: list[LossTableRow] = []
    for alpha in strengths:
        base_rows += evaluate_model(
            baselines[alpha], contents, style_targets, [alpha], lw, enc, "baseline"
        )

    def index(rows: list[LossTableRow]) -> dict[tuple[str, float], LossTableRow]:
        return {(r.style, r.alpha): r for r in rows}

    cond_ix, base_ix = index(cond_rows), index(base_rows)
    styles = list(style_targets)
    ratios: dict[str, dict[float, dict[str, float]]] = {}
    for style in styles:
        ratios[style] = {}
        for alpha in strengths:
            c, b = cond_ix[(style, alpha)], base_ix[(style, alpha)]
            ratios[style][alpha] = {
                "total": c.total / b.total,
                "content": c.content / b.content,
                "style": c.style_loss / b.style_loss,
            }
    return RatioReport(
        strengths=strengths,
        styles=styles,
        ratios=ratios,
        raw_rows=cond_rows + base_rows,
    )


def train_fixed_strength_baseline(
    cfg: TrainConfig, alpha_fixed: float, enc: EncoderWeights, log_path: str | None = None
) -> tuple[TransformerWeights, list[dict]]:
    """Identical to train() except every minibatch uses the one strength."""
    return train(cfg, enc, fixed_alpha=float(alpha_fixed), log_path=log_path)
