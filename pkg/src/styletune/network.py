"""The strength-conditioned image transformer.

Pipeline: conv9x9 -> IN -> relu, two stride-2 conv3x3 downsampling blocks,
five residual blocks whose non-linear branch is gated by
gamma_i = 2|alpha*beta_i| / (1 + |alpha*beta_i|), a mirror pair of
nearest-upsample conv blocks, and a final conv9x9 squashed into (0, 1).
The strength input alpha is a plain number, not a parameter; each residual
block owns one trainable coefficient beta_i that converts alpha into its
gate.  Negative alpha is accepted and behaves like |alpha|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ops import conv2d, instance_norm, nearest_upsample
from .tensor import ShapeError, Tensor, add, record_op, relu, scale_by, sigmoid

__all__ = [
    "ArchitectureConfig",
    "TransformerWeights",
    "gamma",
    "gamma_dbeta",
    "strength_gate",
    "residual_block_forward",
    "forward",
    "init_weights",
    "parameter_count",
    "randomize_residual_params",
    "infer_config",
]

IN_EPS = 1e-5


@dataclass(frozen=True)
class ArchitectureConfig:
    """Channel widths of the three downsampling convs plus residual count."""

    widths: tuple[int, int, int] = (32, 64, 128)
    residual_blocks: int = 5

    def __post_init__(self):
        if len(self.widths) != 3 or any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be three positive ints, got {self.widths}")
        if self.residual_blocks < 1:
            raise ValueError(f"residual_blocks must be >= 1, got {self.residual_blocks}")

    @staticmethod
    def test_scale() -> "ArchitectureConfig":
        """Small preset for fast test suites."""
        return ArchitectureConfig(widths=(8, 16, 32))


def gamma(alpha: float, beta: float) -> float:
    """Residual gate 2|alpha*beta| / (1 + |alpha*beta|), always in [0, 2)."""
    t = abs(alpha * beta)
    return 2.0 * t / (1.0 + t)


def gamma_dbeta(alpha: float, beta: float) -> float:
    """d gamma / d beta = 2*alpha*sign(alpha*beta) / (1+|alpha*beta|)^2.

    Defined as 0 at alpha*beta = 0.
    """
    t = alpha * beta
    if t == 0.0:
        return 0.0
    return 2.0 * alpha * math.copysign(1.0, t) / (1.0 + abs(t)) ** 2


def strength_gate(beta: Tensor, alpha: float) -> Tensor:
    """gamma as a rank-0 tape value, differentiable in beta (not alpha)."""
    if beta.data.ndim != 0:
        raise ShapeError(f"strength_gate: beta must be rank-0, got shape {beta.shape}")
    b = float(beta.data)
    out = Tensor(np.asarray(gamma(alpha, b), dtype=beta.dtype))

    def vjp(g):
        return (np.asarray(float(g) * gamma_dbeta(alpha, b), dtype=beta.dtype),)

    return record_op(out, (beta,), vjp)


# ---------------------------------------------------------------------------
# Parameter container


class TransformerWeights:
    """Named parameter map of the transformer.

    Naming scheme (also the checkpoint key space): ``t.conv{j}.weight|bias``
    for j = 1..6, ``t.in{j}.gain|shift`` for j = 1..5, and per residual
    block i: ``t.res{i}.conv{1|2}.weight|bias``, ``t.res{i}.in{1|2}.gain|shift``,
    ``t.res{i}.beta``.
    """

    def __init__(self, params: dict[str, Tensor], config: ArchitectureConfig):
        expected = set(parameter_names(config))
        got = set(params)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise ValueError(f"parameter map mismatch: missing={missing}, extra={extra}")
        self.params = params
        self.config = config

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def names(self) -> list[str]:
        return sorted(self.params)

    def betas(self) -> list[Tensor]:
        return [self.params[f"t.res{i}.beta"] for i in range(1, self.config.residual_blocks + 1)]

    @property
    def dtype(self):
        return self.params["t.conv1.weight"].dtype

    def copy(self) -> "TransformerWeights":
        return TransformerWeights(
            {k: Tensor(v.data.copy(), v.requires_grad) for k, v in self.params.items()},
            self.config,
        )

    def astype(self, dtype) -> "TransformerWeights":
        return TransformerWeights(
            {k: Tensor(v.data.astype(dtype), v.requires_grad) for k, v in self.params.items()},
            self.config,
        )

    def tensor_map(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.grad = None

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())


def _conv_specs(cfg: ArchitectureConfig) -> dict[str, tuple[int, int, int]]:
    """(c_out, c_in, k) per named conv layer."""
    w1, w2, w3 = cfg.widths
    specs = {
        "t.conv1": (w1, 3, 9),
        "t.conv2": (w2, w1, 3),
        "t.conv3": (w3, w2, 3),
        "t.conv4": (w2, w3, 3),
        "t.conv5": (w1, w2, 3),
        "t.conv6": (3, w1, 9),
    }
    for i in range(1, cfg.residual_blocks + 1):
        specs[f"t.res{i}.conv1"] = (w3, w3, 3)
        specs[f"t.res{i}.conv2"] = (w3, w3, 3)
    return specs


def _norm_specs(cfg: ArchitectureConfig) -> dict[str, int]:
    w1, w2, w3 = cfg.widths
    specs = {"t.in1": w1, "t.in2": w2, "t.in3": w3, "t.in4": w2, "t.in5": w1}
    for i in range(1, cfg.residual_blocks + 1):
        specs[f"t.res{i}.in1"] = w3
        specs[f"t.res{i}.in2"] = w3
    return specs


def parameter_names(cfg: ArchitectureConfig) -> list[str]:
    names = []
    for conv in _conv_specs(cfg):
        names += [f"{conv}.weight", f"{conv}.bias"]
    for norm in _norm_specs(cfg):
        names += [f"{norm}.gain", f"{norm}.shift"]
    names += [f"t.res{i}.beta" for i in range(1, cfg.residual_blocks + 1)]
    return sorted(names)


def parameter_count(cfg: ArchitectureConfig) -> int:
    """Closed-form parameter count; a regression guard against drift."""
    total = 0
    for cout, cin, k in _conv_specs(cfg).values():
        total += cout * cin * k * k + cout
    for width in _norm_specs(cfg).values():
        total += 2 * width
    total += cfg.residual_blocks  # one beta per block
    return total


def init_weights(cfg: ArchitectureConfig, seed: int, dtype=np.float64) -> TransformerWeights:
    """He-style gaussian conv weights, identity norms, all betas at 1.

    beta_i = 1 makes alpha = 1 apply the unscaled residual branch at init
    (gamma(1, 1) = 1) and keeps beta away from the gate's derivative kink.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for conv, (cout, cin, k) in _conv_specs(cfg).items():
        std = math.sqrt(2.0 / (cin * k * k))
        params[f"{conv}.weight"] = Tensor(
            rng.normal(0.0, std, size=(cout, cin, k, k)).astype(dtype), requires_grad=True
        )
        params[f"{conv}.bias"] = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True)
    for norm, width in _norm_specs(cfg).items():
        params[f"{norm}.gain"] = Tensor(np.ones(width, dtype=dtype), requires_grad=True)
        params[f"{norm}.shift"] = Tensor(np.zeros(width, dtype=dtype), requires_grad=True)
    for i in range(1, cfg.residual_blocks + 1):
        params[f"t.res{i}.beta"] = Tensor(np.asarray(1.0, dtype=dtype), requires_grad=True)
    return TransformerWeights(params, cfg)


def norm_absorbed_param_names(cfg: ArchitectureConfig) -> set[str]:
    """Parameters whose gradient is structurally zero.

    A per-channel constant (a conv bias, or a residual in2 shift riding the
    skip connections) is subtracted exactly by the next instance norm on
    every path to the output, so its true gradient vanishes.  Finite
    differences on these compare rounding noise to rounding noise; gradient
    checks sample from the complement, the same way they avoid relu kinks.
    """
    names = {f"t.conv{j}.bias" for j in range(1, 6)}  # conv6.bias reaches the sigmoid
    for i in range(1, cfg.residual_blocks + 1):
        names |= {f"t.res{i}.conv1.bias", f"t.res{i}.conv2.bias", f"t.res{i}.in2.shift"}
    return names


def randomize_residual_params(w: TransformerWeights, rng: np.random.Generator) -> TransformerWeights:
    """Copy with every residual-branch parameter redrawn at random."""
    out = w.copy()
    for name, p in out.params.items():
        if name.startswith("t.res"):
            p.data = rng.normal(0.0, 1.0, size=p.data.shape).astype(p.dtype)
    return out


def infer_config(names_to_shapes: dict[str, tuple]) -> ArchitectureConfig:
    """Recover the architecture from checkpoint tensor shapes."""
    try:
        w1 = names_to_shapes["t.conv1.weight"][0]
        w2 = names_to_shapes["t.conv2.weight"][0]
        w3 = names_to_shapes["t.conv3.weight"][0]
    except KeyError as exc:
        raise ValueError(f"not a transformer checkpoint: missing {exc.args[0]!r}") from exc
    blocks = sum(1 for n in names_to_shapes if n.startswith("t.res") and n.endswith(".beta"))
    if blocks < 1:
        raise ValueError("not a transformer checkpoint: no residual blocks found")
    return ArchitectureConfig(widths=(w1, w2, w3), residual_blocks=blocks)


# ---------------------------------------------------------------------------
# Forward passes


def _conv_in_relu(x: Tensor, w: TransformerWeights, conv: str, norm: str, stride: int, pad: int) -> Tensor:
    y = conv2d(x, w[f"{conv}.weight"], w[f"{conv}.bias"], stride=stride, reflect_pad=pad)
    y = instance_norm(y, w[f"{norm}.gain"], w[f"{norm}.shift"], eps=IN_EPS)
    return relu(y)


def residual_block_forward(u: Tensor, w: TransformerWeights, block: int, alpha: float) -> Tensor:
    """u + gamma_i * f_i(u) with f_i = conv-IN-relu-conv-IN, no post-sum activation."""
    width = w.config.widths[2]
    if u.shape[1] != width:
        raise ShapeError(
            f"residual block {block}: input has {u.shape[1]} channels, block width is {width}"
        )
    p = f"t.res{block}"
    y = conv2d(u, w[f"{p}.conv1.weight"], w[f"{p}.conv1.bias"], stride=1, reflect_pad=1)
    y = relu(instance_norm(y, w[f"{p}.in1.gain"], w[f"{p}.in1.shift"], eps=IN_EPS))
    y = conv2d(y, w[f"{p}.conv2.weight"], w[f"{p}.conv2.bias"], stride=1, reflect_pad=1)
    y = instance_norm(y, w[f"{p}.in2.gain"], w[f"{p}.in2.shift"], eps=IN_EPS)
    gate = strength_gate(w[f"{p}.beta"], alpha)
    return add(u, scale_by(gate, y))


def forward(x: Tensor, w: TransformerWeights, alpha: float) -> Tensor:
    """Stylize a [0,1] image at strength ``alpha``; output is in (0, 1).

    Spatial dims must be multiples of 4 and at least 8 (the residual stage
    runs at 1/4 resolution and its 3x3 reflection padding needs >= 2
    pixels).  Output spatial dims equal input dims.
    """
    if x.data.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"forward: expected (n, 3, h, w), got shape {x.shape}")
    n, c, h, wdim = x.shape
    if h % 4 or wdim % 4 or h < 8 or wdim < 8:
        raise ShapeError(
            f"forward: spatial dims must be multiples of 4 and >= 8, got {h}x{wdim}"
        )
    if not math.isfinite(alpha):
        raise ValueError(f"forward: alpha must be finite, got {alpha!r}")
    if x.dtype != w.dtype:
        raise ShapeError(f"forward: input dtype {x.dtype} != weights dtype {w.dtype}")
    alpha = float(alpha)

    y = _conv_in_relu(x, w, "t.conv1", "t.in1", stride=1, pad=4)
    y = _conv_in_relu(y, w, "t.conv2", "t.in2", stride=2, pad=1)
    y = _conv_in_relu(y, w, "t.conv3", "t.in3", stride=2, pad=1)
    for i in range(1, w.config.residual_blocks + 1):
        y = residual_block_forward(y, w, i, alpha)
    y = nearest_upsample(y, 2)
    y = _conv_in_relu(y, w, "t.conv4", "t.in4", stride=1, pad=1)
    y = nearest_upsample(y, 2)
    y = _conv_in_relu(y, w, "t.conv5", "t.in5", stride=1, pad=1)
    y = conv2d(y, w["t.conv6.weight"], w["t.conv6.bias"], stride=1, reflect_pad=4)
    return sigmoid(y)
