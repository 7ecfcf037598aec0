"""Structured array ops on (n, c, h, w) feature maps.

Every op here validates shapes strictly, runs vectorized over numpy, and
registers a vector-Jacobian product with the active tape.  Convolutions
use reflection padding that mirrors without repeating the edge pixel.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, record_op

__all__ = [
    "conv2d",
    "instance_norm",
    "nearest_upsample",
    "avg_pool2x2",
    "gram",
    "mse",
    "total_variation",
]


def _require_4d(op: str, x: Tensor) -> None:
    if x.data.ndim != 4:
        raise ShapeError(f"{op}: expected a (n, c, h, w) tensor, got shape {x.shape}")


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), mode="reflect")


def _reflect_pad_adjoint(gpad: np.ndarray, pad: int, h: int, w: int) -> np.ndarray:
    """Fold gradients on mirrored border rows/cols back onto their sources."""
    if pad == 0:
        return gpad
    g = gpad.copy()
    rows = g[:, :, pad:pad + h, :]
    rows[:, :, 1:pad + 1, :] += g[:, :, :pad, :][:, :, ::-1, :]
    rows[:, :, h - 1 - pad:h - 1, :] += g[:, :, pad + h:, :][:, :, ::-1, :]
    cols = rows[:, :, :, pad:pad + w]
    cols[:, :, :, 1:pad + 1] += rows[:, :, :, :pad][:, :, :, ::-1]
    cols[:, :, :, w - 1 - pad:w - 1] += rows[:, :, :, pad + w:][:, :, :, ::-1]
    return np.ascontiguousarray(cols)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, reflect_pad: int = 0) -> Tensor:
    """2-D cross-correlation with reflection padding.

    ``weight`` is (c_out, c_in, k, k), ``bias`` is (c_out,).  Output spatial
    dims follow floor((h + 2*pad - k) / stride) + 1.  Differentiable in
    ``x``, ``weight`` and ``bias``.
    """
    _require_4d("conv2d", x)
    if weight.data.ndim != 4:
        raise ShapeError(f"conv2d: weight must be (c_out, c_in, k, k), got shape {weight.shape}")
    n, cin, h, w = x.shape
    cout, w_cin, k, k2 = weight.shape
    if k != k2:
        raise ShapeError(f"conv2d: kernel must be square, got {k}x{k2}")
    if cin != w_cin:
        raise ShapeError(
            f"conv2d: input has {cin} channels but weight expects c_in={w_cin}"
        )
    if bias.data.shape != (cout,):
        raise ShapeError(
            f"conv2d: bias shape {bias.shape} does not match c_out={cout}"
        )
    if stride not in (1, 2):
        raise ShapeError(f"conv2d: stride must be 1 or 2, got {stride}")
    pad = int(reflect_pad)
    if pad < 0:
        raise ShapeError(f"conv2d: reflect_pad must be >= 0, got {pad}")
    if pad > 0 and (pad > h - 1 or pad > w - 1):
        raise ShapeError(
            f"conv2d: reflect_pad {pad} needs spatial dims >= pad+1, got {h}x{w}"
        )
    hp, wp = h + 2 * pad, w + 2 * pad
    if hp < k or wp < k:
        raise ShapeError(
            f"conv2d: padded dims {hp}x{wp} are smaller than kernel {k}x{k}"
        )
    if x.dtype != weight.dtype or x.dtype != bias.dtype:
        raise ShapeError(
            f"conv2d: mixed dtypes {x.dtype}/{weight.dtype}/{bias.dtype}"
        )

    xp = _reflect_pad(x.data, pad)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    y = np.tensordot(win, weight.data, axes=([1, 4, 5], [1, 2, 3]))
    y = np.ascontiguousarray(y.transpose(0, 3, 1, 2))
    y += bias.data[None, :, None, None]
    out = Tensor(y)

    wdata = weight.data
    oh, ow = y.shape[2], y.shape[3]

    def vjp(g):
        dW = db = dx = None
        if bias.requires_grad:
            db = g.sum(axis=(0, 2, 3))
        if weight.requires_grad:
            win_b = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
            dW = np.tensordot(g, win_b, axes=([0, 2, 3], [0, 2, 3]))
        if x.requires_grad:
            dxp = np.zeros_like(xp)
            row_stop = k - 1 + stride * (oh - 1) + 1
            col_stop = k - 1 + stride * (ow - 1) + 1
            for ki in range(k):
                # (c_in, k, n, oh, ow) slab for one kernel row
                part = np.tensordot(wdata[:, :, ki, :], g, axes=([0], [1]))
                rows = slice(ki, ki + stride * (oh - 1) + 1, stride)
                for kj in range(k):
                    cols = slice(kj, kj + stride * (ow - 1) + 1, stride)
                    dxp[:, :, rows, cols] += part[:, kj].transpose(1, 0, 2, 3)
            dx = _reflect_pad_adjoint(dxp, pad, h, w)
        return (dx, dW, db)

    return record_op(out, (x, weight, bias), vjp)


def instance_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-sample, per-channel standardization with learnable affine.

    Moments are taken over each channel's h*w values (population variance).
    """
    _require_4d("instance_norm", x)
    n, c, h, w = x.shape
    if h * w < 1:
        raise ShapeError(f"instance_norm: empty spatial dims {h}x{w}")
    if gain.data.shape != (c,) or shift.data.shape != (c,):
        raise ShapeError(
            f"instance_norm: gain/shift shapes {gain.shape}/{shift.shape} do not match c={c}"
        )
    if eps <= 0:
        raise ShapeError(f"instance_norm: eps must be > 0, got {eps}")
    if x.dtype != gain.dtype or x.dtype != shift.dtype:
        raise ShapeError(f"instance_norm: mixed dtypes {x.dtype}/{gain.dtype}/{shift.dtype}")

    mu = x.data.mean(axis=(2, 3), keepdims=True)
    var = x.data.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = (x.data - mu) * inv
    out = Tensor(gain.data[None, :, None, None] * xhat + shift.data[None, :, None, None])
    gdata = gain.data

    def vjp(g):
        dgain = dshift = dx = None
        if gain.requires_grad:
            dgain = (g * xhat).sum(axis=(0, 2, 3))
        if shift.requires_grad:
            dshift = g.sum(axis=(0, 2, 3))
        if x.requires_grad:
            dxhat = g * gdata[None, :, None, None]
            m1 = dxhat.mean(axis=(2, 3), keepdims=True)
            m2 = (dxhat * xhat).mean(axis=(2, 3), keepdims=True)
            dx = inv * (dxhat - m1 - xhat * m2)
        return (dx, dgain, dshift)

    return record_op(out, (x, gain, shift), vjp)


def nearest_upsample(x: Tensor, factor: int) -> Tensor:
    """Replicate each pixel into a factor x factor block."""
    _require_4d("nearest_upsample", x)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ShapeError(f"nearest_upsample: factor must be an int >= 1, got {factor!r}")
    f = int(factor)
    out = Tensor(x.data.repeat(f, axis=2).repeat(f, axis=3))
    n, c, h, w = x.shape

    def vjp(g):
        return (g.reshape(n, c, h, f, w, f).sum(axis=(3, 5)),)

    return record_op(out, (x,), vjp)


def avg_pool2x2(x: Tensor) -> Tensor:
    """Non-overlapping 2x2 mean pooling; spatial dims must be even."""
    _require_4d("avg_pool2x2", x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2x2: spatial dims must be even, got {h}x{w}")
    out = Tensor(x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5)))

    def vjp(g):
        q = np.asarray(0.25, dtype=g.dtype)
        return ((g * q).repeat(2, axis=2).repeat(2, axis=3),)

    return record_op(out, (x,), vjp)


def gram(features: Tensor) -> Tensor:
    """Per-sample channel covariance matrices G = F F^T / (c*h*w).

    Output shape is (n, c, c); symmetric positive semidefinite by
    construction.
    """
    _require_4d("gram", features)
    n, c, h, w = features.shape
    if h * w < 1:
        raise ShapeError(f"gram: empty spatial dims {h}x{w}")
    norm = np.asarray(c * h * w, dtype=features.dtype)
    psi = features.data.reshape(n, c, h * w)
    out = Tensor(np.matmul(psi, psi.transpose(0, 2, 1)) / norm)

    def vjp(g):
        dpsi = np.matmul(g + g.transpose(0, 2, 1), psi) / norm
        return (dpsi.reshape(n, c, h, w),)

    return record_op(out, (features,), vjp)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean of squared differences over all elements, as a scalar."""
    if a.shape != b.shape:
        raise ShapeError(f"mse: operand shapes differ, {a.shape} vs {b.shape}")
    if a.dtype != b.dtype:
        raise ShapeError(f"mse: operand dtypes differ, {a.dtype} vs {b.dtype}")
    d = a.data - b.data
    out = Tensor(np.asarray(np.mean(d * d), dtype=a.dtype))
    k = 2.0 / d.size

    def vjp(g):
        base = (g * k) * d
        return (
            base if a.requires_grad else None,
            -base if b.requires_grad else None,
        )

    return record_op(out, (a, b), vjp)


def total_variation(x: Tensor) -> Tensor:
    """Sum of squared neighbor differences, normalized by element count.

    (sum of squared horizontal diffs + sum of squared vertical diffs)
    divided by n*c*h*w; zero for constant images.
    """
    _require_4d("total_variation", x)
    n, c, h, w = x.shape
    dh = x.data[:, :, :, 1:] - x.data[:, :, :, :-1]
    dv = x.data[:, :, 1:, :] - x.data[:, :, :-1, :]
    size = x.data.size
    out = Tensor(np.asarray((np.sum(dh * dh) + np.sum(dv * dv)) / size, dtype=x.dtype))

    def vjp(g):
        coef = 2.0 * float(g) / size
        dx = np.zeros_like(x.data)
        dx[:, :, :, 1:] += coef * dh
        dx[:, :, :, :-1] -= coef * dh
        dx[:, :, 1:, :] += coef * dv
        dx[:, :, :-1, :] -= coef * dv
        return (dx,)

    return record_op(out, (x,), vjp)
