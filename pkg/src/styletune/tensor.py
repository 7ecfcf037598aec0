"""Dense tensor values with reverse-mode automatic differentiation.

Values wrap numpy arrays.  Feature maps use the (batch, channel, height,
width) layout throughout; losses are rank-0 scalars and per-channel
parameters are rank-1 vectors.  Gradients are produced by recording
operations on a :class:`Tape` and replaying the record backward from a
scalar loss.  With no tape active, every op runs in plain inference mode
with zero bookkeeping.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "ShapeError",
    "TapeError",
    "backward",
    "add",
    "sub",
    "mul",
    "scale",
    "scale_by",
    "relu",
    "sigmoid",
    "tsum",
]

_FLOAT_DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """An operand violates an op's shape, dtype, or parameter contract."""


class TapeError(RuntimeError):
    """Tape misuse: backward on a non-scalar, or a second backward call."""


class Tensor:
    """A numpy array plus autodiff bookkeeping.

    ``data`` is float32 or float64.  Tensors are treated as immutable once
    they have entered an op; the only sanctioned mutation is the trainer's
    in-place parameter update between optimization steps.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float64)
        self.data: np.ndarray = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """A view of the same storage with gradient tracking off."""
        return Tensor(self.data)

    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy(), self.requires_grad)
        if self.grad is not None:
            t.grad = self.grad.copy()
        return t

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


# ---------------------------------------------------------------------------
# Tape machinery

_ACTIVE = threading.local()


def _tape_stack() -> list:
    stack = getattr(_ACTIVE, "stack", None)
    if stack is None:
        stack = []
        _ACTIVE.stack = stack
    return stack


def current_tape() -> Optional["Tape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Execution-ordered record of differentiable operations.

    Entries are appended in forward execution order, so walking them in
    reverse visits the graph in reverse topological order.  A tape is
    confined to one logical thread and supports exactly one backward pass;
    a second call raises :class:`TapeError`.
    """

    def __init__(self):
        self._entries: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tape exit out of order")
        stack.pop()
        return False

    def __len__(self) -> int:
        return len(self._entries)

    def record(self, out: Tensor, parents: Sequence[Tensor], vjp: Callable) -> None:
        self._entries.append((out, tuple(parents), vjp))

    def backward(self, loss: Tensor) -> None:
        """Populate ``grad`` on every requires_grad ancestor of ``loss``.

        ``loss`` must be a rank-0 scalar produced while this tape was
        active.  Each ancestor's gradient is finalized exactly once per
        call; calling backward twice on one tape is an error.
        """
        if self._consumed:
            raise TapeError("backward was already called on this tape")
        if loss.data.ndim != 0:
            raise TapeError(f"backward requires a scalar loss, got shape {loss.shape}")
        self._consumed = True

        grads: dict[int, np.ndarray] = {id(loss): np.asarray(1.0, dtype=loss.dtype)}
        holders: dict[int, Tensor] = {id(loss): loss}
        for out, parents, vjp in reversed(self._entries):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            if out.requires_grad:
                out.grad = g
            for parent, pg in zip(parents, vjp(g)):
                if pg is None:
                    continue
                pid = id(parent)
                if pid in grads:
                    grads[pid] = grads[pid] + pg
                else:
                    grads[pid] = pg
                    holders[pid] = parent
        for tid, g in grads.items():
            t = holders[tid]
            if t.requires_grad:
                t.grad = np.asarray(g)


def backward(loss: Tensor, tape: Tape) -> None:
    """Functional alias for ``tape.backward(loss)``."""
    tape.backward(loss)


def record_op(out: Tensor, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
    """Attach ``out`` to the active tape if any parent participates in grad."""
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(out, parents, vjp)
    return out


# ---------------------------------------------------------------------------
# Elementwise ops

def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    """Strict equality check; there is no implicit broadcasting anywhere."""
    if a.shape != b.shape:
        raise ShapeError(f"{op}: operand shapes differ, {a.shape} vs {b.shape}")
    if a.dtype != b.dtype:
        raise ShapeError(f"{op}: operand dtypes differ, {a.dtype} vs {b.dtype}")


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    check_same_shape("add", a, b)
    out = Tensor(a.data + b.data)

    def vjp(g):
        return (g if a.requires_grad else None, g if b.requires_grad else None)

    return record_op(out, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    check_same_shape("sub", a, b)
    out = Tensor(a.data - b.data)

    def vjp(g):
        return (g if a.requires_grad else None, -g if b.requires_grad else None)

    return record_op(out, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    check_same_shape("mul", a, b)
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data

    def vjp(g):
        return (
            g * bd if a.requires_grad else None,
            g * ad if b.requires_grad else None,
        )

    return record_op(out, (a, b), vjp)


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a plain python constant (not a tape value)."""
    c = float(c)
    out = Tensor(x.data * np.asarray(c, dtype=x.dtype))

    def vjp(g):
        return (g * c,)

    return record_op(out, (x,), vjp)


def scale_by(s: Tensor, x: Tensor) -> Tensor:
    """Multiply a tensor by a rank-0 scalar tensor.

    This is the one sanctioned scalar-times-array product; everything else
    requires exactly matching shapes.
    """
    if s.data.ndim != 0:
        raise ShapeError(f"scale_by: scale factor must be rank-0, got shape {s.shape}")
    if s.dtype != x.dtype:
        raise ShapeError(f"scale_by: operand dtypes differ, {s.dtype} vs {x.dtype}")
    out = Tensor(s.data * x.data)
    sd, xd = s.data, x.data

    def vjp(g):
        ds = np.asarray(np.sum(g * xd), dtype=xd.dtype) if s.requires_grad else None
        dx = g * sd if x.requires_grad else None
        return (ds, dx)

    return record_op(out, (s, x), vjp)


def relu(x: Tensor) -> Tensor:
    """max(x, 0); the subgradient at exactly 0 is taken to be 0."""
    out = Tensor(np.maximum(x.data, 0))
    mask = x.data > 0

    def vjp(g):
        return (g * mask,)

    return record_op(out, (x,), vjp)


def sigmoid(x: Tensor) -> Tensor:
    """1 / (1 + exp(-x)); maps into the open interval (0, 1)."""
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s)

    def vjp(g):
        return (g * s * (1.0 - s),)

    return record_op(out, (x,), vjp)


def tsum(x: Tensor) -> Tensor:
    """Sum of all elements, as a rank-0 scalar."""
    out = Tensor(np.asarray(x.data.sum(), dtype=x.dtype))
    shape, dtype = x.shape, x.dtype

    def vjp(g):
        return (np.full(shape, float(g), dtype=dtype),)

    return record_op(out, (x,), vjp)
