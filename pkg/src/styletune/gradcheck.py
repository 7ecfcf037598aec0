"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .tensor import Tape, Tensor

__all__ = ["GradCheckEntry", "GradCheckReport", "grad_check"]


@dataclass(frozen=True)
class GradCheckEntry:
    param: str
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    tolerance: float
    epsilon: float
    entries: list[GradCheckEntry] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def worst(self) -> GradCheckEntry | None:
        return max(self.entries, key=lambda e: e.rel_error, default=None)

    def summary(self) -> str:
        status = "OK" if self.passed else "FAIL"
        line = (
            f"grad check {status}: {len(self.entries)} entries, "
            f"max relative error {self.max_rel_error:.3e} (tolerance {self.tolerance:.1e})"
        )
        w = self.worst()
        if w is not None and not self.passed:
            line += f"\n  worst: {w.param}[{w.index}] analytic={w.analytic:.6e} numeric={w.numeric:.6e}"
        return line


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    epsilon: float = 1e-4,
    tolerance: float = 1e-4,
    samples_per_param: int = 4,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare tape gradients of ``f()`` against central differences.

    ``f`` must be a deterministic closure over ``params`` returning a scalar
    tensor.  For each parameter a few entries are sampled; each is nudged by
    ``epsilon`` scaled by its magnitude and the relative error
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12) is recorded.
    Kinked inputs (e.g. relu at exactly 0) are the caller's responsibility
    to avoid.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    rng = rng if rng is not None else np.random.default_rng(0)

    probe_a = float(f().data)
    probe_b = float(f().data)
    if probe_a != probe_b:
        raise ValueError(
            f"grad_check requires a deterministic function; two passes gave {probe_a!r} and {probe_b!r}"
        )

    for p in params.values():
        p.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)

    report = GradCheckReport(tolerance=tolerance, epsilon=epsilon)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        gflat = (p.grad if p.grad is not None else np.zeros_like(p.data)).reshape(-1)
        count = min(samples_per_param, flat.size)
        picks = rng.choice(flat.size, size=count, replace=False)
        for i in picks:
            i = int(i)
            orig = flat[i]
            step = epsilon * max(1.0, abs(float(orig)))
            flat[i] = orig + step
            fp = float(f().data)
            flat[i] = orig - step
            fm = float(f().data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * step)
            analytic = float(gflat[i])
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)
            report.entries.append(GradCheckEntry(name, i, analytic, numeric, rel))
    return report
