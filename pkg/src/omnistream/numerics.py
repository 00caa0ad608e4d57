"""Small numerical helpers: central differences and error measures."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np


def central_difference(f: Callable[[float], float], x: float, eps: float = 1e-5) -> float:
    """Two-sided derivative estimate of a scalar function at x."""
    return (f(x + eps) - f(x - eps)) / (2.0 * eps)


def relative_error(a: float, b: float) -> float:
    """|a - b| scaled by the larger magnitude; 0 when both vanish."""
    denom = max(abs(a), abs(b))
    if denom == 0.0:
        return 0.0
    return abs(a - b) / denom


def gradcheck_error(fd: float, analytic: float, floor: float = 1e-6) -> float:
    """Relative error with the denominator floored at the FD noise scale.

    A central difference of an O(1) loss at eps=1e-5 carries ~1e-11 of
    float64 cancellation noise, so for gradients below ~1e-6 a pure
    relative comparison measures the oracle's noise rather than the
    gradient; those entries are effectively compared absolutely.
    """
    return abs(fd - analytic) / max(abs(fd), abs(analytic), floor)


def fd_weight_gradient(
    loss_fn: Callable[[], float],
    weights: Mapping[str, np.ndarray],
    name: str,
    flat_index: int,
    eps: float = 1e-5,
) -> float:
    """Central-difference d(loss)/d(weights[name].flat[flat_index]).

    Perturbs the entry in place and restores it, so ``loss_fn`` may close
    over ``weights`` directly.
    """
    w = weights[name]
    saved = w.flat[flat_index]
    try:
        w.flat[flat_index] = saved + eps
        f_plus = loss_fn()
        w.flat[flat_index] = saved - eps
        f_minus = loss_fn()
    finally:
        w.flat[flat_index] = saved
    return (f_plus - f_minus) / (2.0 * eps)
