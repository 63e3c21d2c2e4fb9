"""Central finite-difference gradient checks for scalar functions of tensors."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor

# Relative errors use max(|analytic|, |numeric|, NORM_FLOOR) as denominator so
# that genuinely-zero gradients do not divide round-off by zero.
NORM_FLOOR = 1e-7


def _set(t: Tensor, arr: np.ndarray) -> None:
    arr = arr.copy()
    arr.flags.writeable = False
    t.data = arr


def numeric_grad(f: Callable[[], Tensor], t: Tensor, step: float = 1e-5, coords: np.ndarray | None = None) -> np.ndarray:
    """d f / d t by central differences at flat positions ``coords`` (all when None)."""
    base = t.data.copy()
    idx = np.arange(base.size) if coords is None else np.asarray(coords)
    out = np.zeros(len(idx))
    for n, i in enumerate(idx):
        bumped = base.copy().reshape(-1)
        bumped[i] += step
        _set(t, bumped.reshape(base.shape))
        fp = f().item()
        bumped[i] -= 2 * step
        _set(t, bumped.reshape(base.shape))
        fm = f().item()
        out[n] = (fp - fm) / (2 * step)
    _set(t, base)
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.linalg.norm(a), np.linalg.norm(b), NORM_FLOOR)
    return float(np.linalg.norm(a - b) / denom)


def check_gradients(f: Callable[[], Tensor], tensors: Sequence[Tensor], step: float = 1e-5,
                    max_coords: int | None = None, rng: np.random.Generator | None = None) -> dict[int, float]:
    """Relative error between backprop and central differences, per tensor index.

    With ``max_coords`` only that many randomly chosen entries of each tensor
    are probed (the analytic gradient is restricted to the same entries).
    """
    for t in tensors:
        t.grad = None
    f().backward()
    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in tensors]
    errors = {}
    for k, t in enumerate(tensors):
        coords = None
        if max_coords is not None and t.size > max_coords:
            rng = rng or np.random.default_rng(0)
            coords = np.sort(rng.choice(t.size, size=max_coords, replace=False))
        num = numeric_grad(f, t, step, coords)
        ana = analytic[k].reshape(-1) if coords is None else analytic[k].reshape(-1)[coords]
        errors[k] = relative_error(ana, num)
    for t in tensors:
        t.grad = None
    return errors
