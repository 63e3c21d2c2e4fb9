"""Training objectives over K decoded samples.

Samples are passed either as a list of K tensors shaped like ``y`` or as
one tensor with a leading K axis.  With ``batched=True`` the first axis of
``y`` indexes examples: the loss is computed per example and averaged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import tensor as T
from .errors import DomainError, ShapeError
from .nn import GaussianParams, kl_diag
from .tensor import Tensor


class Scheme(str, enum.Enum):
    MCML = "MCML"
    VA = "VA"
    KBEST = "KBEST"
    REGRESSION = "REGRESSION"


@dataclass
class LossConfig:
    scheme: Scheme = Scheme.KBEST
    K: int = 15
    nu: float = 0.5
    kl_weight: float = 1.0

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.scheme is Scheme.REGRESSION and self.K != 1:
            raise ValueError("REGRESSION uses a single prediction (K == 1)")
        if self.nu <= 0 or self.kl_weight <= 0:
            raise ValueError("nu and kl_weight must be positive")


def _stack(samples, y: Tensor) -> Tensor:
    if isinstance(samples, Tensor):
        stacked = samples
    else:
        samples = list(samples)
        if not samples:
            raise ShapeError("need at least one sample")
        stacked = T.stack(samples, axis=0)
    if stacked.shape[1:] != y.shape:
        raise ShapeError(f"samples {stacked.shape[1:]} do not match target {y.shape}")
    return stacked


def _sq_dist(pred: Tensor, y: Tensor, first_event_axis: int) -> Tensor:
    d = pred - y
    axes = tuple(range(first_event_axis, pred.ndim))
    return T.sum(T.square(d), axis=axes) if axes else T.square(d)


def _per_sample_sq(samples, y, batched: bool) -> Tensor:
    y = T.tensor(y)
    stacked = _stack(samples, y)
    target = T.reshape(y, (1,) + y.shape)
    return _sq_dist(stacked, target, 2 if batched else 1)  # (K,) or (K, N)


def regression_loss(pred, y, batched: bool = False) -> Tensor:
    """Sum of squared errors."""
    pred, y = T.tensor(pred), T.tensor(y)
    if pred.shape != y.shape:
        raise ShapeError(f"prediction {pred.shape} vs target {y.shape}")
    sq = _sq_dist(pred, y, 1 if batched else 0)
    return T.mean(sq) if batched else sq


def mcml_loss(samples, y, nu: float = 0.5, batched: bool = False) -> Tensor:
    """Negative log of sum_j exp(-||y_j - y||^2 / (2 nu)), the Monte-Carlo marginal likelihood."""
    if nu <= 0:
        raise DomainError("nu must be positive")
    sq = _per_sample_sq(samples, y, batched)
    nll = -T.logsumexp(sq * (-0.5 / nu), axis=0)
    return T.mean(nll) if batched else nll


def kbest_loss(samples, y, batched: bool = False) -> Tensor:
    """Squared error of the closest of the K samples; only that sample receives gradient."""
    sq = _per_sample_sq(samples, y, batched)
    best = T.amin(sq, axis=0)
    return T.mean(best) if batched else best


def va_loss(pred_from_q, y, q: GaussianParams, p: GaussianParams, nu: float = 0.5, kl_weight: float = 1.0,
            batched: bool = False, parts: dict | None = None) -> Tensor:
    """Conditional-VAE objective: ||pred - y||^2 / (2 nu) + kl_weight * KL(q || p).

    When ``parts`` is given it receives the two terms as floats (batch means).
    """
    if nu <= 0:
        raise DomainError("nu must be positive")
    pred, y = T.tensor(pred_from_q), T.tensor(y)
    if pred.shape != y.shape:
        raise ShapeError(f"prediction {pred.shape} vs target {y.shape}")
    recon = _sq_dist(pred, y, 1 if batched else 0) * (0.5 / nu)
    kl = kl_diag(q, p)
    if batched:
        recon, kl = T.mean(recon), T.mean(kl)
    if parts is not None:
        parts["recon"] = recon.item()
        parts["kl"] = kl.item()
    return recon + kl * kl_weight


def mcml_kbest_gap(kbest_value: float, nu: float, K: int) -> float:
    """Lower bound on the MCML loss implied by the K-best loss: kbest/(2 nu) - ln K."""
    return kbest_value / (2.0 * nu) - math.log(K)
