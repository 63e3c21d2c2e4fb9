"""Top-k evaluation with confidence ordering by latent prior density.

Protocol: for every test example, ``n_draw`` standard-normal draws come
from a splitmix64 stream keyed by (seed, "eval", example index), so the
draws do not depend on batching.  Each draw is decoded, samples are
ordered by log-density of z under P(z|x) (descending, ties by draw
index), and top-k error is the minimum task error among the first k.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError, UsageError
from .nn import HALF_LOG_2PI
from .rng import SplitMix64
from .synthdata import SyntheticDataset, Task
from .tensor import Tensor, no_grad

CSV_HEADER = ["k", "mean_error", "stderr", "n"]


@dataclass
class ForecastSample:
    output: np.ndarray
    z: np.ndarray
    prior_log_density: float
    eps_log_density: float = 0.0
    flow: np.ndarray | None = None


@dataclass
class PredictionSet:
    """Samples for one example; ``confidence`` picks the density used for ordering ("z" or "epsilon")."""

    samples: list[ForecastSample]
    confidence: str = "z"

    @property
    def ordering(self) -> np.ndarray:
        if self.confidence == "z":
            dens = np.array([s.prior_log_density for s in self.samples])
        elif self.confidence == "epsilon":
            dens = np.array([s.eps_log_density for s in self.samples])
        else:
            raise UsageError(f"unknown confidence {self.confidence!r}")
        return np.argsort(-dens, kind="stable")

    def ordered(self) -> list[ForecastSample]:
        return [self.samples[i] for i in self.ordering]


def velocity_l2(pred, y) -> float:
    """Per-step Euclidean distance between velocity vectors, averaged over steps (and joints)."""
    p, t = _pair(pred, y)
    if p.shape[-1] != 2:
        raise ShapeError("velocity arrays must end in an axis of length 2")
    return float(np.mean(np.linalg.norm(p - t, axis=-1)))


def frame_l2(pred, y) -> float:
    """Mean squared pixel error."""
    p, t = _pair(pred, y)
    return float(np.mean((p - t) ** 2))


def _pair(pred, y):
    p = np.asarray(pred.data if isinstance(pred, Tensor) else pred, dtype=np.float64)
    t = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"prediction {p.shape} vs target {t.shape}")
    return p, t


def task_error(task: Task):
    return frame_l2 if task is Task.VIDEO else velocity_l2


def topk_error(pred_set: PredictionSet, y, k: int, error=velocity_l2) -> float:
    n = len(pred_set.samples)
    if not 1 <= k <= n:
        raise UsageError(f"k={k} outside 1..{n}")
    return min(error(s.output, y) for s in pred_set.ordered()[:k])


def topk_curve(errors: np.ndarray, log_density: np.ndarray, k_max: int) -> np.ndarray:
    """Top-k errors for k = 1..k_max; ``errors``/``log_density`` have draws on axis 0."""
    order = np.argsort(-log_density, axis=0, kind="stable")
    ranked = np.take_along_axis(errors, order, axis=0)
    return np.minimum.accumulate(ranked, axis=0)[:k_max]


@dataclass
class EvalReport:
    k: np.ndarray
    mean_error: np.ndarray
    stderr: np.ndarray
    n_examples: int
    per_mode: dict[int, np.ndarray] = field(default_factory=dict)
    curves: np.ndarray | None = None  # (n_examples, k_max)

    def top(self, k: int) -> float:
        return float(self.mean_error[k - 1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for k, m, s in zip(self.k, self.mean_error, self.stderr):
                w.writerow([int(k), repr(float(m)), repr(float(s)), self.n_examples])

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        rows = read_report_rows(path)
        return cls(np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                   np.array([r[2] for r in rows]), rows[0][3] if rows else 0)


def read_report_rows(path) -> list[tuple[int, float, float, int]]:
    """Parse a report CSV, raising :class:`FormatError` that names the file and line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}:1: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise FormatError(f"{path}:1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                k, m, s, n = int(row[0]), float(row[1]), float(row[2]), int(row[3])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric field") from None
            if k != len(rows) + 1:
                raise FormatError(f"{path}:{lineno}: k={k} out of sequence")
            rows.append((k, m, s, n))
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return rows


def draw_predictions(model, x, coords, eps: np.ndarray, inject_mean: bool = False):
    """Decode ``eps`` (n_draw, N, d) for a batch; returns outputs (n_draw, N, ...) and log densities (n_draw, N)."""
    n_draw, n = eps.shape[0], eps.shape[1]
    with no_grad():
        enc = model.encode(x, coords)
        if model.deterministic:
            dec = model.decode(model.prior(enc).mu, enc)
            out = np.broadcast_to(dec.prediction.data[None], (n_draw,) + dec.prediction.shape)
            return out, np.zeros((n_draw, n))
        params = model.prior(enc)
        if inject_mean:
            eps = eps.copy()
            eps[0] = 0.0
        mu, sigma = params.mu.data, params.sigma.data
        z = (mu[None] + eps * sigma[None]).reshape(n_draw * n, -1)
        dec = model.decode(Tensor(z), model.repeat(enc, n_draw))
        out = dec.prediction.data.reshape((n_draw, n) + dec.prediction.shape[1:])
        # sigma == 0 gives -inf for every draw: all tie, and the stable sort keeps draw order
        with np.errstate(divide="ignore"):
            logd = np.sum(-HALF_LOG_2PI - np.log(sigma)[None] - 0.5 * eps**2, axis=-1)
        return out, logd


def evaluate(model, dataset: SyntheticDataset, n_draw: int = 32, k_max: int = 15, seed: int = 0,
             batch_size: int = 64, inject_mean: bool = False) -> EvalReport:
    if k_max < 1 or n_draw < k_max:
        raise UsageError(f"need 1 <= k_max <= n_draw (got k_max={k_max}, n_draw={n_draw})")
    err_fn = task_error(dataset.task)
    d = model.cfg.latent_dim
    n = len(dataset)
    curves = np.zeros((n, k_max))
    for start in range(0, n, batch_size):
        stop = min(n, start + batch_size)
        eps = np.stack([SplitMix64(seed, "eval", i).normal((n_draw, d)) for i in range(start, stop)], axis=1)
        coords = dataset.coords[start:stop] if dataset.task is Task.JOINTS else None
        out, logd = draw_predictions(model, dataset.x[start:stop], coords, eps, inject_mean)
        y = dataset.y[start:stop]
        errors = np.empty((n_draw, stop - start))
        for j in range(stop - start):
            for s in range(n_draw):
                errors[s, j] = err_fn(out[s, j], y[j])
        curves[start:stop] = topk_curve(errors, logd, k_max).T
    return _report(curves, dataset.mode_id)


def _report(curves: np.ndarray, modes: np.ndarray) -> EvalReport:
    n, k_max = curves.shape
    mean = curves.mean(axis=0) if n else np.full(k_max, math.nan)
    stderr = curves.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(k_max)
    per_mode = {int(m): curves[modes == m].mean(axis=0) for m in np.unique(modes)}
    return EvalReport(np.arange(1, k_max + 1), mean, stderr, n, per_mode, curves)
