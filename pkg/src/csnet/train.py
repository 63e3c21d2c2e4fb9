"""Mini-batch Adam training for the four schemes, plus the flat config format."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import losses
from . import tensor as T
from .errors import TrainingError, UsageError
from .evaluation import evaluate
from .losses import Scheme
from .models import DecoderKind, ModelConfig, StochasticNet, save_checkpoint
from .nn import Adam
from .rng import SplitMix64
from .synthdata import SyntheticDataset, Task, read_dataset
from .tensor import Tensor

log = logging.getLogger(__name__)

_DEFAULT_DECODER = {Task.TRAJECTORY: DecoderKind.FC, Task.JOINTS: DecoderKind.CONV_INDEXED, Task.VIDEO: DecoderKind.FLOW}


def parse_task(value) -> Task:
    if isinstance(value, Task):
        return value
    if isinstance(value, str) and not value.isdigit():
        try:
            return Task[value.upper()]
        except KeyError:
            raise UsageError(f"unknown task {value!r}") from None
    return Task(int(value))


@dataclass
class TrainConfig:
    task: Task = Task.TRAJECTORY
    scheme: Scheme = Scheme.KBEST
    K: int = 15
    nu: float = 0.5
    kl_weight: float = 1.0
    latent_dim: int = 8
    learning_rate: float = 1e-3
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    dataset_path: str = ""
    history: int = 1
    decoder: DecoderKind | None = None
    checkpoint_path: str = ""
    log_path: str = ""
    enc_channels: tuple[int, ...] = (8, 16, 32)
    feat_dim: int = 64
    hidden: int = 128
    dec_channels: int = 16
    # None: derived from the scheme (only REGRESSION is deterministic)
    stochastic: bool | None = None
    log_eval_n: int = 32
    log_eval_draws: int = 8

    def __post_init__(self):
        self.task = parse_task(self.task)
        if not isinstance(self.scheme, Scheme):
            self.scheme = Scheme(str(self.scheme).upper())
        if self.scheme is Scheme.REGRESSION:
            self.K = 1
        if self.decoder is None:
            self.decoder = _DEFAULT_DECODER[self.task]
        if not isinstance(self.decoder, DecoderKind):
            self.decoder = DecoderKind(str(self.decoder).upper())
        if self.stochastic is None:
            self.stochastic = self.scheme is not Scheme.REGRESSION
        if self.K < 1 or self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise UsageError("K, batch_size >= 1, epochs >= 0 and learning_rate > 0 required")
        if self.nu <= 0 or self.kl_weight <= 0:
            raise UsageError("nu and kl_weight must be positive")
        if self.scheme is Scheme.VA and not self.stochastic:
            raise UsageError("VA needs a stochastic latent")
        # raises on an invalid task/decoder pairing
        self.model_config((32, 32), 20, 1)

    def model_config(self, frame_size, horizon: int, joints: int) -> ModelConfig:
        return ModelConfig(
            task=self.task, decoder=self.decoder, frame_size=tuple(frame_size), history=self.history, channels=1,
            horizon=horizon, joints=max(joints, 1), latent_dim=self.latent_dim, enc_channels=self.enc_channels,
            feat_dim=self.feat_dim, hidden=self.hidden, dec_channels=self.dec_channels, stochastic=self.stochastic,
        )


def _coerce(f: dataclasses.Field, raw: str):
    name = f.name
    if name == "task":
        return parse_task(raw)
    if name == "scheme":
        return Scheme(raw.upper())
    if name == "decoder":
        return DecoderKind(raw.upper())
    if name == "enc_channels":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if name == "stochastic":
        return None if raw.lower() in ("", "auto", "none") else raw.lower() in ("1", "true", "yes")
    if name in ("nu", "kl_weight", "learning_rate"):
        return float(raw)
    if name in ("dataset_path", "checkpoint_path", "log_path"):
        return raw
    return int(raw)


def parse_config(text: str) -> TrainConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    aliases = {"nf": "history", "d": "latent_dim", "lr": "learning_rate"}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = aliases.get(key.lower(), key)
        if key not in fields:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(fields[key], raw)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"config line {lineno}: bad value for {key}: {exc}") from None
    return TrainConfig(**values)


def load_config(path) -> TrainConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, Task):
            v = v.name
        elif isinstance(v, (Scheme, DecoderKind)):
            v = v.value
        elif isinstance(v, tuple):
            v = ",".join(str(i) for i in v)
        elif v is None:
            v = "auto"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


@dataclass
class RunLog:
    seed: int
    config_echo: str
    rows: list[dict] = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "recon", "kl", "eval_top1", "eval_top4", "wall_time", "seed")

    def append(self, **row) -> None:
        self.rows.append(row)

    def losses(self) -> list[float]:
        return [r["train_loss"] for r in self.rows]

    def to_csv(self, path) -> None:
        out = ["# " + line for line in self.config_echo.splitlines()]
        out.append(",".join(self.COLUMNS))
        for r in self.rows:
            out.append(",".join(repr(r.get(c, math.nan)) if c != "epoch" and c != "seed" else str(r.get(c))
                                for c in self.COLUMNS))
        Path(path).write_text("\n".join(out) + "\n")


def batch_loss(model: StochasticNet, cfg: TrainConfig, x, y, coords, rng: SplitMix64, parts: dict | None = None) -> Tensor:
    """Objective of ``cfg.scheme`` on one mini-batch (mean over examples)."""
    enc = model.encode(x, coords)
    prior = model.prior(enc)
    n, d = x.shape[0], cfg.latent_dim
    y_t = Tensor(y)
    if cfg.scheme is Scheme.VA:
        q = model.posterior(enc, y)
        lat = model.latent(q, rng.normal((n, d)))
        pred = model.decode(lat.z, enc).prediction
        return losses.va_loss(pred, y_t, q, prior, cfg.nu, cfg.kl_weight, batched=True, parts=parts)
    if cfg.scheme is Scheme.REGRESSION:
        pred = model.decode(prior.mu, enc).prediction
        return losses.regression_loss(pred, y_t, batched=True)
    k = cfg.K
    eps = rng.normal((k, n, d))
    rep = model.repeat(enc, k)
    if model.deterministic:
        z = T.take(prior.mu, np.tile(np.arange(n), k))
    else:
        mu = T.reshape(prior.mu, (1, n, d))
        sigma = T.reshape(prior.sigma, (1, n, d))
        z = T.reshape(mu + Tensor(eps) * sigma, (k * n, d))
    pred = model.decode(z, rep).prediction
    samples = T.reshape(pred, (k, n) + pred.shape[1:])
    if cfg.scheme is Scheme.MCML:
        return losses.mcml_loss(samples, y_t, cfg.nu, batched=True)
    return losses.kbest_loss(samples, y_t, batched=True)


def build_model(cfg: TrainConfig, ds: SyntheticDataset) -> StochasticNet:
    if ds.task is not cfg.task:
        raise UsageError(f"dataset task {ds.task.name} does not match config task {cfg.task.name}")
    if ds.history != cfg.history:
        raise UsageError(f"dataset has Nf={ds.history} history frames but config says {cfg.history}")
    return StochasticNet(cfg.model_config(ds.frame_size, ds.horizon, ds.joints), seed=cfg.seed)


def train(cfg: TrainConfig, dataset: SyntheticDataset | None = None, model: StochasticNet | None = None) -> tuple[StochasticNet, RunLog]:
    """Train on the even-index half of ``dataset``; log top-1/top-4 on a slice of the odd half."""
    if dataset is None:
        if not cfg.dataset_path:
            raise UsageError("no dataset given")
        dataset = read_dataset(cfg.dataset_path)
    train_set, test_set = dataset.split_parity()
    if model is None:
        model = build_model(cfg, dataset)
    opt = Adam(model.parameters(), lr=cfg.learning_rate)
    runlog = RunLog(cfg.seed, format_config(cfg))
    probe = test_set.subset(np.arange(min(cfg.log_eval_n, len(test_set))))
    n = len(train_set)
    use_coords = train_set.task is Task.JOINTS
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = SplitMix64(cfg.seed, "batches", epoch).permutation(n)
        total, recon, kl, count = 0.0, 0.0, 0.0, 0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            parts: dict = {}
            rng = SplitMix64(cfg.seed, "latent", epoch, b)
            loss = batch_loss(model, cfg, train_set.x[idx], train_set.y[idx],
                              train_set.coords[idx] if use_coords else None, rng, parts)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(f"non-finite loss {value} at epoch {epoch}, batch {b} (scheme {cfg.scheme.value})")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += value * len(idx)
            recon += parts.get("recon", math.nan) * len(idx)
            kl += parts.get("kl", math.nan) * len(idx)
            count += len(idx)
        row = {"epoch": epoch, "train_loss": total / max(count, 1), "recon": recon / max(count, 1),
               "kl": kl / max(count, 1), "seed": cfg.seed}
        if len(probe) and cfg.log_eval_draws >= 4:
            rep = evaluate(model, probe, n_draw=cfg.log_eval_draws, k_max=4, seed=cfg.seed)
            row["eval_top1"], row["eval_top4"] = rep.top(1), rep.top(4)
        else:
            row["eval_top1"] = row["eval_top4"] = math.nan
        row["wall_time"] = time.perf_counter() - t0
        runlog.append(**row)
        log.debug("epoch %d loss %.6g", epoch, row["train_loss"])
    if cfg.checkpoint_path:
        save_checkpoint(model, cfg.checkpoint_path)
    if cfg.log_path:
        runlog.to_csv(cfg.log_path)
    return model, runlog
