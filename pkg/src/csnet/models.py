"""Glimpse encoder, trajectory and flow decoders, bilinear warping, recognition network.

All network code works on batches: glimpse stacks are (N, Nf*C, H, W).
The module-level functions (:func:`encode`, :func:`gather_at`,
:func:`bilinear_warp`, ...) also accept a single unbatched example.

Flow fields are backward displacements in pixels: channel 0 is the row
offset, channel 1 the column offset, and ``out[p] = frame[p + flow[p]]``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import nn
from . import tensor as T
from .errors import FormatError, InputError, ShapeError, UsageError
from .nn import Conv2d, ConvTranspose2d, GaussianHead, GaussianParams, LatentSample, Linear, Module
from .rng import SplitMix64
from .synthdata import Task
from .tensor import Tensor

CHECKPOINT_MAGIC = b"CSNC"
CHECKPOINT_VERSION = 1


class DecoderKind(str, enum.Enum):
    FC = "FC"
    CONV_INDEXED = "CONV_INDEXED"
    FLOW = "FLOW"


_ALLOWED = {
    Task.TRAJECTORY: {DecoderKind.FC},
    Task.JOINTS: {DecoderKind.FC, DecoderKind.CONV_INDEXED},
    Task.VIDEO: {DecoderKind.FLOW},
}


@dataclass
class ModelConfig:
    task: Task
    decoder: DecoderKind
    frame_size: tuple[int, int] = (32, 32)
    history: int = 1
    channels: int = 1
    horizon: int = 20
    joints: int = 1
    latent_dim: int = 8
    enc_channels: tuple[int, ...] = (8, 16, 32)
    feat_dim: int = 64
    hidden: int = 128
    dec_channels: int = 16
    stochastic: bool = True

    def __post_init__(self):
        self.task = Task(self.task)
        self.decoder = DecoderKind(self.decoder)
        self.frame_size = tuple(int(v) for v in self.frame_size)
        self.enc_channels = tuple(int(v) for v in self.enc_channels)
        if self.decoder not in _ALLOWED[self.task]:
            raise UsageError(f"decoder {self.decoder.value} is not valid for task {self.task.name}")
        scale = 2 ** len(self.enc_channels)
        if any(s % scale for s in self.frame_size):
            raise ShapeError(f"frame size {self.frame_size} must be divisible by {scale}")
        if self.latent_dim < 1:
            raise UsageError("latent_dim must be >= 1")

    @property
    def top_extent(self) -> tuple[int, int]:
        scale = 2 ** len(self.enc_channels)
        return self.frame_size[0] // scale, self.frame_size[1] // scale

    @property
    def output_shape(self) -> tuple[int, ...]:
        if self.task is Task.TRAJECTORY:
            return (self.horizon, 2)
        if self.task is Task.JOINTS:
            return (self.joints, self.horizon, 2)
        return (self.channels,) + self.frame_size

    @property
    def uses_skips(self) -> bool:
        return self.decoder is not DecoderKind.FC


class Encoder(Module):
    """Stride-2 conv + relu stages, then flatten + linear + relu."""

    def __init__(self, c_in: int, channels: tuple[int, ...], top_hw: tuple[int, int], feat_dim: int, rng: SplitMix64):
        self.stages = []
        prev = c_in
        for c in channels:
            self.stages.append(Conv2d(prev, c, 4, 2, 1, rng))
            prev = c
        self.fc = Linear(prev * top_hw[0] * top_hw[1], feat_dim, rng)

    def __call__(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        skips = []
        h = x
        for conv in self.stages:
            h = T.relu(conv(h))
            skips.append(h)
        flat = T.reshape(h, (h.shape[0], -1))
        return T.relu(self.fc(flat)), skips


class FCDecoder(Module):
    """Four linear layers from [z, features] to flattened velocities."""

    def __init__(self, n_in: int, hidden: int, n_out: int, rng: SplitMix64):
        self.layers = [Linear(n_in, hidden, rng), Linear(hidden, hidden, rng), Linear(hidden, hidden, rng),
                       Linear(hidden, n_out, rng)]

    def __call__(self, h: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            h = T.relu(layer(h))
        return self.layers[-1](h)


class UpTrunk(Module):
    """Transposed-conv stack from the top encoder map (plus replicated z) back to frame resolution.

    Encoder stage outputs are concatenated on channels at matching resolutions.
    """

    def __init__(self, enc_channels: tuple[int, ...], d: int, out_channels: int, use_skips: bool, rng: SplitMix64):
        self.use_skips = use_skips
        n = len(enc_channels)
        self.ups = []
        prev = enc_channels[-1] + d
        for s in reversed(range(n)):
            c = enc_channels[s - 1] if s > 0 else out_channels
            self.ups.append(ConvTranspose2d(prev, c, 4, 2, 1, rng))
            prev = c + (c if (use_skips and s > 0) else 0)
        self.head = Conv2d(prev, out_channels, 3, 1, 1, rng)

    def __call__(self, top: Tensor, z: Tensor | None, skips: list[Tensor]) -> Tensor:
        h = top
        if z is not None:
            h = T.concat([h, nn.replicate_spatial(z, top.shape[2], top.shape[3])], axis=1)
        n = len(self.ups)
        for i, up in enumerate(self.ups):
            s = n - 1 - i
            h = T.relu(up(h))
            if self.use_skips and s > 0:
                h = T.concat([h, skips[s - 1]], axis=1)
        return self.head(h)


class ConvIndexedDecoder(Module):
    """Feature map from :class:`UpTrunk`, gathered at joint pixels, one linear head per joint."""

    def __init__(self, cfg: ModelConfig, use_skips: bool, rng: SplitMix64):
        self.trunk = UpTrunk(cfg.enc_channels, cfg.latent_dim, cfg.dec_channels, use_skips, rng)
        self.heads = [Linear(cfg.dec_channels, 2 * cfg.horizon, rng) for _ in range(cfg.joints)]
        self.frame_size = cfg.frame_size
        self.horizon = cfg.horizon

    def __call__(self, top, z, skips, coords: np.ndarray) -> Tensor:
        fmap = self.trunk(top, z, skips)
        scaled = scale_coords(coords, self.frame_size, fmap.shape[-2:])
        gathered = gather_at(fmap, scaled)  # N, J, c
        outs = [head(gathered[:, j]) for j, head in enumerate(self.heads)]
        stacked = T.stack(outs, axis=1)
        return T.reshape(stacked, (stacked.shape[0], len(self.heads), self.horizon, 2))


class FlowDecoder(Module):
    def __init__(self, cfg: ModelConfig, rng: SplitMix64):
        self.trunk = UpTrunk(cfg.enc_channels, cfg.latent_dim, 2, True, rng)

    def __call__(self, top, z, skips) -> Tensor:
        return self.trunk(top, z, skips)


class OutcomeEncoder(Module):
    """Embeds the ground-truth outcome for the recognition network."""

    def __init__(self, cfg: ModelConfig, rng: SplitMix64):
        self.is_frame = cfg.task is Task.VIDEO
        if self.is_frame:
            self.conv = Encoder(cfg.channels, cfg.enc_channels, cfg.top_extent, cfg.feat_dim, rng)
        else:
            self.fc = Linear(int(np.prod(cfg.output_shape)), cfg.feat_dim, rng)

    def __call__(self, y: Tensor) -> Tensor:
        if self.is_frame:
            return self.conv(y)[0]
        return T.relu(self.fc(T.reshape(y, (y.shape[0], -1))))


class RecognitionNet(Module):
    """Q(z | x, y): concatenates E(x) with an embedding of y and applies a Gaussian head."""

    def __init__(self, cfg: ModelConfig, rng: SplitMix64):
        self.outcome = OutcomeEncoder(cfg, rng)
        self.head = GaussianHead(2 * cfg.feat_dim, cfg.latent_dim, rng)

    def __call__(self, features: Tensor, y) -> GaussianParams:
        ey = self.outcome(T.tensor(y))
        return self.head(T.concat([features, ey], axis=1))


@dataclass
class Encoded:
    features: Tensor
    skips: list[Tensor]
    x: np.ndarray
    coords: np.ndarray | None = None


@dataclass
class Decoded:
    prediction: Tensor
    flow: Tensor | None = None


class StochasticNet(Module):
    """Encoder, prior head, decoder and recognition network for one task."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        rng = SplitMix64(seed, "init")
        c_in = cfg.history * cfg.channels
        self.encoder = Encoder(c_in, cfg.enc_channels, cfg.top_extent, cfg.feat_dim, rng)
        self.prior_head = GaussianHead(cfg.feat_dim, cfg.latent_dim, rng)
        if cfg.decoder is DecoderKind.FC:
            n_out = int(np.prod(cfg.output_shape))
            self.decoder = FCDecoder(cfg.latent_dim + cfg.feat_dim, cfg.hidden, n_out, rng)
        elif cfg.decoder is DecoderKind.CONV_INDEXED:
            self.decoder = ConvIndexedDecoder(cfg, True, rng)
        else:
            self.decoder = FlowDecoder(cfg, rng)
        self.recognition = RecognitionNet(cfg, rng)

    @property
    def deterministic(self) -> bool:
        return not self.cfg.stochastic

    def named_parameters(self, prefix: str = ""):
        for name in ("encoder", "prior_head", "decoder", "recognition"):
            yield from getattr(self, name).named_parameters(f"{prefix}{name}.")

    def generator_parameters(self) -> list[Tensor]:
        return [p for n, p in self.named_parameters() if not n.startswith("recognition.")]

    # -- forward pieces ------------------------------------------------

    def encode(self, x, coords=None) -> Encoded:
        x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
        expect = (self.cfg.history * self.cfg.channels,) + self.cfg.frame_size
        if x.shape[1:] != expect:
            raise ShapeError(f"glimpse stack {x.shape[1:]} does not match model input {expect}")
        features, skips = self.encoder(Tensor(x))
        return Encoded(features, skips, x, None if coords is None else np.asarray(coords))

    def prior(self, enc: Encoded) -> GaussianParams:
        return self.prior_head(enc.features)

    def posterior(self, enc: Encoded, y) -> GaussianParams:
        return self.recognition(enc.features, y)

    def repeat(self, enc: Encoded, times: int) -> Encoded:
        """Tile every example ``times`` times, sample-major: index k*N + n."""
        n = enc.features.shape[0]
        idx = np.tile(np.arange(n), times)
        return Encoded(
            T.take(enc.features, idx),
            [T.take(s, idx) for s in enc.skips] if self.cfg.uses_skips else enc.skips,
            enc.x[idx],
            None if enc.coords is None else enc.coords[idx],
        )

    def decode(self, z, enc: Encoded) -> Decoded:
        z = T.tensor(z)
        cfg = self.cfg
        if cfg.decoder is DecoderKind.FC:
            flat = self.decoder(T.concat([z, enc.features], axis=1))
            return Decoded(T.reshape(flat, (flat.shape[0],) + cfg.output_shape))
        if cfg.decoder is DecoderKind.CONV_INDEXED:
            if enc.coords is None:
                raise UsageError("conv-indexed decoding needs joint coordinates")
            return Decoded(self.decoder(enc.skips[-1], z, enc.skips, enc.coords))
        flow = self.decoder(enc.skips[-1], z, enc.skips)
        last = enc.x[:, -cfg.channels:]
        return Decoded(bilinear_warp(Tensor(last), flow), flow)

    def latent(self, params: GaussianParams, eps: np.ndarray) -> LatentSample:
        """Reparameterized latent; deterministic models always decode z = mu."""
        if self.deterministic:
            zero = np.zeros(params.mu.shape)
            return LatentSample(params.mu, zero, T.tensor(np.zeros(params.mu.shape[:-1])),
                                nn.standard_normal_log_density(zero))
        return nn.sample(params, eps)


# -- functional surface ------------------------------------------------------


def _batch(x):
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    return x


def encode(model: StochasticNet, x) -> tuple[Tensor, list[Tensor]]:
    """Features and skip taps for one glimpse stack (Nf*C, H, W) or a batch."""
    arr = _batch(x)
    single = arr.ndim == 3
    enc = model.encode(arr[None] if single else arr)
    if single:
        return enc.features[0], [s[0] for s in enc.skips]
    return enc.features, enc.skips


def scale_coords(coords, frame_hw, feat_hw) -> np.ndarray:
    """Map frame pixel (row, col) to feature-map cells: floor(coord * feat / frame)."""
    c = np.asarray(coords, dtype=np.int64)
    out = np.empty_like(c)
    out[..., 0] = (c[..., 0] * feat_hw[0]) // frame_hw[0]
    out[..., 1] = (c[..., 1] * feat_hw[1]) // frame_hw[1]
    return out


def gather_at(fmap, coords) -> Tensor:
    """Rows ``fmap[:, r_j, c_j]``: (c,H,W)+(J,2) -> (J,c), or batched (N,c,H,W)+(N,J,2) -> (N,J,c)."""
    fmap = T.tensor(fmap)
    c = np.asarray(coords)
    if c.size and not np.issubdtype(c.dtype, np.integer):
        if np.any(c != np.floor(c)):
            raise InputError("gather coordinates must be integers")
    c = c.astype(np.int64)
    single = fmap.ndim == 3
    if single:
        if c.ndim != 2 or c.shape[-1] != 2:
            raise ShapeError(f"coords must be (J, 2), got {c.shape}")
        return gather_at(T.reshape(fmap, (1,) + fmap.shape), c[None])[0]
    if fmap.ndim != 4 or c.ndim != 3 or c.shape[0] != fmap.shape[0] or c.shape[-1] != 2:
        raise ShapeError(f"gather_at: fmap {fmap.shape} with coords {c.shape}")
    h, w = fmap.shape[2], fmap.shape[3]
    rows, cols = c[..., 0], c[..., 1]
    if np.any(rows < 0) or np.any(rows >= h) or np.any(cols < 0) or np.any(cols >= w):
        raise InputError(f"coordinate outside the {h}x{w} feature map")
    n_idx = np.arange(fmap.shape[0])[:, None]
    return fmap[n_idx, :, rows, cols]


def decode_trajectories(model: StochasticNet, z, enc: Encoded, coords=None) -> Tensor:
    """Velocity sequences (N, J, h, 2) for latent codes ``z`` (N, d)."""
    if model.cfg.decoder is DecoderKind.FLOW:
        raise UsageError("flow decoders produce frames, not trajectories")
    if model.cfg.decoder is DecoderKind.CONV_INDEXED:
        if coords is None and enc.coords is None:
            raise UsageError("conv-indexed decoding needs joint coordinates")
        if coords is not None:
            enc = Encoded(enc.features, enc.skips, enc.x, np.asarray(coords))
    z = z.z if isinstance(z, LatentSample) else z
    out = model.decode(z, enc).prediction
    if model.cfg.task is Task.TRAJECTORY:
        out = T.reshape(out, (out.shape[0], 1) + out.shape[1:])
    return out


def _warp_setup(h: int, w: int, flow: np.ndarray):
    rows = np.arange(h, dtype=np.float64)[:, None] + flow[:, 0]
    cols = np.arange(w, dtype=np.float64)[None, :] + flow[:, 1]
    rc = np.clip(rows, 0.0, h - 1.0)
    cc = np.clip(cols, 0.0, w - 1.0)
    r0 = np.minimum(np.floor(rc), max(h - 2, 0)).astype(np.intp)
    c0 = np.minimum(np.floor(cc), max(w - 2, 0)).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    wr = rc - r0
    wc = cc - c0
    in_r = (rows >= 0.0) & (rows <= h - 1.0)
    in_c = (cols >= 0.0) & (cols <= w - 1.0)
    return r0, r1, c0, c1, wr, wc, in_r, in_c


def bilinear_warp(frame, flow) -> Tensor:
    """Backward warp: ``out[:, i, j]`` samples ``frame`` at (i + flow[0,i,j], j + flow[1,i,j]).

    Source positions outside the image are clamped to the border.
    Differentiable with respect to both ``frame`` and ``flow``.
    """
    frame, flow = T.tensor(frame), T.tensor(flow)
    single = frame.ndim == 3
    if single:
        if flow.ndim != 3:
            raise ShapeError(f"flow {flow.shape} does not match frame {frame.shape}")
        return bilinear_warp(T.reshape(frame, (1,) + frame.shape), T.reshape(flow, (1,) + flow.shape))[0]
    if frame.ndim != 4 or flow.shape != (frame.shape[0], 2) + frame.shape[2:]:
        raise ShapeError(f"flow {flow.shape} does not match frame {frame.shape}")
    n, _, h, w = frame.shape
    f = frame.data
    r0, r1, c0, c1, wr, wc, in_r, in_c = _warp_setup(h, w, flow.data)
    ni = np.arange(n)[:, None, None]
    # advanced indices first: each corner is (N, H, W, C)
    f00, f01 = f[ni, :, r0, c0], f[ni, :, r0, c1]
    f10, f11 = f[ni, :, r1, c0], f[ni, :, r1, c1]
    a, b = wr[..., None], wc[..., None]
    w00, w01, w10, w11 = (1 - a) * (1 - b), (1 - a) * b, a * (1 - b), a * b
    out = w00 * f00 + w01 * f01 + w10 * f10 + w11 * f11

    def grad_fn(g):
        gl = g.transpose(0, 2, 3, 1)
        gf = None
        if frame.requires_grad:
            gf_l = np.zeros((n, h, w, f.shape[1]))
            for rr, cc, ww in ((r0, c0, w00), (r0, c1, w01), (r1, c0, w10), (r1, c1, w11)):
                np.add.at(gf_l, (np.broadcast_to(ni, rr.shape), rr, cc), gl * ww)
            gf = gf_l.transpose(0, 3, 1, 2)
        d_r = (1 - b) * (f10 - f00) + b * (f11 - f01)
        d_c = (1 - a) * (f01 - f00) + a * (f11 - f10)
        g_r = (gl * d_r).sum(axis=-1) * in_r
        g_c = (gl * d_c).sum(axis=-1) * in_c
        return gf, np.stack([g_r, g_c], axis=1)

    return Tensor._from_op(np.ascontiguousarray(out.transpose(0, 3, 1, 2)), (frame, flow), grad_fn, "warp")


def predict_frame(model: StochasticNet, x, z) -> tuple[Tensor, Tensor]:
    """Flow field and warped next frame for glimpse stack(s) ``x`` and latent(s) ``z``."""
    if model.cfg.decoder is not DecoderKind.FLOW:
        raise UsageError("predict_frame needs a flow decoder")
    arr = _batch(x)
    single = arr.ndim == 3
    z = z.z if isinstance(z, LatentSample) else T.tensor(z)
    if single:
        arr = arr[None]
        z = T.reshape(z, (1,) + z.shape)
    dec = model.decode(z, model.encode(arr))
    if single:
        return dec.flow[0], dec.prediction[0]
    return dec.flow, dec.prediction


def recognition_forward(model: StochasticNet, x, y) -> GaussianParams:
    """Q(z | x, y) parameters for one example or a batch."""
    arr = _batch(x)
    yarr = _batch(y)
    single = arr.ndim == 3
    if single:
        arr, yarr = arr[None], yarr[None]
    if yarr.shape[1:] != model.cfg.output_shape:
        raise ShapeError(f"outcome {yarr.shape[1:]} does not match {model.cfg.output_shape}")
    q = model.posterior(model.encode(arr), yarr)
    if single:
        return GaussianParams(q.mu[0], q.sigma[0])
    return q


# -- checkpoints -------------------------------------------------------------

_META_FIELDS = ("task", "decoder", "frame_h", "frame_w", "history", "channels", "horizon", "joints",
                "latent_dim", "feat_dim", "hidden", "dec_channels", "stochastic")
_TASK_CODES = {Task.TRAJECTORY: 0, Task.JOINTS: 1, Task.VIDEO: 2}
_DECODER_CODES = {DecoderKind.FC: 0, DecoderKind.CONV_INDEXED: 1, DecoderKind.FLOW: 2}


def _meta_values(cfg: ModelConfig) -> dict[str, np.ndarray]:
    vals = {
        "task": _TASK_CODES[cfg.task], "decoder": _DECODER_CODES[cfg.decoder],
        "frame_h": cfg.frame_size[0], "frame_w": cfg.frame_size[1], "history": cfg.history,
        "channels": cfg.channels, "horizon": cfg.horizon, "joints": cfg.joints,
        "latent_dim": cfg.latent_dim, "feat_dim": cfg.feat_dim, "hidden": cfg.hidden,
        "dec_channels": cfg.dec_channels, "stochastic": int(cfg.stochastic),
    }
    out = {f"meta.{k}": np.array(float(v)) for k, v in vals.items()}
    out["meta.enc_channels"] = np.array(cfg.enc_channels, dtype=np.float64)
    return out


def _config_from_meta(meta: dict[str, np.ndarray]) -> ModelConfig:
    try:
        g = {k: int(meta[f"meta.{k}"]) for k in _META_FIELDS}
        enc = tuple(int(v) for v in meta["meta.enc_channels"])
    except KeyError as exc:
        raise FormatError(f"checkpoint lacks metadata record {exc}") from None
    tasks = {v: k for k, v in _TASK_CODES.items()}
    decs = {v: k for k, v in _DECODER_CODES.items()}
    if g["task"] not in tasks or g["decoder"] not in decs:
        raise FormatError("unknown task or decoder code in checkpoint")
    return ModelConfig(
        task=tasks[g["task"]], decoder=decs[g["decoder"]], frame_size=(g["frame_h"], g["frame_w"]),
        history=g["history"], channels=g["channels"], horizon=g["horizon"], joints=g["joints"],
        latent_dim=g["latent_dim"], enc_channels=enc, feat_dim=g["feat_dim"], hidden=g["hidden"],
        dec_channels=g["dec_channels"], stochastic=bool(g["stochastic"]),
    )


def write_records(path, magic: bytes, version: int, records: dict[str, np.ndarray]) -> None:
    parts = [magic, struct.pack("<II", version, len(records))]
    for name, arr in records.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype=np.float64)
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_records(path, magic: bytes, version: int) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:4] != magic:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}, expected {magic!r}")
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(buf):
            raise FormatError(f"{path}: truncated at byte {pos}")
        chunk = buf[pos : pos + n]
        pos += n
        return chunk

    got_version, count = struct.unpack("<II", take(8))
    if got_version != version:
        raise FormatError(f"{path}: unsupported version {got_version} (expected {version})")
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        try:
            name = take(name_len).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"{path}: record name is not UTF-8") from None
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(shape, dtype=np.int64))
        records[name] = np.frombuffer(take(8 * n), dtype="<f8").astype(np.float64).reshape(shape)
    if pos != len(buf):
        raise FormatError(f"{path}: {len(buf) - pos} trailing bytes")
    return records


def save_checkpoint(model: StochasticNet, path) -> None:
    records = _meta_values(model.cfg)
    for name, p in model.named_parameters():
        records[name] = p.data
    write_records(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, records)


def load_checkpoint(path) -> StochasticNet:
    records = read_records(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    cfg = _config_from_meta({k: v for k, v in records.items() if k.startswith("meta.")})
    model = StochasticNet(cfg)
    for name, p in model.named_parameters():
        if name not in records:
            raise FormatError(f"{path}: missing parameter {name}")
        if records[name].shape != p.shape:
            raise FormatError(f"{path}: parameter {name} has shape {records[name].shape}, expected {p.shape}")
        arr = records[name].copy()
        arr.flags.writeable = False
        p.data = arr
    return model


def config_dict(cfg: ModelConfig) -> dict:
    d = asdict(cfg)
    d["task"] = cfg.task.name
    d["decoder"] = cfg.decoder.value
    return d
