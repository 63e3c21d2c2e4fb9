"""Seeded synthetic worlds with known multimodal futures.

Three generators, one per task:

* ``gen_intersection``: an object at a crossroad leaves along one of M
  compass directions.  History frames (same crop box as the last frame)
  show where it came from, plus a motion streak whose length grows with
  the number of history frames; a single frame carries no direction cue.
* ``gen_branching_joints``: a four-joint stick figure stands still, then
  performs one of M scripted motions (raise left hand, raise right hand, ...).
* ``gen_moving_square``: a bright square translates by one of M integer
  displacements per frame; the target is the exact next frame.

Every sample is generated from its own splitmix64 stream keyed by
(seed, task, index), so datasets are reproducible and generation can be
spread over threads without changing a single bit.
"""

from __future__ import annotations

import enum
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, UsageError
from .rng import SplitMix64

DATASET_MAGIC = b"CSND"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sIBIIIIIIIQ")


class Task(enum.IntEnum):
    TRAJECTORY = 0
    JOINTS = 1
    VIDEO = 2


@dataclass
class DatasetSpec:
    task: Task
    n_samples: int = 1000
    modes: int = 2
    history: int = 1
    horizon: int = 20
    frame_size: tuple[int, int] = (32, 32)
    seed: int = 0
    joints: int = 4
    speed: float = 1.0
    joint_noise: float = 0.02
    square_size: int | None = None

    def __post_init__(self):
        self.task = Task(self.task)
        self.frame_size = tuple(int(v) for v in self.frame_size)
        if self.n_samples < 0:
            raise UsageError("n_samples must be >= 0")
        if self.modes < 1:
            raise UsageError("modes must be >= 1")
        if self.history < 1:
            raise UsageError("history frames must be >= 1")
        if self.horizon < 1:
            raise UsageError("horizon must be >= 1")
        if min(self.frame_size) < 8:
            raise UsageError("frames must be at least 8x8")
        if self.task is Task.JOINTS and self.modes > len(_MOTIONS):
            raise UsageError(f"at most {len(_MOTIONS)} scripted joint motions are available")
        if self.task is Task.JOINTS and self.joints != 4:
            raise UsageError("the stick figure has exactly 4 joints")
        if self.task is Task.VIDEO and self.modes > 8:
            raise UsageError("at most 8 integer compass displacements are available")


@dataclass
class Sample:
    x: np.ndarray
    y: np.ndarray
    mode_id: int
    coords: np.ndarray | None = None


@dataclass
class SyntheticDataset:
    task: Task
    history: int
    horizon: int
    modes: int
    joints: int
    frame_size: tuple[int, int]
    seed: int
    x: np.ndarray
    y: np.ndarray
    mode_id: np.ndarray
    coords: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coords is None:
            self.coords = np.zeros((len(self.x), self.joints, 2), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, i: int) -> Sample:
        coords = self.coords[i] if self.task is Task.JOINTS else None
        return Sample(self.x[i], self.y[i], int(self.mode_id[i]), coords)

    @property
    def y_shape(self) -> tuple[int, ...]:
        return y_shape(self.task, self.horizon, self.joints, self.frame_size)

    def subset(self, idx) -> "SyntheticDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return SyntheticDataset(self.task, self.history, self.horizon, self.modes, self.joints, self.frame_size,
                                self.seed, self.x[idx], self.y[idx], self.mode_id[idx], self.coords[idx])

    def split_parity(self) -> tuple["SyntheticDataset", "SyntheticDataset"]:
        """Even indices for training, odd indices for testing."""
        n = len(self)
        return self.subset(np.arange(0, n, 2)), self.subset(np.arange(1, n, 2))

    def equals(self, other: "SyntheticDataset") -> bool:
        head = (self.task, self.history, self.horizon, self.modes, self.joints, self.frame_size, self.seed)
        other_head = (other.task, other.history, other.horizon, other.modes, other.joints, other.frame_size, other.seed)
        return head == other_head and all(
            np.array_equal(a, b) for a, b in ((self.x, other.x), (self.y, other.y), (self.mode_id, other.mode_id),
                                              (self.coords, other.coords)))


def y_shape(task: Task, horizon: int, joints: int, frame_size) -> tuple[int, ...]:
    if task is Task.TRAJECTORY:
        return (horizon, 2)
    if task is Task.JOINTS:
        return (joints, horizon, 2)
    return (1,) + tuple(frame_size)


def worker_count() -> int:
    """Worker cap from ``CSNET_THREADS`` (default 1)."""
    raw = os.environ.get("CSNET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def compass(m: int, modes: int) -> tuple[float, float]:
    """Unit (dx, dy) for direction ``m`` of ``modes`` evenly spaced angles, 0 = +x."""
    ang = 2.0 * math.pi * m / modes
    dx, dy = math.cos(ang), math.sin(ang)
    return (0.0 if abs(dx) < 1e-12 else dx), (0.0 if abs(dy) < 1e-12 else dy)


_INT_COMPASS = [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1)]


def square_displacement(m: int, modes: int) -> tuple[int, int]:
    """Integer (drow, dcol) per frame for square mode ``m``."""
    if modes in (2, 4):
        return _INT_COMPASS[[0, 2, 1, 3][m] if modes == 4 else m]
    return _INT_COMPASS[m]


def _stamp(frame: np.ndarray, r: float, c: float, radius: float, value: float) -> None:
    h, w = frame.shape
    r0, r1 = max(0, int(math.floor(r - radius))), min(h, int(math.ceil(r + radius)) + 1)
    c0, c1 = max(0, int(math.floor(c - radius))), min(w, int(math.ceil(c + radius)) + 1)
    if r0 >= r1 or c0 >= c1:
        return
    rr, cc = np.mgrid[r0:r1, c0:c1]
    mask = (rr - r) ** 2 + (cc - c) ** 2 <= radius * radius
    frame[r0:r1, c0:c1][mask] = np.maximum(frame[r0:r1, c0:c1][mask], value)


def _line(frame: np.ndarray, a, b, value: float) -> None:
    steps = int(max(abs(b[0] - a[0]), abs(b[1] - a[1]))) * 2 + 1
    for t in np.linspace(0.0, 1.0, steps):
        r = a[0] + t * (b[0] - a[0])
        c = a[1] + t * (b[1] - a[1])
        ri, ci = int(round(r)), int(round(c))
        if 0 <= ri < frame.shape[0] and 0 <= ci < frame.shape[1]:
            frame[ri, ci] = max(frame[ri, ci], value)


# -- intersection ------------------------------------------------------------

ROAD_LEVEL = 0.25
STREAK_LEVEL = 0.5


def _intersection_sample(spec: DatasetSpec, index: int):
    rng = SplitMix64(spec.seed, "intersection", index)
    mode = int(rng.integers(spec.modes))
    dx, dy = compass(mode, spec.modes)
    h, w = spec.frame_size
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    road = max(1, h // 8)
    base = np.zeros((h, w))
    base[int(cr) - road + 1 : int(cr) + road + 1, :] = ROAD_LEVEL
    base[:, int(cc) - road + 1 : int(cc) + road + 1] = ROAD_LEVEL
    step = max(1.0, h / 16.0)
    blob = max(1.0, h / 16.0)
    frames = []
    for t in range(spec.history):
        back = (spec.history - 1 - t) * step
        f = base.copy()
        _stamp(f, cr - dy * back, cc - dx * back, blob, 1.0)
        frames.append(f)
    if spec.history > 1:
        tail = (spec.history - 1) * step
        _line(frames[-1], (cr - dy * tail, cc - dx * tail), (cr, cc), STREAK_LEVEL)
        _stamp(frames[-1], cr, cc, blob, 1.0)
    y = np.tile(np.array([dx, dy]) * spec.speed, (spec.horizon, 1))
    return np.stack(frames), y, mode, None


def gen_intersection(spec: DatasetSpec) -> SyntheticDataset:
    if spec.task is not Task.TRAJECTORY:
        raise UsageError("gen_intersection needs task TRAJECTORY")
    return _generate(spec, _intersection_sample, joints=0)


# -- stick figure --------------------------------------------------------------

HEAD, TORSO, LEFT_HAND, RIGHT_HAND = range(4)
# (joint, unit (drow, dcol)) per scripted motion; "left" is image-left
_MOTIONS = [
    ((LEFT_HAND, (-1.0, 0.0)),),
    ((RIGHT_HAND, (-1.0, 0.0)),),
    ((LEFT_HAND, (0.0, -1.0)),),
    ((RIGHT_HAND, (0.0, 1.0)),),
    ((LEFT_HAND, (1.0, 0.0)),),
    ((RIGHT_HAND, (1.0, 0.0)),),
    ((LEFT_HAND, (-1.0, 0.0)), (RIGHT_HAND, (-1.0, 0.0))),
    ((HEAD, (1.0, 0.0)), (TORSO, (1.0, 0.0))),
]


def _figure(h: int, w: int, jr: int, jc: int) -> np.ndarray:
    cr, cc = h // 2 + jr, w // 2 + jc
    return np.array([
        [cr - h // 4, cc],
        [cr + h // 8, cc],
        [cr - h // 16, cc - w // 5],
        [cr - h // 16, cc + w // 5],
    ], dtype=np.int64)


def _render_figure(h: int, w: int, joints: np.ndarray) -> np.ndarray:
    f = np.zeros((h, w))
    neck = joints[HEAD] + np.array([h // 16, 0])
    for a, b in ((joints[HEAD], joints[TORSO]), (neck, joints[LEFT_HAND]), (neck, joints[RIGHT_HAND])):
        _line(f, a, b, 0.5)
    for j in joints:
        _stamp(f, float(j[0]), float(j[1]), max(1.0, h / 32.0), 1.0)
    return f


def _joints_sample(spec: DatasetSpec, index: int):
    rng = SplitMix64(spec.seed, "joints", index)
    mode = int(rng.integers(spec.modes))
    h, w = spec.frame_size
    jitter = max(1, h // 16)
    jr, jc = (int(v) - jitter for v in rng.integers(2 * jitter + 1, (2,)))
    joints = _figure(h, w, jr, jc)
    frame = _render_figure(h, w, joints)
    x = np.stack([frame] * spec.history)
    amp = spec.speed * h / 32.0
    t = np.arange(spec.horizon)
    profile = amp * np.sin(np.pi * (t + 0.5) / spec.horizon)
    y = np.zeros((spec.joints, spec.horizon, 2))
    noise = rng.normal((spec.joints, spec.horizon, 2)) * spec.joint_noise
    for joint, (drow, dcol) in _MOTIONS[mode]:
        # velocities are (dx, dy) = (dcol, drow)
        y[joint, :, 0] = profile * dcol + noise[joint, :, 0]
        y[joint, :, 1] = profile * drow + noise[joint, :, 1]
    return x, y, mode, joints


def gen_branching_joints(spec: DatasetSpec) -> SyntheticDataset:
    if spec.task is not Task.JOINTS:
        raise UsageError("gen_branching_joints needs task JOINTS")
    return _generate(spec, _joints_sample, joints=spec.joints)


# -- moving square -------------------------------------------------------------


def _square_frame(h: int, w: int, r: int, c: int, s: int) -> np.ndarray:
    f = np.zeros((h, w))
    f[r : r + s, c : c + s] = 1.0
    return f


def _square_sample(spec: DatasetSpec, index: int):
    rng = SplitMix64(spec.seed, "square", index)
    mode = int(rng.integers(spec.modes))
    h, w = spec.frame_size
    s = spec.square_size or max(2, h // 4)
    dr, dc = square_displacement(mode, spec.modes)
    margin = spec.history + 1
    hi_r, hi_c = h - s - 2 * margin + 1, w - s - 2 * margin + 1
    if hi_r < 1 or hi_c < 1:
        raise UsageError("frame too small for the square and its motion")
    r = margin + int(rng.integers(hi_r))
    c = margin + int(rng.integers(hi_c))
    frames = [_square_frame(h, w, r - (spec.history - 1 - t) * dr, c - (spec.history - 1 - t) * dc, s)
              for t in range(spec.history)]
    y = _square_frame(h, w, r + dr, c + dc, s)[None]
    return np.stack(frames), y, mode, None


def gen_moving_square(spec: DatasetSpec) -> SyntheticDataset:
    if spec.task is not Task.VIDEO:
        raise UsageError("gen_moving_square needs task VIDEO")
    return _generate(spec, _square_sample, joints=0, horizon=1)


# -- shared machinery ----------------------------------------------------------


def _generate(spec: DatasetSpec, fn, joints: int, horizon: int | None = None) -> SyntheticDataset:
    horizon = spec.horizon if horizon is None else horizon
    h, w = spec.frame_size
    ys = y_shape(spec.task, horizon, joints, spec.frame_size)
    n = spec.n_samples
    x = np.zeros((n, spec.history, h, w))
    y = np.zeros((n,) + ys)
    modes = np.zeros(n, dtype=np.int64)
    coords = np.zeros((n, joints, 2), dtype=np.int64)

    def fill(i: int) -> None:
        xi, yi, mi, ci = fn(spec, i)
        x[i], y[i], modes[i] = xi, yi, mi
        if ci is not None:
            coords[i] = ci

    workers = worker_count()
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n)))
    else:
        for i in range(n):
            fill(i)
    return SyntheticDataset(spec.task, spec.history, horizon, spec.modes, joints, spec.frame_size,
                            spec.seed, x, y, modes, coords)


GENERATORS = {Task.TRAJECTORY: gen_intersection, Task.JOINTS: gen_branching_joints, Task.VIDEO: gen_moving_square}


def generate(spec: DatasetSpec) -> SyntheticDataset:
    return GENERATORS[spec.task](spec)


def _record_dtype(history: int, ys: tuple[int, ...], joints: int, frame_size) -> np.dtype:
    fields = [("mode", "<u4")]
    if joints:
        fields.append(("coords", "<u4", (joints, 2)))
    fields.append(("x", "<f8", (history,) + tuple(frame_size)))
    fields.append(("y", "<f8", ys))
    return np.dtype(fields)


def write_dataset(ds: SyntheticDataset, path) -> None:
    h, w = ds.frame_size
    header = _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, int(ds.task), len(ds), ds.history, ds.horizon,
                          ds.modes, ds.joints, h, w, ds.seed & ((1 << 64) - 1))
    rec = np.zeros(len(ds), dtype=_record_dtype(ds.history, ds.y_shape, ds.joints, ds.frame_size))
    rec["mode"] = ds.mode_id
    if ds.joints:
        rec["coords"] = ds.coords
    rec["x"] = ds.x
    rec["y"] = ds.y
    Path(path).write_bytes(header + rec.tobytes())


def read_dataset(path) -> SyntheticDataset:
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        if buf[:4] != DATASET_MAGIC[: len(buf[:4])]:
            raise FormatError(f"{path}: bad magic {buf[:4]!r}")
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes)")
    magic, version, task, n, nf, hz, modes, joints, h, w, seed = _HEADER.unpack_from(buf)
    if magic != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {DATASET_MAGIC!r}")
    if version != DATASET_VERSION:
        raise FormatError(f"{path}: unsupported dataset version {version}")
    try:
        task = Task(task)
    except ValueError:
        raise FormatError(f"{path}: unknown task code {task}") from None
    ys = y_shape(task, hz, joints, (h, w))
    dtype = _record_dtype(nf, ys, joints, (h, w))
    body = len(buf) - _HEADER.size
    if body != n * dtype.itemsize:
        raise FormatError(f"{path}: expected {n * dtype.itemsize} payload bytes for {n} samples, found {body}")
    rec = np.frombuffer(buf, dtype=dtype, offset=_HEADER.size, count=n)
    coords = rec["coords"].astype(np.int64) if joints else np.zeros((n, 0, 2), dtype=np.int64)
    return SyntheticDataset(task, nf, hz, modes, joints, (h, w), seed,
                            rec["x"].astype(np.float64), rec["y"].astype(np.float64),
                            rec["mode"].astype(np.int64), coords)
