"""Shared helpers for gradient tests on whole models."""

import numpy as np

from csnet import tensor as T
from csnet.gradcheck import check_gradients
from csnet.models import DecoderKind, ModelConfig, StochasticNet
from csnet.nn import sample
from csnet.synthdata import Task
from csnet.tensor import Tensor

TINY = dict(frame_size=(8, 8), horizon=3, latent_dim=2, enc_channels=(2, 3), feat_dim=4, hidden=5, dec_channels=3)
KINDS = [(Task.TRAJECTORY, DecoderKind.FC), (Task.JOINTS, DecoderKind.CONV_INDEXED), (Task.VIDEO, DecoderKind.FLOW)]


def generic_point(model: StochasticNet, rng: np.random.Generator) -> None:
    """Move a fresh model off the non-differentiable set.

    Zero-initialized biases leave some relu inputs at exactly 0 (all-zero
    receptive fields), and near-zero flows sample the frame exactly on the
    integer grid where bilinear interpolation has a kink.  Random bias
    offsets and a half-pixel flow offset fix both.
    """
    for name, p in model.named_parameters():
        if name.endswith(".b"):
            p.data = p.data + rng.normal(scale=0.05, size=p.shape)
    if model.cfg.decoder is DecoderKind.FLOW:
        head = model.decoder.trunk.head
        head.b.data = head.b.data + 0.5


def end_to_end_errors(task, decoder, seed: int, max_coords: int = 6, step: float = 1e-6) -> dict[int, float]:
    """Relative FD errors for every generator tensor of a tiny model on a sum-of-squares loss."""
    joints = 2 if task is Task.JOINTS else 1
    m = StochasticNet(ModelConfig(task, decoder, joints=joints, **TINY), seed=seed)
    rng = np.random.default_rng(seed)
    generic_point(m, rng)
    x = rng.uniform(size=(2, 1, 8, 8))
    coords = rng.integers(0, 8, size=(2, joints, 2))
    y = Tensor(rng.normal(size=(2,) + m.cfg.output_shape))
    eps = rng.normal(size=(2, 2))

    def loss():
        enc = m.encode(x, coords)
        return T.sum(T.square(m.decode(sample(m.prior(enc), eps).z, enc).prediction - y))

    return check_gradients(loss, m.generator_parameters(), step=step, max_coords=max_coords, rng=rng)
