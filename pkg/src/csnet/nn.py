"""Layers, the Gaussian stochastic layer, and the Adam optimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .rng import SplitMix64
from .tensor import Tensor

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# softplus^-1(1): the sigma bias that starts every latent at unit scale
SIGMA_BIAS_INIT = math.log(math.e - 1.0)


class Module:
    """Parameter container; parameters are discovered from attributes, recursively."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            yield from _walk(value, f"{prefix}{name}")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


def _walk(value, name: str):
    if isinstance(value, Tensor):
        if value.requires_grad:
            yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(name + ".")
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            yield from _walk(v, f"{name}.{i}")


def glorot_uniform(rng: SplitMix64, shape: tuple[int, ...], fan_in: int, fan_out: int) -> Tensor:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor((2.0 * rng.uniform(shape) - 1.0) * a, requires_grad=True)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: SplitMix64, bias_init: float = 0.0):
        self.W = glorot_uniform(rng, (n_out, n_in), n_in, n_out)
        self.b = Tensor(np.full(n_out, bias_init), requires_grad=True)

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]

    def __call__(self, x) -> Tensor:
        return T.linear(x, self.W, self.b)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, stride: int, pad: int, rng: SplitMix64):
        self.K = glorot_uniform(rng, (c_out, c_in, k, k), c_in * k * k, c_out * k * k)
        self.b = Tensor(np.zeros((1, c_out, 1, 1)), requires_grad=True)
        self.stride, self.pad = stride, pad

    def __call__(self, x) -> Tensor:
        return T.conv2d(x, self.K, self.stride, self.pad) + self.b


class ConvTranspose2d(Module):
    """Kernel is stored as (c_in, c_out, k, k), i.e. as the conv2d it transposes."""

    def __init__(self, c_in: int, c_out: int, k: int, stride: int, pad: int, rng: SplitMix64):
        self.K = glorot_uniform(rng, (c_in, c_out, k, k), c_in * k * k, c_out * k * k)
        self.b = Tensor(np.zeros((1, c_out, 1, 1)), requires_grad=True)
        self.stride, self.pad = stride, pad

    def __call__(self, x) -> Tensor:
        return T.conv_transpose2d(x, self.K, self.stride, self.pad) + self.b


@dataclass
class GaussianParams:
    """Diagonal Gaussian; ``sigma`` holds standard deviations.  Leading axes are batch axes."""

    mu: Tensor
    sigma: Tensor

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


@dataclass
class LatentSample:
    z: Tensor
    epsilon: np.ndarray
    prior_log_density: Tensor
    eps_log_density: np.ndarray


class GaussianHead(Module):
    """The (W_mu, b_mu), (W_sigma, b_sigma) pair of linear maps."""

    def __init__(self, n_in: int, d: int, rng: SplitMix64):
        self.mu = Linear(n_in, d, rng)
        self.sigma = Linear(n_in, d, rng, bias_init=SIGMA_BIAS_INIT)

    def __call__(self, features) -> GaussianParams:
        return gaussian_head(features, (self.mu, self.sigma))


def gaussian_head(features, head: tuple[Linear, Linear]) -> GaussianParams:
    """mu = W_mu f + b_mu, sigma = softplus(W_sigma f + b_sigma)."""
    mu_layer, sigma_layer = head
    if features.shape[-1] != mu_layer.n_in or features.shape[-1] != sigma_layer.n_in:
        raise ShapeError(f"features of length {features.shape[-1]} do not match head input {mu_layer.n_in}")
    return GaussianParams(mu_layer(features), T.softplus(sigma_layer(features)))


def gaussian_log_density(z, params: GaussianParams) -> Tensor:
    """log N(z; mu, diag(sigma^2)), summed over the last axis."""
    zs = ((T.tensor(z) - params.mu) / params.sigma)
    terms = -HALF_LOG_2PI - T.log(params.sigma) - 0.5 * T.square(zs)
    return T.sum(terms, axis=-1)


def standard_normal_log_density(eps: np.ndarray) -> np.ndarray:
    return np.sum(-HALF_LOG_2PI - 0.5 * np.square(eps), axis=-1)


def sample(params: GaussianParams, epsilon) -> LatentSample:
    """Reparameterized draw z = mu + epsilon * sigma.

    ``epsilon`` is treated as a constant; gradients reach mu and sigma only.
    """
    eps = np.asarray(epsilon.data if isinstance(epsilon, Tensor) else epsilon, dtype=np.float64)
    if eps.shape[-1] != params.dim:
        raise ShapeError(f"epsilon {eps.shape} does not match latent dim {params.dim}")
    z = params.mu + Tensor(eps) * params.sigma
    return LatentSample(
        z=z,
        epsilon=eps,
        prior_log_density=gaussian_log_density(z, params),
        eps_log_density=standard_normal_log_density(eps),
    )


def kl_diag(q: GaussianParams, p: GaussianParams) -> Tensor:
    """Closed-form KL(q || p) between diagonal Gaussians, summed over the last axis."""
    if q.mu.shape != p.mu.shape or q.sigma.shape != p.sigma.shape:
        raise ShapeError(f"KL between latents of shape {q.mu.shape} and {p.mu.shape}")
    diff = q.mu - p.mu
    terms = (
        T.log(p.sigma) - T.log(q.sigma)
        + (T.square(q.sigma) + T.square(diff)) / (2.0 * T.square(p.sigma))
        - 0.5
    )
    return T.sum(terms, axis=-1)


def replicate_spatial(z, h: int, w: int) -> Tensor:
    """Tile a latent vector (d,) or batch (N, d) over an h×w grid: (d, h, w) or (N, d, h, w)."""
    z = T.tensor(z)
    if h < 1 or w < 1:
        raise ShapeError("replicate_spatial needs h, w >= 1")
    ones = np.ones((1,) * (z.ndim - 1) + (1, h, w))
    return T.reshape(z, z.shape + (1, 1)) * Tensor(ones)


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros(p.shape) for p in self.params]
        self.v = [np.zeros(p.shape) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            new = p.data - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            new.flags.writeable = False
            p.data = new
