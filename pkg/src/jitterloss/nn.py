"""Dense ReLU multilayer perceptron with hand-written reverse-mode gradients.

Matrices are 2-D C-contiguous float64 numpy arrays. Parameters and gradients
are flat lists ``[W0, b0, W1, b1, ...]`` with ``W`` of shape (d_in, d_out) and
``b`` of shape (d_out,).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .losses import Flooding, Jitter, LossWrapper, Original, jitter_transform
from .samplers import RngStream

GradientSet = list  # list[np.ndarray] shaped like MlpModel.params


class ShapeError(ValueError):
    pass


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return kernels.matmul(a, b)


@dataclass
class MlpModel:
    params: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.params) % 2 or not self.params:
            raise ShapeError("params must alternate weight, bias")
        for k, (w, b) in enumerate(zip(self.params[::2], self.params[1::2])):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {k}: weight {w.shape} does not match bias {b.shape}")
        ws = self.params[::2]
        for k in range(1, len(ws)):
            if ws[k - 1].shape[1] != ws[k].shape[0]:
                raise ShapeError(f"layer {k} expects {ws[k].shape[0]} inputs, got {ws[k - 1].shape[1]}")

    @property
    def layers(self):
        return list(zip(self.params[::2], self.params[1::2]))

    @property
    def sizes(self) -> list[int]:
        ws = self.params[::2]
        return [ws[0].shape[0]] + [w.shape[1] for w in ws]

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "MlpModel":
        return MlpModel([p.copy() for p in self.params])


def init_mlp(sizes: list[int], rng: RngStream) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    params = []
    for d_in, d_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (d_in + d_out))
        params.append(rng.uniform(-lim, lim, size=(d_in, d_out)))
        params.append(np.zeros(d_out))
    return MlpModel(params)


@dataclass
class Cache:
    inputs: list  # input to each layer
    pre: list  # pre-activations of each layer; the last one is the logits
    n_params: int


def forward(model: MlpModel, x: np.ndarray):
    """Return ``(logits, cache)``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.sizes[0]:
        raise ShapeError(f"input of shape {x.shape} for a model with {model.sizes[0]} inputs")
    layers = model.layers
    inputs, pre = [], []
    a = x
    for k, (w, b) in enumerate(layers):
        inputs.append(a)
        z = matmul(a, w) + b
        pre.append(z)
        a = np.maximum(z, 0.0) if k < len(layers) - 1 else z
    return a, Cache(inputs, pre, model.n_params())


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and the softmax probabilities."""
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"{labels.shape[0]} labels for {n} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    nll = logsum - z[np.arange(n), labels]
    probs = np.exp(z - logsum[:, None])
    # the true-class term can round to -0.0 or a hair below zero
    return max(float(nll.mean()), 0.0), probs


def backward(model: MlpModel, cache: Cache, labels, upstream_scale: float = 1.0) -> GradientSet:
    """``upstream_scale`` times the gradient of mean cross-entropy w.r.t. ``model.params``."""
    if cache.n_params != model.n_params() or len(cache.pre) != len(model.layers):
        raise ShapeError("cache does not belong to this model")
    labels = np.asarray(labels)
    logits = cache.pre[-1]
    n = logits.shape[0]
    dz = softmax(logits)
    dz[np.arange(n), labels] -= 1.0
    dz *= upstream_scale / n

    layers = model.layers
    grads = [None] * (2 * len(layers))
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        grads[2 * k] = matmul(np.ascontiguousarray(cache.inputs[k].T), dz)
        grads[2 * k + 1] = dz.sum(axis=0)
        if k:
            da = matmul(dz, np.ascontiguousarray(w.T))
            dz = da * (cache.pre[k - 1] > 0.0)
    return grads


def wrapped_loss(model: MlpModel, x, labels, wrapper: LossWrapper, alpha_fixed: float | None = None) -> float:
    """Wrapped batch loss with the Jitter point held fixed."""
    logits, _ = forward(model, x)
    loss, _ = cross_entropy(logits, labels)
    if isinstance(wrapper, Original):
        return loss
    if isinstance(wrapper, Flooding):
        return jitter_transform(loss, wrapper.level)
    if isinstance(wrapper, Jitter):
        if alpha_fixed is None:
            raise ValueError("Jitter wrapper needs alpha_fixed")
        return jitter_transform(loss, alpha_fixed)
    raise TypeError(f"not a loss wrapper: {wrapper!r}")


def finite_diff_grad(model: MlpModel, x, labels, wrapper: LossWrapper, alpha_fixed=None, eps=1e-5) -> GradientSet:
    """Central differences of the wrapped loss for every parameter."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    probe = model.copy()
    grads = []
    for p in probe.params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = wrapped_loss(probe, x, labels, wrapper, alpha_fixed)
            flat[i] = orig - eps
            down = wrapped_loss(probe, x, labels, wrapper, alpha_fixed)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def max_relative_error(a: GradientSet, b: GradientSet, floor: float = 1e-6) -> float:
    """Largest elementwise ``|a-b| / max(|a|, |b|, floor)`` across tensors."""
    worst = 0.0
    for ga, gb in zip(a, b):
        den = np.maximum(np.maximum(np.abs(ga), np.abs(gb)), floor)
        worst = max(worst, float((np.abs(ga - gb) / den).max(initial=0.0)))
    return worst
