"""Stateless forward/backward primitives.

Tensors are numpy arrays in channels-last layout: ``[batch, length, channels]``
for the convolutional part, ``[batch, features]`` after flattening. Every op
preserves the floating dtype of its input.
"""

import numpy as np

from ..errors import ConfigError, LabelError, ShapeError
from . import backend


def _contig(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype)


def conv1d_forward(x, w, b):
    """Valid, stride-1 convolution: ``out[b,t,f] = bias[f] + sum_{i,c} x[b,t+i,c] w[i,c,f]``."""
    if x.ndim != 3 or w.ndim != 3 or b.ndim != 1:
        raise ShapeError("conv1d expects x [B,L,C], w [K,C,F], b [F]")
    if x.shape[2] != w.shape[1] or w.shape[2] != b.shape[0]:
        raise ShapeError(f"conv1d channel mismatch: x {x.shape}, w {w.shape}, b {b.shape}")
    if x.shape[1] < w.shape[0]:
        raise ShapeError(f"input length {x.shape[1]} shorter than kernel {w.shape[0]}")
    dt = x.dtype
    return backend.kernels.conv1d_forward(_contig(x, dt), _contig(w, dt), _contig(b, dt))


def conv1d_backward(g, x, w):
    """Return ``(grad_input, grad_weights, grad_bias)`` for :func:`conv1d_forward`."""
    t = x.shape[1] - w.shape[0] + 1
    if g.shape != (x.shape[0], t, w.shape[2]):
        raise ShapeError(f"upstream gradient {g.shape} does not match conv output")
    dt = x.dtype
    return backend.kernels.conv1d_backward(_contig(g, dt), _contig(x, dt), _contig(w, dt))


def maxpool1d(x, pool=2):
    """Non-overlapping max pooling; the trailing remainder is dropped, ties pick the first index."""
    if x.ndim != 3:
        raise ShapeError("maxpool1d expects [B,L,C]")
    if x.shape[1] < pool:
        raise ShapeError(f"input length {x.shape[1]} shorter than pool {pool}")
    return backend.kernels.maxpool1d_forward(_contig(x, x.dtype), pool)


def maxpool1d_backward(g, arg, pool, length):
    return backend.kernels.maxpool1d_backward(
        _contig(g, g.dtype), np.ascontiguousarray(arg, dtype=np.intp), pool, length
    )


def relu(x):
    return np.maximum(x, 0)


def relu_backward(g, x):
    return g * (x > 0)


def dense_affine(x, w, b):
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"dense shapes disagree: x {x.shape}, W {w.shape}, b {b.shape}")
    return x @ w + b


def dense_backward(g, x, w):
    if g.shape != (x.shape[0], w.shape[1]):
        raise ShapeError(f"upstream gradient {g.shape} does not match dense output")
    return g @ w.T, x.T @ g, g.sum(axis=0)


def batchnorm1d(x, gamma, beta, running_mean, running_var, training, eps=1e-3, momentum=0.99):
    """Normalise over every axis except the last (channels).

    In training mode the running statistics are updated in place and a cache
    for :func:`batchnorm1d_backward` is returned; in inference mode nothing
    is mutated and the cache is ``None``.
    """
    axes = tuple(range(x.ndim - 1))
    if training:
        n = int(np.prod([x.shape[a] for a in axes]))
        if x.shape[0] < 2:
            raise ShapeError("batch normalisation in training mode needs a batch of at least 2")
        mu = x.mean(axis=axes)
        var = ((x - mu) ** 2).mean(axis=axes)
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv
        running_mean *= momentum
        running_mean += (1 - momentum) * mu
        running_var *= momentum
        running_var += (1 - momentum) * var
        return xhat * gamma + beta, (xhat, inv, gamma, n, axes)
    inv = 1.0 / np.sqrt(running_var + eps)
    return ((x - running_mean) * inv * gamma + beta).astype(x.dtype, copy=False), None


def batchnorm1d_backward(g, cache):
    xhat, inv, gamma, n, axes = cache
    ggamma = (g * xhat).sum(axis=axes)
    gbeta = g.sum(axis=axes)
    gxhat = g * gamma
    gx = inv / n * (n * gxhat - gxhat.sum(axis=axes) - xhat * (gxhat * xhat).sum(axis=axes))
    return gx, ggamma, gbeta


def dropout(x, rate, training, rng):
    """Inverted dropout. Returns ``(output, mask)``; the mask is ``None`` when inactive."""
    if not 0 <= rate < 1:
        raise ConfigError("dropout rate must satisfy 0 <= rate < 1")
    if not training or rate == 0:
        return x, None
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / x.dtype.type(1 - rate)
    return x * mask, mask


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits, labels):
    """Mean sparse categorical cross-entropy and its gradient w.r.t. the logits."""
    labels = np.asarray(labels)
    bsz, k = logits.shape
    if labels.shape != (bsz,):
        raise LabelError(f"{labels.shape[0] if labels.ndim else 0} labels for batch of {bsz}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise LabelError(f"labels must lie in 0..{k - 1}")
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    logp = z[np.arange(bsz), labels] - logsum
    loss = float(-logp.mean())
    grad = np.exp(z - logsum[:, None])
    grad[np.arange(bsz), labels] -= 1
    grad /= bsz
    return loss, grad
