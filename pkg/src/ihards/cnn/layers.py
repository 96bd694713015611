"""Layer objects wrapping :mod:`ihards.cnn.ops` and a sequential model."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from . import ops


class Layer:
    kind = "layer"

    def __init__(self):
        self.params = {}
        self.buffers = {}
        self.grads = {}

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def config(self):
        return {}

    def output_shape(self, shape):
        return shape

    def describe(self):
        return self.kind


class Conv1D(Layer):
    kind = "conv1d"

    def __init__(self, in_channels, filters, kernel_size, dtype=np.float32):
        super().__init__()
        self.in_channels, self.filters, self.kernel_size = in_channels, filters, kernel_size
        self.params["w"] = np.zeros((kernel_size, in_channels, filters), dtype=dtype)
        self.params["b"] = np.zeros(filters, dtype=dtype)

    def forward(self, x, training=False):
        self._x = x
        return ops.conv1d_forward(x, self.params["w"], self.params["b"])

    def backward(self, g):
        gx, gw, gb = ops.conv1d_backward(g, self._x, self.params["w"])
        self.grads["w"], self.grads["b"] = gw, gb
        return gx

    def fan_in(self):
        return self.in_channels * self.kernel_size

    def config(self):
        return {"in_channels": self.in_channels, "filters": self.filters, "kernel_size": self.kernel_size}

    def output_shape(self, shape):
        length, _ = shape
        if length < self.kernel_size:
            raise ShapeError(f"length {length} shorter than kernel {self.kernel_size}")
        return (length - self.kernel_size + 1, self.filters)

    def describe(self):
        return f"Conv1D({self.filters},k{self.kernel_size})"


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, training=False):
        self._x = x
        return ops.relu(x)

    def backward(self, g):
        return ops.relu_backward(g, self._x)

    def describe(self):
        return "ReLU"


class MaxPool1D(Layer):
    kind = "maxpool1d"

    def __init__(self, pool=2):
        super().__init__()
        self.pool = pool

    def forward(self, x, training=False):
        self._length = x.shape[1]
        out, self._arg = ops.maxpool1d(x, self.pool)
        return out

    def backward(self, g):
        return ops.maxpool1d_backward(g, self._arg, self.pool, self._length)

    def config(self):
        return {"pool": self.pool}

    def output_shape(self, shape):
        length, ch = shape
        if length < self.pool:
            raise ShapeError(f"length {length} shorter than pool {self.pool}")
        return (length // self.pool, ch)

    def describe(self):
        return f"MaxPool1D({self.pool})"


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate=0.5):
        super().__init__()
        self.rate = rate
        self.rng = np.random.default_rng(0)

    def forward(self, x, training=False):
        out, self._mask = ops.dropout(x, self.rate, training, self.rng)
        return out

    def backward(self, g):
        return g if self._mask is None else g * self._mask

    def config(self):
        return {"rate": self.rate}

    def describe(self):
        return f"Dropout({self.rate})"


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, g):
        return g.reshape(self._shape)

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def describe(self):
        return "Flatten"


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, units, dtype=np.float32):
        super().__init__()
        self.in_features, self.units = in_features, units
        self.params["w"] = np.zeros((in_features, units), dtype=dtype)
        self.params["b"] = np.zeros(units, dtype=dtype)

    def forward(self, x, training=False):
        self._x = x
        return ops.dense_affine(x, self.params["w"], self.params["b"])

    def backward(self, g):
        gx, gw, gb = ops.dense_backward(g, self._x, self.params["w"])
        self.grads["w"], self.grads["b"] = gw, gb
        return gx

    def fan_in(self):
        return self.in_features

    def config(self):
        return {"in_features": self.in_features, "units": self.units}

    def output_shape(self, shape):
        if shape != (self.in_features,):
            raise ShapeError(f"dense expects ({self.in_features},), got {shape}")
        return (self.units,)

    def describe(self):
        return f"Dense({self.units})"


class BatchNorm(Layer):
    kind = "batchnorm"

    def __init__(self, channels, eps=1e-3, momentum=0.99, dtype=np.float32):
        super().__init__()
        self.channels, self.eps, self.momentum = channels, eps, momentum
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    def forward(self, x, training=False):
        out, self._cache = ops.batchnorm1d(
            x,
            self.params["gamma"],
            self.params["beta"],
            self.buffers["running_mean"],
            self.buffers["running_var"],
            training,
            self.eps,
            self.momentum,
        )
        return out

    def backward(self, g):
        if self._cache is None:
            raise RuntimeError("batchnorm backward requires a training-mode forward pass")
        gx, ggamma, gbeta = ops.batchnorm1d_backward(g, self._cache)
        self.grads["gamma"], self.grads["beta"] = ggamma, gbeta
        return gx

    def config(self):
        return {"channels": self.channels, "eps": self.eps, "momentum": self.momentum}

    def describe(self):
        return "BatchNorm"


class Softmax(Layer):
    """Output activation. Training fuses it into the loss, so backward is never used."""

    kind = "softmax"

    def forward(self, x, training=False):
        return ops.softmax(x)

    def describe(self):
        return "Softmax"


LAYER_TYPES = {cls.kind: cls for cls in (Conv1D, ReLU, MaxPool1D, Dropout, Flatten, Dense, BatchNorm, Softmax)}


class Sequential:
    """An ordered layer pipeline taking ``[batch, features]`` rows.

    Rows are reshaped to ``[batch, features, 1]`` (a one-channel signal) on
    entry. :meth:`logits` stops before the final :class:`Softmax`.
    """

    def __init__(self, layers, input_features):
        self.layers = list(layers)
        self.input_features = input_features

    def _body(self):
        if self.layers and isinstance(self.layers[-1], Softmax):
            return self.layers[:-1]
        return self.layers

    def logits(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.input_features:
            raise ShapeError(f"model expects [batch, {self.input_features}], got {x.shape}")
        h = x.reshape(x.shape[0], x.shape[1], 1)
        for layer in self._body():
            h = layer.forward(h, training)
        return h

    def backward(self, g):
        for layer in reversed(self._body()):
            g = layer.backward(g)
        return g

    def predict_proba(self, x):
        return ops.softmax(self.logits(x, training=False))

    def predict(self, x):
        return self.logits(x, training=False).argmax(axis=1)

    def named_params(self):
        for i, layer in enumerate(self.layers):
            for key in layer.params:
                yield f"{i}.{layer.kind}.{key}", layer, key

    def param_dict(self):
        return {name: layer.params[key] for name, layer, key in self.named_params()}

    def grad_dict(self):
        return {name: layer.grads[key] for name, layer, key in self.named_params()}

    def parameter_count(self):
        return int(sum(p.size for p in self.param_dict().values()))

    def describe(self):
        return [layer.describe() for layer in self.layers]

    def set_dropout_rng(self, rng):
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.rng = rng
