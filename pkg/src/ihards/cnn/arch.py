"""The five 1D-CNN architectures and the builder that turns a spec into layers.

Layer order for every spec::

    [Conv1D -> ReLU] * len(conv_filters) -> MaxPool1D -> Dropout -> Flatten
    -> [Dense -> ReLU -> (BatchNorm) -> Dropout] * hidden dense layers
    -> Dense(5) -> Softmax

Weights are drawn from U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)); biases start
at zero; batch-norm starts at gamma=1, beta=0, running mean 0 / variance 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, ShapeError
from ..ingest import N_CLASSES
from .layers import BatchNorm, Conv1D, Dense, Dropout, Flatten, MaxPool1D, ReLU, Sequential, Softmax


@dataclass(frozen=True)
class ArchSpec:
    name: str
    conv_filters: tuple
    conv_kernels: tuple
    dense_units: tuple
    batch_norm: bool
    pool_size: int = 2
    conv_dropout: float = 0.5
    dense_dropouts: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(int(v) for v in self.conv_filters))
        object.__setattr__(self, "conv_kernels", tuple(int(v) for v in self.conv_kernels))
        object.__setattr__(self, "dense_units", tuple(int(v) for v in self.dense_units))
        if self.dense_dropouts is None:
            object.__setattr__(self, "dense_dropouts", (0.5,) * (len(self.dense_units) - 1))
        object.__setattr__(self, "dense_dropouts", tuple(float(v) for v in self.dense_dropouts))
        self.validate()

    def validate(self):
        if not self.conv_filters or len(self.conv_filters) != len(self.conv_kernels):
            raise ConfigError(f"{self.name}: conv_filters and conv_kernels must be non-empty and equal length")
        if not self.dense_units or self.dense_units[-1] != N_CLASSES:
            raise ConfigError(f"{self.name}: the last dense layer must have {N_CLASSES} units")
        if len(self.dense_dropouts) != len(self.dense_units) - 1:
            raise ConfigError(f"{self.name}: need one dropout rate per hidden dense layer")
        if min(self.conv_filters + self.conv_kernels + self.dense_units) < 1 or self.pool_size < 1:
            raise ConfigError(f"{self.name}: sizes must be positive")
        for rate in (self.conv_dropout, *self.dense_dropouts):
            if not 0 <= rate < 1:
                raise ConfigError(f"{self.name}: dropout rates must lie in [0, 1)")

    def to_dict(self):
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad architecture description: {exc}") from None

    @classmethod
    def from_file(cls, path):
        """Read a ``key=value`` architecture file (lists comma-separated)."""
        fields = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(f"{path}: expected key=value, got {line!r}")
                fields[key.strip()] = value.strip()
        try:
            return cls(
                name=fields.get("name", "custom"),
                conv_filters=_ints(fields["conv_filters"]),
                conv_kernels=_ints(fields["conv_kernels"]),
                dense_units=_ints(fields["dense_units"]),
                batch_norm=fields.get("batch_norm", "no").lower() in ("1", "yes", "true"),
                pool_size=int(fields.get("pool_size", 2)),
                conv_dropout=float(fields.get("conv_dropout", 0.5)),
                dense_dropouts=(
                    tuple(float(v) for v in fields["dense_dropouts"].split(","))
                    if "dense_dropouts" in fields
                    else None
                ),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: invalid architecture file ({exc})") from None


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


ARCHITECTURES = {
    "arch1": ArchSpec("arch1", (32, 16), (7, 3), (256, 64, 5), batch_norm=False),
    "arch2": ArchSpec("arch2", (32, 16), (7, 3), (256, 64, 5), batch_norm=True),
    "arch3": ArchSpec("arch3", (32,), (3,), (256, 64, 5), batch_norm=True),
    "arch4": ArchSpec("arch4", (16,), (3,), (256, 5), batch_norm=True),
    "arch5": ArchSpec("arch5", (8,), (3,), (64, 5), batch_norm=True),
}


def get_arch(name):
    try:
        return ARCHITECTURES[name]
    except KeyError:
        valid = ", ".join(sorted(ARCHITECTURES))
        raise ConfigError(f"unknown architecture {name!r}; valid names: {valid}") from None


def layer_plan(spec, input_features):
    """The layer list (unparameterised) with per-layer output shapes."""
    if input_features < max(spec.conv_kernels):
        raise ShapeError(f"{input_features} input features shorter than kernel {max(spec.conv_kernels)}")
    layers = []
    channels = 1
    for filters, k in zip(spec.conv_filters, spec.conv_kernels):
        layers.append(Conv1D(channels, filters, k))
        layers.append(ReLU())
        channels = filters
    layers.append(MaxPool1D(spec.pool_size))
    layers.append(Dropout(spec.conv_dropout))
    layers.append(Flatten())
    shape = (input_features, 1)
    for layer in layers:
        shape = layer.output_shape(shape)
    width = shape[0]
    for units, rate in zip(spec.dense_units[:-1], spec.dense_dropouts):
        layers.append(Dense(width, units))
        layers.append(ReLU())
        if spec.batch_norm:
            layers.append(BatchNorm(units))
        layers.append(Dropout(rate))
        width = units
    layers.append(Dense(width, spec.dense_units[-1]))
    layers.append(Softmax())
    return layers


def build_architecture(spec, input_features, rng=None, dtype=np.float32):
    layers = layer_plan(spec, input_features)
    rng = rng if rng is not None else np.random.default_rng(0)
    for layer in layers:
        if isinstance(layer, (Conv1D, Dense)):
            limit = np.sqrt(6.0 / layer.fan_in())
            w = layer.params["w"]
            layer.params["w"] = rng.uniform(-limit, limit, size=w.shape).astype(dtype)
            layer.params["b"] = layer.params["b"].astype(dtype)
        else:
            for key in layer.params:
                layer.params[key] = layer.params[key].astype(dtype)
            for key in layer.buffers:
                layer.buffers[key] = layer.buffers[key].astype(dtype)
    return Sequential(layers, input_features)


def shape_trace(model):
    """Output shape after each layer for a single row (no batch axis)."""
    shape = (model.input_features, 1)
    out = []
    for layer in model.layers:
        shape = layer.output_shape(shape)
        out.append(shape)
    return out
