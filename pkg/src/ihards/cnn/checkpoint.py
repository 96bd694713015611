"""Trained-model container.

Binary layout (little-endian)::

    b"IHCK"                      magic
    u32 version                  currently 1
    u32 header_length
    header                       UTF-8 JSON, keys sorted: arch, layers, feature
                                 counts, mask threshold, metric snapshot
    mask bitset                  ceil(F / 8) bytes, bit i of byte j is column 8j+i
    mean, std                    K x f32 each, over the kept columns
    tensors, in header order     u32 rank, rank x u32 dims, f32 row-major data

F is the raw column count, K the kept column count.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..drwcc import FeatureMask
from ..errors import CorruptionError, FormatError, ShapeError, VersionError
from ..integrate import StandardizationStats, _safe_std
from .arch import ArchSpec, layer_plan
from .layers import Sequential

MAGIC = b"IHCK"
VERSION = 1


@dataclass
class Checkpoint:
    spec: ArchSpec
    model: Sequential
    mask: FeatureMask
    stats: StandardizationStats
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.mask.kept_count
        if self.model.input_features != k:
            raise ShapeError(f"model takes {self.model.input_features} inputs, mask keeps {k}")
        if self.stats.mean.shape != (k,):
            raise ShapeError("standardization stats must cover the kept columns")
        self.stats = StandardizationStats(
            self.stats.mean.astype(np.float32), self.stats.std.astype(np.float32)
        )

    @property
    def raw_features(self):
        return self.mask.keep.size

    @property
    def input_features(self):
        return self.mask.kept_count

    def prepare(self, raw):
        """Mask and standardise raw rows into model inputs (float32)."""
        return prepare_rows(raw, self.mask, self.stats)


def prepare_rows(raw, mask, stats):
    raw = np.asarray(raw, dtype=np.float32)
    if raw.ndim != 2 or raw.shape[1] != mask.keep.size:
        raise ShapeError(f"expected raw rows with {mask.keep.size} columns, got {raw.shape}")
    mean = stats.mean.astype(np.float32)
    std = _safe_std(stats.std.astype(np.float32))
    return (raw[:, mask.keep] - mean) / std


def _tensors(model):
    for i, layer in enumerate(model.layers):
        for key in layer.params:
            yield i, key, layer.params[key]
        for key in layer.buffers:
            yield i, key, layer.buffers[key]


def _header(ckpt):
    layers = []
    for layer in ckpt.model.layers:
        layers.append(
            {
                "kind": layer.kind,
                "config": layer.config(),
                "tensors": list(layer.params) + list(layer.buffers),
            }
        )
    return {
        "arch": ckpt.spec.to_dict(),
        "layers": layers,
        "raw_features": ckpt.raw_features,
        "kept_features": ckpt.input_features,
        "mask_threshold": ckpt.mask.threshold,
        "metrics": ckpt.metrics,
    }


def to_bytes(ckpt):
    header = json.dumps(_header(ckpt), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(header)), header]
    parts.append(np.packbits(ckpt.mask.keep, bitorder="little").tobytes())
    parts.append(ckpt.stats.mean.astype("<f4").tobytes())
    parts.append(ckpt.stats.std.astype("<f4").tobytes())
    for _, _, t in _tensors(ckpt.model):
        parts.append(struct.pack(f"<I{t.ndim}I", t.ndim, *t.shape))
        parts.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return b"".join(parts)


def checkpoint_save(ckpt, path):
    with open(path, "wb") as fh:
        fh.write(to_bytes(ckpt))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CorruptionError("checkpoint is truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, count=1):
        return struct.unpack(f"<{count}I", self.take(4 * count))

    def f32(self, count):
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float32)


def from_bytes(buf):
    r = _Reader(buf)
    magic = buf[:4]
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    r.take(4)
    (version,) = r.u32()
    if version > VERSION:
        raise VersionError(f"checkpoint version {version} is newer than supported {VERSION}")
    (hlen,) = r.u32()
    try:
        header = json.loads(r.take(hlen).decode("utf-8"))
        spec = ArchSpec.from_dict(header["arch"])
        raw_n, kept_n = int(header["raw_features"]), int(header["kept_features"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise CorruptionError(f"unreadable checkpoint header ({exc})") from None
    keep = np.unpackbits(
        np.frombuffer(r.take((raw_n + 7) // 8), dtype=np.uint8), bitorder="little", count=raw_n
    ).astype(bool)
    if int(keep.sum()) != kept_n:
        raise CorruptionError("mask bitset disagrees with header feature count")
    mask = FeatureMask(keep, float(header["mask_threshold"]))
    stats = StandardizationStats(r.f32(kept_n), r.f32(kept_n))
    layers = layer_plan(spec, kept_n)
    if [l.kind for l in layers] != [d["kind"] for d in header["layers"]]:
        raise CorruptionError("layer list does not match the architecture")
    for layer, desc in zip(layers, header["layers"]):
        for key in desc["tensors"]:
            store = layer.params if key in layer.params else layer.buffers
            if key not in store:
                raise CorruptionError(f"unexpected tensor {key!r} for {layer.kind}")
            (rank,) = r.u32()
            dims = r.u32(rank) if rank else ()
            if tuple(dims) != store[key].shape:
                raise CorruptionError(f"tensor {layer.kind}.{key} has shape {dims}, expected {store[key].shape}")
            store[key] = r.f32(int(np.prod(dims))).reshape(dims)
    if r.pos != len(buf):
        raise CorruptionError("trailing bytes after the last tensor")
    model = Sequential(layers, kept_n)
    return Checkpoint(spec, model, mask, stats, header.get("metrics", {}))


def checkpoint_load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
