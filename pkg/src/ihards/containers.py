"""IHDS binary container for integrated (or any labelled) feature matrices.

Layout, all little-endian::

    b"IHDS"            4 bytes magic
    version            u32, currently 1
    feature_count      u32
    row_count          u64
    labels_present     u8 (0 or 1)
    rows               row_count x (feature_count x f32 [+ u8 label])
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptionError, FormatError, ShapeError, VersionError
from .integrate import IhardsDataset

MAGIC = b"IHDS"
VERSION = 1
_HEADER = struct.Struct("<4sIIQB")
CSV_ROW_LIMIT = 100_000
_CHUNK_ROWS = 65_536


def _row_dtype(feature_count, labels_present):
    fields = [("x", "<f4", (feature_count,))]
    if labels_present:
        fields.append(("y", "u1"))
    return np.dtype(fields)


def write_ihds(path, features, labels=None):
    features = np.asarray(features)
    if features.ndim != 2:
        raise ShapeError("features must be 2-D")
    rows, cols = features.shape
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (rows,):
            raise ShapeError("labels length must equal row count")
        if labels.size and (labels.min() < 0 or labels.max() > 255):
            raise ShapeError("labels must fit in u8")
    dtype = _row_dtype(cols, labels is not None)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, cols, rows, int(labels is not None)))
        for start in range(0, rows, _CHUNK_ROWS):
            stop = min(start + _CHUNK_ROWS, rows)
            buf = np.empty(stop - start, dtype=dtype)
            buf["x"] = features[start:stop]
            if labels is not None:
                buf["y"] = labels[start:stop]
            fh.write(buf.tobytes())


def read_ihds_header(fh):
    raw = fh.read(_HEADER.size)
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < _HEADER.size:
        raise CorruptionError("truncated IHDS header")
    magic, version, cols, rows, has_labels = _HEADER.unpack(raw)
    if version > VERSION:
        raise VersionError(f"IHDS version {version} is newer than supported version {VERSION}")
    if version < 1 or has_labels not in (0, 1):
        raise CorruptionError("invalid IHDS header fields")
    return cols, rows, bool(has_labels)


def read_ihds(path):
    """Return ``(features float32 [rows, cols], labels int64 or None)``."""
    with open(path, "rb") as fh:
        cols, rows, has_labels = read_ihds_header(fh)
        dtype = _row_dtype(cols, has_labels)
        payload = fh.read()
    expected = rows * dtype.itemsize
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype, count=rows)
    features = np.ascontiguousarray(data["x"]).reshape(rows, cols)
    labels = data["y"].astype(np.int64) if has_labels else None
    return features, labels


def load_dataset(path):
    features, labels = read_ihds(path)
    if labels is None:
        raise FormatError(f"{path} carries no labels")
    return IhardsDataset(features, labels)


def save_dataset(path, data):
    write_ihds(path, data.features, data.labels)


def export_csv(path, features, labels=None):
    features = np.asarray(features)
    if features.shape[0] > CSV_ROW_LIMIT:
        raise ShapeError(f"CSV export is limited to {CSV_ROW_LIMIT} rows")
    header = [f"f{i}" for i in range(features.shape[1])]
    if labels is not None:
        header.append("label")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(features):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")
