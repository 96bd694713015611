"""Parsers for UCI-HAR, WISDM (raw accelerometer log) and KU-HAR.

Each loader returns a :class:`CanonicalFrame` whose labels are already mapped
onto the five shared activity classes. Rows whose source label maps to
``None`` (drop) are filtered out and counted in :class:`IngestStats`.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import MappingError, ParseError, StructuralError

log = logging.getLogger(__name__)


class ActivityClass(enum.IntEnum):
    STAND = 0
    SIT = 1
    WALK = 2
    STAIR_DOWN = 3
    STAIR_UP = 4

    @property
    def display(self):
        return CLASS_NAMES[self.value]


CLASS_NAMES = ("Stand", "Sit", "Walk", "Stair-down", "Stair-up")
N_CLASSES = len(CLASS_NAMES)
_BY_NAME = {name.lower(): ActivityClass(i) for i, name in enumerate(CLASS_NAMES)}


class SourceDataset(enum.Enum):
    UCI_HAR = "UCI_HAR"
    WISDM = "WISDM"
    KU_HAR = "KU_HAR"

    @property
    def feature_count(self):
        return FEATURE_COUNTS[self]


FEATURE_COUNTS = {
    SourceDataset.UCI_HAR: 561,
    SourceDataset.WISDM: 3,
    SourceDataset.KU_HAR: 7,
}
KU_HAR_CLASS_CODES = range(18)


@dataclass
class IngestStats:
    rows_in: int = 0
    rows_emitted: int = 0
    rows_label_filtered: int = 0
    rows_malformed: int = 0

    def conserved(self):
        return self.rows_in == self.rows_emitted + self.rows_label_filtered + self.rows_malformed


@dataclass
class CanonicalFrame:
    features: np.ndarray
    labels: np.ndarray
    source: SourceDataset | None = None
    stats: IngestStats = field(default_factory=IngestStats)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise StructuralError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise StructuralError(
                f"labels length {self.labels.shape} does not match {self.features.shape[0]} rows"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= N_CLASSES):
            raise StructuralError("labels must lie in 0..4")
        if not np.isfinite(self.features).all():
            raise StructuralError("features contain NaN or Inf")

    @property
    def row_count(self):
        return self.features.shape[0]

    @property
    def col_count(self):
        return self.features.shape[1]

    def class_rows(self, cls):
        return np.flatnonzero(self.labels == int(cls))


class LabelMap:
    """Total mapping from a source's raw labels to a class or drop (``None``)."""

    def __init__(self, entries, source=None):
        self.source = source
        self.entries = {}
        for raw, target in entries.items():
            self.entries[str(raw)] = _resolve_class(target)
        missing = set(ActivityClass) - {c for c in self.entries.values() if c is not None}
        if missing:
            names = ", ".join(CLASS_NAMES[c] for c in sorted(missing))
            raise StructuralError(f"label map for {source} covers no source label for: {names}")

    def __call__(self, raw):
        return map_to_canonical_labels(raw, self)

    def __contains__(self, raw):
        return str(raw) in self.entries

    def to_dict(self):
        return {k: (None if v is None else CLASS_NAMES[v]) for k, v in self.entries.items()}

    @classmethod
    def from_json(cls, path, source):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        key = source.value if isinstance(source, SourceDataset) else str(source)
        if key in doc:
            doc = doc[key]
        return cls(doc, source=key)


def _resolve_class(target):
    if target is None:
        return None
    if isinstance(target, int) and not isinstance(target, bool):
        return ActivityClass(target)
    try:
        return _BY_NAME[str(target).lower()]
    except KeyError:
        raise StructuralError(f"unknown activity class {target!r}") from None


def default_label_map(source):
    source = SourceDataset(source)
    with resources.files(__package__).joinpath("data/label_maps.json").open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return LabelMap(doc[source.value], source=source.value)


def map_to_canonical_labels(raw_label, label_map):
    """Look up ``raw_label``; returns an :class:`ActivityClass` or ``None`` for drop."""
    try:
        return label_map.entries[str(raw_label)]
    except KeyError:
        raise MappingError(
            f"unknown source label {raw_label!r} for {label_map.source or 'label map'}"
        ) from None


def _check_file(path):
    if not os.path.isfile(path):
        raise StructuralError(f"missing file: {path}")


# -- UCI-HAR ---------------------------------------------------------------


def _read_activity_labels(path):
    _check_file(path)
    names = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ParseError("expected '<code> <NAME>'", path, lineno)
            try:
                names[int(parts[0])] = parts[1]
            except ValueError:
                raise ParseError(f"non-integer activity code {parts[0]!r}", path, lineno) from None
    return names


def _read_matrix(path, ncols):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != ncols:
                raise ParseError(f"expected {ncols} values, found {len(tokens)}", path, lineno)
            try:
                row = [float(t) for t in tokens]
            except ValueError as exc:
                raise ParseError(f"non-numeric token ({exc})", path, lineno) from None
            rows.append(row)
    if not rows:
        return np.empty((0, ncols))
    out = np.array(rows, dtype=np.float64)
    if not np.isfinite(out).all():
        bad = int(np.flatnonzero(~np.isfinite(out).all(axis=1))[0])
        raise ParseError("non-finite value", path, bad + 1)
    return out


def _read_codes(path):
    codes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            try:
                codes.append(int(tok))
            except ValueError:
                raise ParseError(f"non-integer label {tok!r}", path, lineno) from None
    return codes


def load_uci_har(dir_path, label_map=None):
    """Merge the UCI-HAR train and test partitions (train rows first)."""
    label_map = label_map or default_label_map(SourceDataset.UCI_HAR)
    ncols = FEATURE_COUNTS[SourceDataset.UCI_HAR]
    names = _read_activity_labels(os.path.join(dir_path, "activity_labels.txt"))
    feats, labels = [], []
    stats = IngestStats()
    for part in ("train", "test"):
        x_path = os.path.join(dir_path, part, f"X_{part}.txt")
        y_path = os.path.join(dir_path, part, f"y_{part}.txt")
        _check_file(x_path)
        _check_file(y_path)
        x = _read_matrix(x_path, ncols)
        y = _read_codes(y_path)
        if len(y) != x.shape[0]:
            raise StructuralError(
                f"{x_path} has {x.shape[0]} rows but {y_path} has {len(y)} labels"
            )
        stats.rows_in += len(y)
        keep = []
        for i, code in enumerate(y):
            if code not in names:
                raise MappingError(f"activity code {code} not listed in activity_labels.txt")
            cls = map_to_canonical_labels(names[code], label_map)
            if cls is None:
                stats.rows_label_filtered += 1
                continue
            keep.append(i)
            labels.append(int(cls))
        feats.append(x[keep])
    features = np.concatenate(feats) if feats else np.empty((0, ncols))
    stats.rows_emitted = len(labels)
    return CanonicalFrame(features, np.array(labels, dtype=np.int64), SourceDataset.UCI_HAR, stats)


# -- WISDM raw log ---------------------------------------------------------

MALFORMED_LIMIT = 0.5


def _parse_wisdm_record(rec):
    parts = [p.strip() for p in rec.split(",")]
    # The public file has trailing commas on some records ("...,0.5,;").
    while parts and parts[-1] == "" and len(parts) > 6:
        parts.pop()
    if len(parts) != 6:
        return None
    activity = parts[1]
    try:
        xyz = [float(p) for p in parts[3:6]]
    except ValueError:
        return None
    if not activity or not all(np.isfinite(xyz)):
        return None
    return activity, xyz


def load_wisdm_raw(file_path, label_map=None):
    """Parse ``user,activity,timestamp,x,y,z;`` records.

    A physical line may hold several ``;``-terminated records; each counts as
    one input row. Blank lines and records that do not parse are skipped and
    counted as malformed.
    """
    label_map = label_map or default_label_map(SourceDataset.WISDM)
    stats = IngestStats()
    feats, labels = [], []
    try:
        fh = open(file_path, encoding="utf-8", errors="replace")
    except OSError as exc:
        raise StructuralError(f"cannot read {file_path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.strip()
            if not line:
                stats.rows_in += 1
                stats.rows_malformed += 1
                continue
            for rec in line.split(";"):
                if not rec.strip():
                    continue
                stats.rows_in += 1
                parsed = _parse_wisdm_record(rec)
                if parsed is None:
                    stats.rows_malformed += 1
                    continue
                activity, xyz = parsed
                cls = map_to_canonical_labels(activity, label_map)
                if cls is None:
                    stats.rows_label_filtered += 1
                    continue
                feats.append(xyz)
                labels.append(int(cls))
    if stats.rows_in and stats.rows_malformed / stats.rows_in > MALFORMED_LIMIT:
        raise ParseError(
            f"{stats.rows_malformed} of {stats.rows_in} records malformed; "
            "this does not look like the WISDM raw log",
            file_path,
        )
    if stats.rows_malformed:
        log.warning("%s: skipped %d malformed records", file_path, stats.rows_malformed)
    stats.rows_emitted = len(labels)
    features = np.array(feats, dtype=np.float64).reshape(-1, 3)
    return CanonicalFrame(features, np.array(labels, dtype=np.int64), SourceDataset.WISDM, stats)


# -- KU-HAR ----------------------------------------------------------------


def load_ku_har(file_path, label_map=None, feature_cols=None, label_col=-1, skip_header=False):
    """Parse a comma-separated KU-HAR table.

    ``label_col`` holds the 0-17 class code. ``feature_cols`` defaults to the
    seven columns immediately before the label column.
    """
    label_map = label_map or default_label_map(SourceDataset.KU_HAR)
    ncols = FEATURE_COUNTS[SourceDataset.KU_HAR]
    if feature_cols is not None and len(feature_cols) != ncols:
        raise StructuralError(f"KU-HAR needs exactly {ncols} feature columns, got {len(feature_cols)}")
    _check_file(file_path)
    stats = IngestStats()
    feats, labels = [], []
    with open(file_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if skip_header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            width = len(cells)
            lab = label_col if label_col >= 0 else width + label_col
            cols = feature_cols if feature_cols is not None else range(lab - ncols, lab)
            if lab >= width or lab < 0 or min(cols) < 0 or max(cols) >= width:
                raise ParseError(f"row has only {width} columns", file_path, lineno)
            stats.rows_in += 1
            raw = cells[lab].strip()
            try:
                code = int(float(raw))
            except ValueError:
                raise ParseError(f"non-numeric class code {raw!r}", file_path, lineno) from None
            if code not in KU_HAR_CLASS_CODES or float(raw) != code:
                raise ParseError(f"class code {raw} outside 0-17", file_path, lineno)
            row = []
            for c in cols:
                try:
                    v = float(cells[c])
                except ValueError:
                    raise ParseError(
                        f"non-numeric feature cell {cells[c]!r} in column {c}", file_path, lineno
                    ) from None
                if not np.isfinite(v):
                    raise ParseError(f"non-finite feature in column {c}", file_path, lineno)
                row.append(v)
            cls = map_to_canonical_labels(str(code), label_map)
            if cls is None:
                stats.rows_label_filtered += 1
                continue
            feats.append(row)
            labels.append(int(cls))
    stats.rows_emitted = len(labels)
    features = np.array(feats, dtype=np.float64).reshape(-1, ncols)
    return CanonicalFrame(features, np.array(labels, dtype=np.int64), SourceDataset.KU_HAR, stats)
