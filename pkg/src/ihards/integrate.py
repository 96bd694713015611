"""Build the integrated dataset from three per-source frames.

For every class, ``per_class_n`` row indices are drawn independently from
each source's rows of that class; the three drawn rows are concatenated
column-wise (UCI-HAR | WISDM | KU-HAR) into one integrated row. The five
class blocks are then merged and shuffled.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConfigError, ShapeError, StructuralError
from .ingest import FEATURE_COUNTS, N_CLASSES, CanonicalFrame, IngestStats, SourceDataset
from .rng import substream

log = logging.getLogger(__name__)

SOURCES = (SourceDataset.UCI_HAR, SourceDataset.WISDM, SourceDataset.KU_HAR)
IHARDS_FEATURES = sum(FEATURE_COUNTS[s] for s in SOURCES)
DEFAULT_PER_CLASS = 420_000


class ReplacementPolicy(enum.Enum):
    ERROR_IF_SHORT = "error"
    REPLACE_IF_SHORT = "replace"


@dataclass(frozen=True)
class IntegrationConfig:
    per_class_n: int = DEFAULT_PER_CLASS
    seed: int = 0
    replacement_policy: ReplacementPolicy = ReplacementPolicy.REPLACE_IF_SHORT

    def __post_init__(self):
        if self.per_class_n < 1:
            raise ConfigError("per_class_n must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass
class IhardsDataset:
    features: np.ndarray
    labels: np.ndarray
    seed_used: int | None = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ShapeError(
                f"features {self.features.shape} and labels {self.labels.shape} disagree"
            )

    @property
    def per_class_counts(self):
        return np.bincount(self.labels, minlength=N_CLASSES)[:N_CLASSES]

    @property
    def row_count(self):
        return self.features.shape[0]

    @property
    def col_count(self):
        return self.features.shape[1]

    def take(self, idx):
        return IhardsDataset(self.features[idx], self.labels[idx], self.seed_used)


def draw_class_indices(pool_size, n, rng, policy=ReplacementPolicy.REPLACE_IF_SHORT, what="pool"):
    """Draw ``n`` indices from ``range(pool_size)``.

    Distinct indices when the pool is large enough. Otherwise either raise
    :class:`CapacityError` or sample with replacement, per ``policy``.
    """
    if pool_size < 1 or n < 1:
        raise ConfigError("pool_size and n must both be >= 1")
    if n <= pool_size:
        return rng.choice(pool_size, size=n, replace=False)
    if policy is ReplacementPolicy.ERROR_IF_SHORT:
        raise CapacityError(f"{what}: cannot draw {n} distinct rows from {pool_size}")
    log.warning("%s: only %d rows for %d draws, sampling with replacement", what, pool_size, n)
    return rng.integers(0, pool_size, size=n)


def build_integrated_dataset(uci, wisdm, kuhar, cfg):
    frames = (uci, wisdm, kuhar)
    for src, frame in zip(SOURCES, frames):
        if frame.col_count != FEATURE_COUNTS[src]:
            raise ShapeError(
                f"{src.value} frame has {frame.col_count} columns, expected {FEATURE_COUNTS[src]}"
            )
    n = cfg.per_class_n
    features = np.empty((N_CLASSES * n, IHARDS_FEATURES), dtype=np.float32)
    labels = np.empty(N_CLASSES * n, dtype=np.int64)
    for cls in range(N_CLASSES):
        block = slice(cls * n, (cls + 1) * n)
        col = 0
        for src, frame in zip(SOURCES, frames):
            rows = frame.class_rows(cls)
            if rows.size == 0:
                raise StructuralError(f"{src.value} has no rows for class {cls}")
            rng = substream(cfg.seed, "integrate", src.value, cls)
            picked = rows[
                draw_class_indices(
                    rows.size, n, rng, cfg.replacement_policy, what=f"{src.value} class {cls}"
                )
            ]
            width = frame.col_count
            features[block, col : col + width] = frame.features[picked]
            col += width
        labels[block] = cls
    order = substream(cfg.seed, "integrate", "shuffle").permutation(N_CLASSES * n)
    return IhardsDataset(features[order], labels[order], cfg.seed)


# -- standardization -------------------------------------------------------


@dataclass
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ShapeError("mean and std must be 1-D vectors of equal length")

    def subset(self, keep):
        return StandardizationStats(self.mean[keep], self.std[keep])


def standardize_fit(train):
    """Per-column mean and population standard deviation."""
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] == 0:
        raise ShapeError("need a non-empty 2-D matrix to fit standardization")
    mean = train.mean(axis=0)
    std = np.sqrt(((train - mean) ** 2).mean(axis=0))
    return StandardizationStats(mean, std)


def _safe_std(std):
    return np.where(std == 0, 1, std).astype(std.dtype)


def standardize_apply(data, stats):
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != stats.mean.shape[0]:
        raise ShapeError(f"data has shape {data.shape}, stats cover {stats.mean.shape[0]} columns")
    dtype = data.dtype if np.issubdtype(data.dtype, np.floating) else np.float64
    mean = stats.mean.astype(dtype, copy=False)
    std = _safe_std(stats.std.astype(dtype, copy=False))
    return (data - mean) / std


def standardize_invert(data, stats):
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != stats.mean.shape[0]:
        raise ShapeError(f"data has shape {data.shape}, stats cover {stats.mean.shape[0]} columns")
    return data * _safe_std(stats.std) + stats.mean


# -- split -----------------------------------------------------------------


def stratified_split(data, test_fraction, rng):
    """Split per class, rounding the test share down (the remainder goes to train).

    Returns ``(train, test)`` with rows kept in their input order.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError("test_fraction must lie strictly between 0 and 1")
    train_idx, test_idx = [], []
    for cls in range(N_CLASSES):
        rows = np.flatnonzero(data.labels == cls)
        if rows.size == 0:
            raise StructuralError(f"class {cls} is empty; cannot stratify")
        n_test = math.floor(rows.size * test_fraction + 1e-9)
        perm = rng.permutation(rows)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return data.take(train_idx), data.take(test_idx)


def split_dataset(data, seed, test_fraction=0.5):
    """The pipeline's canonical split: same seed, same partition, in every subcommand."""
    return stratified_split(data, test_fraction, substream(seed, "split"))


# -- synthetic sources -----------------------------------------------------


def _class_means(rng, dim, sigma, n_classes):
    min_dist = max(10.0 * sigma, 1e-3)
    half_width = max(1.0, 20.0 * sigma)
    for _ in range(1000):
        means = rng.uniform(-half_width, half_width, size=(n_classes, dim))
        d = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
        if d[np.triu_indices(n_classes, 1)].min() >= min_dist:
            return means
    raise RuntimeError("could not place separated class means")  # pragma: no cover


def generate_synthetic(per_class, sigma, seed, features=IHARDS_FEATURES, n_classes=N_CLASSES):
    """Three Gaussian-blob source frames (561 / 3 / 7 columns).

    Each class gets a fixed mean per source, placed at least ``10 * sigma``
    from every other class mean; rows are that mean plus N(0, sigma^2) noise.
    """
    if features != IHARDS_FEATURES:
        raise ConfigError(f"synthetic sources split exactly {IHARDS_FEATURES} columns as 561+3+7")
    if n_classes != N_CLASSES:
        raise ConfigError("synthetic data has exactly 5 classes")
    if per_class < 1:
        raise ConfigError("per_class must be >= 1")
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    frames = []
    labels = np.repeat(np.arange(n_classes), per_class)
    for src in SOURCES:
        dim = FEATURE_COUNTS[src]
        means = _class_means(substream(seed, "synth", src.value, "means"), dim, sigma, n_classes)
        noise = substream(seed, "synth", src.value, "noise").normal(
            0.0, 1.0, size=(labels.size, dim)
        )
        feats = means[labels] + sigma * noise
        stats = IngestStats(labels.size, labels.size, 0, 0)
        frames.append(CanonicalFrame(feats, labels.copy(), src, stats))
    return tuple(frames)
