"""Stage functions shared by the command line and the tests."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from . import metrics
from .cnn import TrainConfig, evaluate_model, train_model
from .cnn.checkpoint import prepare_rows
from .drwcc import FeatureMask, apply_feature_mask, correlation_matrix, drwcc_prune
from .integrate import (
    IntegrationConfig,
    StandardizationStats,
    build_integrated_dataset,
    generate_synthetic,
    split_dataset,
    standardize_fit,
)
from .rng import derive_seed

log = logging.getLogger(__name__)


def synthetic_integrated(per_class, sigma, seed, replacement_policy=None):
    frames = generate_synthetic(per_class, sigma, seed)
    cfg = IntegrationConfig(per_class_n=per_class, seed=seed)
    if replacement_policy is not None:
        cfg = IntegrationConfig(per_class, seed, replacement_policy)
    return build_integrated_dataset(*frames, cfg)


def fit_mask(data, threshold, seed, fit_on_all=False, test_fraction=0.5):
    rows = data.features if fit_on_all else split_dataset(data, seed, test_fraction)[0].features
    corr = correlation_matrix(rows)
    return drwcc_prune(corr, threshold), corr


@dataclass
class RunResult:
    train: object  # TrainResult
    report: metrics.ScoreReport
    test_predictions: np.ndarray


def prepare_split(data, seed, mask=None, test_fraction=0.5):
    train, test = split_dataset(data, seed, test_fraction)
    mask = mask if mask is not None else FeatureMask.keep_all(data.col_count)
    stats = standardize_fit(apply_feature_mask(train.features, mask))
    stats = StandardizationStats(stats.mean.astype(np.float32), stats.std.astype(np.float32))
    return train, test, mask, stats


def train_and_evaluate(data, spec, cfg, mask=None, test_fraction=0.5, on_epoch=None, split_seed=None):
    """Split, standardise on the training rows, train once with ``cfg.seed``, score the test rows.

    The split uses ``split_seed`` (default ``cfg.seed``).
    """
    split_seed = cfg.seed if split_seed is None else split_seed
    train, test, mask, stats = prepare_split(data, split_seed, mask, test_fraction)
    x_train = prepare_rows(train.features, mask, stats)
    result = train_model(x_train, train.labels, spec, cfg, stats=stats, mask=mask, on_epoch=on_epoch)
    ev = evaluate_model(result.checkpoint, result.checkpoint.prepare(test.features), test.labels)
    report = metrics.derive_scores(metrics.confusion_matrix(test.labels, ev.predictions), loss=ev.loss)
    result.checkpoint.metrics.update(
        {"test_accuracy": report.accuracy, "test_loss": ev.loss, "test_rows": int(test.row_count)}
    )
    return RunResult(result, report, ev.predictions)


def run_repeats(data, spec, cfg, mask=None, test_fraction=0.5, on_epoch=None):
    """``cfg.repeats`` independently seeded runs; returns (runs, best index, aggregates).

    Every repeat shares the split drawn from ``cfg.seed`` (the one ``analyze``
    and ``eval`` reproduce); repeats differ in weight init, dropout and
    minibatch order.
    """
    runs = []
    for r in range(cfg.repeats):
        seed_r = cfg.seed if cfg.repeats == 1 else derive_seed(cfg.seed, "repeat", r)
        cfg_r = TrainConfig(**{**cfg.to_dict(), "seed": seed_r, "repeats": 1})
        log.info("repeat %d/%d (seed %d)", r + 1, cfg.repeats, seed_r)
        runs.append(train_and_evaluate(data, spec, cfg_r, mask, test_fraction, on_epoch, cfg.seed))
    accs = [run.report.accuracy for run in runs]
    best = int(np.argmax(accs))
    agg = {}
    for key, values in (
        ("accuracy", accs),
        ("micro_f1", [run.report.micro["f1"] for run in runs]),
        ("macro_f1", [run.report.macro["f1"] for run in runs]),
        ("macro_prec", [run.report.macro["prec"] for run in runs]),
        ("macro_sen", [run.report.macro["sen"] for run in runs]),
        ("loss", [run.report.loss for run in runs]),
    ):
        mean = sum(values) / len(values)
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        agg[f"repeats.{key}.mean"] = mean
        agg[f"repeats.{key}.std"] = std
    for r, acc in enumerate(accs):
        agg[f"repeat.{r}.accuracy"] = acc
    return runs, best, agg


def default_source_paths(data_dir=None):
    data_dir = data_dir or os.environ.get("IHARDS_DATA_DIR", "")
    if not data_dir:
        return {}
    return {
        "uci": os.path.join(data_dir, "UCI HAR Dataset"),
        "wisdm": os.path.join(data_dir, "WISDM_ar_v1.1_raw.txt"),
        "kuhar": os.path.join(data_dir, "KU-HAR.csv"),
    }
