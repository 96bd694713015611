"""Training and evaluation loops."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..drwcc import FeatureMask
from ..errors import ConfigError, NumericError, ShapeError
from ..integrate import StandardizationStats
from ..rng import substream
from . import ops
from .arch import build_architecture
from .checkpoint import Checkpoint
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 500
    epochs: int = 10
    repeats: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "epochs", "repeats", "adam_epsilon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    curves: list
    # labels/predictions seen during the last epoch, in visit order
    last_epoch_labels: np.ndarray = field(repr=False, default=None)
    last_epoch_predictions: np.ndarray = field(repr=False, default=None)


def _batches(n, batch_size, perm):
    starts = list(range(0, n, batch_size))
    # a trailing batch of one row would make training-mode batch norm undefined
    if len(starts) > 1 and n - starts[-1] == 1:
        starts.pop()
    bounds = starts[1:] + [n]
    return [perm[a:b] for a, b in zip(starts, bounds)]


def train_model(features, labels, spec, cfg, stats=None, mask=None, on_epoch=None):
    """Train ``spec`` on prepared (standardised, masked) rows.

    Weight init, dropout and minibatch order each use their own sub-stream of
    ``cfg.seed``. Returns a :class:`TrainResult`; ``curves`` holds one record
    per epoch with the mean minibatch loss and the training-mode accuracy.
    """
    x = np.ascontiguousarray(features, dtype=np.float32)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeError(f"features {x.shape} and labels {y.shape} disagree")
    n, k = x.shape
    if n < 2:
        raise ShapeError("need at least 2 training rows")
    mask = mask if mask is not None else FeatureMask.keep_all(k)
    if stats is None:
        stats = StandardizationStats(np.zeros(k), np.ones(k))
    if mask.kept_count != k:
        raise ShapeError(f"mask keeps {mask.kept_count} columns, training data has {k}")

    model = build_architecture(spec, k, rng=substream(cfg.seed, "init"))
    model.set_dropout_rng(substream(cfg.seed, "dropout"))
    shuffle = substream(cfg.seed, "shuffle")
    params = model.param_dict()
    state = AdamState()
    curves = []
    seen_y = seen_p = None
    for epoch in range(1, cfg.epochs + 1):
        perm = shuffle.permutation(n)
        total_loss = 0.0
        seen_y, seen_p = [], []
        for step, idx in enumerate(_batches(n, cfg.batch_size, perm), 1):
            xb, yb = x[idx], y[idx]
            logits = model.logits(xb, training=True)
            loss, grad = ops.softmax_xent(logits, yb)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, step {step}")
            model.backward(grad)
            try:
                adam_step(
                    params,
                    model.grad_dict(),
                    state,
                    cfg.learning_rate,
                    cfg.adam_beta1,
                    cfg.adam_beta2,
                    cfg.adam_epsilon,
                )
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, step {step}: {exc}") from None
            total_loss += loss * len(idx)
            seen_y.append(yb)
            seen_p.append(logits.argmax(axis=1))
        seen_y = np.concatenate(seen_y)
        seen_p = np.concatenate(seen_p)
        rec = {
            "epoch": epoch,
            "loss": total_loss / n,
            "accuracy": int((seen_y == seen_p).sum()) / n,
        }
        curves.append(rec)
        log.info("epoch %d loss %.6g accuracy %.6f", epoch, rec["loss"], rec["accuracy"])
        if on_epoch is not None:
            on_epoch(rec)
    metrics = {"train_loss": curves[-1]["loss"], "train_accuracy": curves[-1]["accuracy"]}
    ckpt = Checkpoint(spec, model, mask, stats, metrics)
    return TrainResult(ckpt, curves, seen_y, seen_p)


@dataclass
class EvalResult:
    predictions: np.ndarray
    labels: np.ndarray | None
    loss: float | None


def evaluate_model(ckpt, features, labels=None, batch_size=4096):
    """Inference-mode predictions for prepared rows (masked column count)."""
    x = np.asarray(features, dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != ckpt.input_features:
        raise ShapeError(
            f"checkpoint expects {ckpt.input_features} columns, got {x.shape[1] if x.ndim == 2 else x.shape}"
        )
    preds, loss_sum = [], 0.0
    for start in range(0, x.shape[0], batch_size):
        logits = ckpt.model.logits(x[start : start + batch_size], training=False)
        preds.append(logits.argmax(axis=1))
        if labels is not None:
            yb = np.asarray(labels[start : start + batch_size])
            loss, _ = ops.softmax_xent(logits.astype(np.float64), yb)
            loss_sum += loss * len(yb)
    predictions = np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)
    loss = loss_sum / x.shape[0] if labels is not None and x.shape[0] else None
    return EvalResult(predictions, None if labels is None else np.asarray(labels), loss)
