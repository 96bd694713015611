"""Confusion matrix, per-class and averaged scores, report files.

Per class (one-vs-rest)::

    SEN  = TP / (TP + FN)            recall
    SPF  = TN / (TN + FP)
    Prec = TP / (TP + FP)
    ACC  = (TP + TN) / (TP + TN + FP + FN)
    F1   = 2 Prec Rec / (Prec + Rec) = 2 TP / (2 TP + FP + FN)

A score with a zero denominator is reported as 0 and listed in ``flags``.
Micro scores pool TP/FP/FN over classes; macro scores are unweighted means.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, LabelError
from .ingest import CLASS_NAMES, N_CLASSES

SCORES = ("sen", "spf", "prec", "acc", "f1")
REPORT_FORMAT = "ihards-report/1"


@dataclass
class ConfusionMatrix:
    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def n_classes(self):
        return self.counts.shape[0]


def confusion_matrix(labels, predictions, n_classes=N_CLASSES):
    labels = np.asarray(labels, dtype=np.int64).ravel()
    predictions = np.asarray(predictions, dtype=np.int64).ravel()
    if labels.shape != predictions.shape:
        raise LabelError(f"{labels.size} labels vs {predictions.size} predictions")
    for name, v in (("label", labels), ("prediction", predictions)):
        if v.size and (v.min() < 0 or v.max() >= n_classes):
            raise LabelError(f"{name} outside 0..{n_classes - 1}")
    counts = np.bincount(labels * n_classes + predictions, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes).astype(np.int64))


def _ratio(num, den, flags, key):
    if den == 0:
        flags.append(key)
        return 0.0
    return num / den


@dataclass
class ScoreReport:
    tp: list
    fp: list
    fn: list
    tn: list
    per_class: dict
    micro: dict
    macro: dict
    accuracy: float
    total: int
    confusion: ConfusionMatrix
    loss: float | None = None
    flags: list = field(default_factory=list)


def derive_scores(cm, loss=None):
    total = cm.total
    if total == 0:
        raise DataError("cannot score an empty evaluation")
    c = cm.counts
    k = cm.n_classes
    flags = []
    tp = [int(c[i, i]) for i in range(k)]
    fp = [int(c[:, i].sum()) - tp[i] for i in range(k)]
    fn = [int(c[i, :].sum()) - tp[i] for i in range(k)]
    tn = [total - tp[i] - fp[i] - fn[i] for i in range(k)]
    per_class = {s: [] for s in SCORES}
    for i in range(k):
        per_class["sen"].append(_ratio(tp[i], tp[i] + fn[i], flags, f"class.{i}.sen"))
        per_class["spf"].append(_ratio(tn[i], tn[i] + fp[i], flags, f"class.{i}.spf"))
        per_class["prec"].append(_ratio(tp[i], tp[i] + fp[i], flags, f"class.{i}.prec"))
        per_class["acc"].append((tp[i] + tn[i]) / total)
        per_class["f1"].append(_ratio(2 * tp[i], 2 * tp[i] + fp[i] + fn[i], flags, f"class.{i}.f1"))
    TP, FP, FN, TN = sum(tp), sum(fp), sum(fn), sum(tn)
    micro = {
        "prec": _ratio(TP, TP + FP, flags, "micro.prec"),
        "sen": _ratio(TP, TP + FN, flags, "micro.sen"),
        "spf": _ratio(TN, TN + FP, flags, "micro.spf"),
        "f1": _ratio(2 * TP, 2 * TP + FP + FN, flags, "micro.f1"),
    }
    macro = {s: sum(per_class[s]) / k for s in SCORES}
    accuracy = TP / total
    return ScoreReport(tp, fp, fn, tn, per_class, micro, macro, accuracy, total, cm, loss, flags)


def accuracy_score(labels, predictions):
    return derive_scores(confusion_matrix(labels, predictions)).accuracy


# -- report files ----------------------------------------------------------


def format_summary(report, class_names=CLASS_NAMES, extra=None):
    """Line-oriented ``key=value`` text; floats use ``repr`` so they parse back exactly."""
    lines = [f"format={REPORT_FORMAT}", f"total={report.total}", f"accuracy={report.accuracy!r}"]
    if report.loss is not None:
        lines.append(f"loss={report.loss!r}")
    for agg_name, agg in (("micro", report.micro), ("macro", report.macro)):
        for key in sorted(agg):
            lines.append(f"{agg_name}.{key}={agg[key]!r}")
    for i in range(report.confusion.n_classes):
        lines.append(f"class.{i}.name={class_names[i]}")
        for key, vals in (("tp", report.tp), ("fp", report.fp), ("fn", report.fn), ("tn", report.tn)):
            lines.append(f"class.{i}.{key}={vals[i]}")
        for s in SCORES:
            lines.append(f"class.{i}.{s}={report.per_class[s][i]!r}")
    for i, row in enumerate(report.confusion.counts):
        lines.append(f"confusion.{i}={','.join(str(int(v)) for v in row)}")
    lines.append(f"flags={','.join(report.flags)}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    return "\n".join(lines) + "\n"


def parse_summary(text):
    """Inverse of :func:`format_summary` for the score fields."""
    kv = {}
    for line in text.splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            kv[key] = value
    k = sum(1 for key in kv if key.startswith("confusion."))
    counts = np.array(
        [[int(v) for v in kv[f"confusion.{i}"].split(",")] for i in range(k)], dtype=np.int64
    )
    per_class = {s: [float(kv[f"class.{i}.{s}"]) for i in range(k)] for s in SCORES}
    report = ScoreReport(
        tp=[int(kv[f"class.{i}.tp"]) for i in range(k)],
        fp=[int(kv[f"class.{i}.fp"]) for i in range(k)],
        fn=[int(kv[f"class.{i}.fn"]) for i in range(k)],
        tn=[int(kv[f"class.{i}.tn"]) for i in range(k)],
        per_class=per_class,
        micro={key[6:]: float(v) for key, v in kv.items() if key.startswith("micro.")},
        macro={key[6:]: float(v) for key, v in kv.items() if key.startswith("macro.")},
        accuracy=float(kv["accuracy"]),
        total=int(kv["total"]),
        confusion=ConfusionMatrix(counts),
        loss=float(kv["loss"]) if "loss" in kv else None,
        flags=[f for f in kv.get("flags", "").split(",") if f],
    )
    return report


def format_curves(curves):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "loss", "accuracy"])
    for rec in curves:
        w.writerow([rec["epoch"], repr(float(rec["loss"])), repr(float(rec["accuracy"]))])
    return buf.getvalue()


def format_confusion_csv(cm, class_names=CLASS_NAMES):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred", *class_names[: cm.n_classes]])
    for i, row in enumerate(cm.counts):
        w.writerow([class_names[i], *(int(v) for v in row)])
    return buf.getvalue()


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc


def emit_report(report, curves, summary_path, curves_path=None, confusion_path=None, extra=None):
    _write(summary_path, format_summary(report, extra=extra))
    if curves_path is not None:
        _write(curves_path, format_curves(curves))
    if confusion_path is not None:
        _write(confusion_path, format_confusion_csv(report.confusion))
