"""Confusion matrices, per-class and pooled scores, one-vs-rest ROC, and reports."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import Label

CLASS_NAMES = tuple(lab.slug for lab in Label)


class MetricsError(ValueError):
    pass


class UndefinedMetricWarning(UserWarning):
    """A 0/0 ratio was reported as 0."""


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = truth, columns = prediction
    labels: tuple = CLASS_NAMES

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise MetricsError(f"confusion matrix must be square and non-empty, got shape {c.shape}")
        if np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
            raise MetricsError("confusion counts must be non-negative integers")
        object.__setattr__(self, "counts", c.astype(np.int64))
        if len(self.labels) != c.shape[0]:
            object.__setattr__(self, "labels", tuple(f"class{i}" for i in range(c.shape[0])))

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tp(self):
        return np.diag(self.counts).astype(np.int64)

    def fp(self):
        return self.counts.sum(axis=0) - self.tp()

    def fn(self):
        return self.counts.sum(axis=1) - self.tp()

    def tn(self):
        return self.total - self.tp() - self.fp() - self.fn()

    def to_list(self):
        return self.counts.tolist()


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    specificity: float
    support: int
    auc: float | None = None


@dataclass(frozen=True)
class MetricsReport:
    classes: list[ClassMetrics]
    accuracy: float
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    error_rate: float
    total: int
    confusion: ConfusionMatrix | None = field(default=None, compare=False)

    @property
    def k(self):
        return len(self.classes)


def confusion_from_predictions(truths, predictions, k: int = 3, labels=None) -> ConfusionMatrix:
    t = np.asarray(truths, dtype=np.int64).reshape(-1)
    p = np.asarray(predictions, dtype=np.int64).reshape(-1)
    if len(t) != len(p):
        raise MetricsError(f"{len(t)} truths but {len(p)} predictions")
    for name, arr in (("truth", t), ("prediction", p)):
        bad = arr[(arr < 0) | (arr >= k)]
        if len(bad):
            raise MetricsError(f"{name} label {int(bad[0])} outside 0..{k - 1}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts, tuple(labels) if labels else (CLASS_NAMES if k == 3 else ()))


def _as_cm(cm) -> ConfusionMatrix:
    cm = cm if isinstance(cm, ConfusionMatrix) else ConfusionMatrix(np.asarray(cm))
    if cm.total == 0:
        raise MetricsError("confusion matrix is empty (total 0)")
    return cm


def _ratio(num, den, what, fill=0.0):
    if den == 0:
        if fill == 0.0:
            warnings.warn(f"{what} is 0/0; reported as 0", UndefinedMetricWarning, stacklevel=3)
        return fill
    return num / den


def accuracy(cm) -> float:
    cm = _as_cm(cm)
    return int(np.trace(cm.counts)) / cm.total


def error_rate(cm) -> float:
    cm = _as_cm(cm)
    return (cm.total - int(np.trace(cm.counts))) / cm.total


def class_metrics(cm) -> list[ClassMetrics]:
    cm = _as_cm(cm)
    tp, fp, fn, tn = cm.tp(), cm.fp(), cm.fn(), cm.tn()
    out = []
    for c in range(cm.k):
        name = cm.labels[c]
        prec = _ratio(tp[c], tp[c] + fp[c], f"precision[{name}]")
        rec = _ratio(tp[c], tp[c] + fn[c], f"recall[{name}]")
        f1 = _ratio(2 * prec * rec, prec + rec, f"f1[{name}]")
        spec = _ratio(tn[c], tn[c] + fp[c], f"specificity[{name}]", fill=1.0)
        out.append(ClassMetrics(name, float(prec), float(rec), float(f1), float(spec), int(tp[c] + fn[c])))
    return out


def micro_macro_f1(cm) -> tuple[float, float, float]:
    """(micro, macro, weighted) F1. Micro pools TP/FP/FN over classes."""
    cm = _as_cm(cm)
    tp, fp, fn = int(cm.tp().sum()), int(cm.fp().sum()), int(cm.fn().sum())
    micro = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
    per = class_metrics(cm)
    f1s = np.array([m.f1 for m in per])
    support = np.array([m.support for m in per], dtype=float)
    macro = float(f1s.mean())
    weighted = float((f1s * support).sum() / support.sum())
    return float(micro), macro, weighted


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(truth_flags, scores) -> RocCurve:
    """One-vs-rest ROC: one point per distinct score (ties grouped), trapezoidal AUC."""
    y = np.asarray(truth_flags).astype(bool).reshape(-1)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(y) != len(s):
        raise MetricsError(f"{len(y)} flags but {len(s)} scores")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("ROC needs at least one positive and one negative example")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tps = np.cumsum(y)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(fpr, tpr, np.r_[np.inf, s[ends]], auc)


def auc_pairwise(truth_flags, scores) -> float:
    """P(score of a positive > score of a negative) + half the tie probability."""
    y = np.asarray(truth_flags).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    pos, neg = s[y], s[~y]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricsError("AUC needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def one_vs_rest_auc(truths, probabilities, k: int = 3) -> list[float | None]:
    """Per-class AUC; None for a class that is absent (or the only one present) in ``truths``."""
    t = np.asarray(truths, dtype=np.int64)
    p = np.asarray(probabilities, dtype=np.float64)
    out = []
    for c in range(k):
        flags = t == c
        out.append(roc_curve(flags, p[:, c]).auc if 0 < flags.sum() < len(flags) else None)
    return out


def evaluate(cm, aucs=None) -> MetricsReport:
    cm = _as_cm(cm)
    per = class_metrics(cm)
    if aucs is not None:
        per = [ClassMetrics(m.label, m.precision, m.recall, m.f1, m.specificity, m.support,
                            None if a is None else float(a)) for m, a in zip(per, aucs)]
    micro, macro, weighted = micro_macro_f1(cm)
    return MetricsReport(per, accuracy(cm), micro, macro, weighted, error_rate(cm), cm.total, cm)


def evaluate_predictions(truths, predictions, probabilities=None, k: int = 3) -> MetricsReport:
    cm = confusion_from_predictions(truths, predictions, k)
    aucs = one_vs_rest_auc(truths, probabilities, k) if probabilities is not None else None
    return evaluate(cm, aucs)


def report_dict(report: MetricsReport) -> dict:
    d = {
        "classes": [{"label": m.label, "precision": m.precision, "recall": m.recall, "f1": m.f1,
                     "specificity": m.specificity, "support": m.support, "auc": m.auc} for m in report.classes],
        "accuracy": report.accuracy,
        "micro_f1": report.micro_f1,
        "macro_f1": report.macro_f1,
        "weighted_f1": report.weighted_f1,
        "error_rate": report.error_rate,
        "total": report.total,
    }
    if report.confusion is not None:
        d["confusion_matrix"] = report.confusion.to_list()
    return d


def render_report(report: MetricsReport) -> tuple[str, str]:
    """Text table (2 decimals) and JSON (full precision), both deterministic."""
    width = max(12, max(len(m.label) for m in report.classes) + 2)
    head = f"{'':<{width}}{'precision':>10}{'recall':>10}{'f1-score':>10}{'specif.':>10}{'auc':>8}{'support':>9}"
    lines = [head, ""]
    for m in report.classes:
        auc = "-" if m.auc is None else f"{m.auc:.2f}"
        lines.append(f"{m.label:<{width}}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}"
                     f"{m.specificity:>10.2f}{auc:>8}{m.support:>9d}")
    lines.append("")
    lines.append(f"{'accuracy':<{width}}{'':>20}{report.accuracy:>10.2f}{'':>18}{report.total:>9d}")
    lines.append(f"{'micro avg':<{width}}{'':>20}{report.micro_f1:>10.2f}{'':>18}{report.total:>9d}")
    lines.append(f"{'macro avg':<{width}}{'':>20}{report.macro_f1:>10.2f}{'':>18}{report.total:>9d}")
    lines.append(f"{'weighted avg':<{width}}{'':>20}{report.weighted_f1:>10.2f}{'':>18}{report.total:>9d}")
    lines.append(f"{'error rate':<{width}}{'':>20}{report.error_rate:>10.2f}")
    text = "\n".join(lines) + "\n"
    js = json.dumps(report_dict(report), indent=2, sort_keys=False) + "\n"
    return text, js
