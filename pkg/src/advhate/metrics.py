"""Confusion-matrix metrics and ROC-AUC for the three-class task."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyMatrix, LabelOutOfRange, LengthMismatch, SingleClassOnly

CLASS_NAMES = ("Hate", "Offensive", "Neither")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def tp(self):
        return np.diag(self.counts).astype(np.int64)

    @property
    def fn(self):
        return self.counts.sum(axis=1) - self.tp

    @property
    def fp(self):
        return self.counts.sum(axis=0) - self.tp

    @property
    def tn(self):
        return self.n - self.tp - self.fp - self.fn

    @property
    def support(self):
        return self.counts.sum(axis=1)


def confusion(y_true, y_pred, n_classes=3):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape} vs {y_pred.shape}")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return ConfusionMatrix(m)


def accuracy(m):
    if m.n == 0:
        raise EmptyMatrix("accuracy of an empty confusion matrix")
    return float(np.trace(m.counts)) / m.n


def binary_accuracy(tp, tn, fp, fn):
    return (tp + tn) / (tp + tn + fp + fn)


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


def f1_from(p, r):
    return _safe_div(2 * p * r, p + r)


@dataclass
class PRF:
    precision: object
    recall: object
    f1: object
    zero_division: list = field(default_factory=list)


def precision_recall_f1(m, averaging="weighted"):
    """Per-class P/R/F1 or their ``weighted``/``macro`` average.

    A zero denominator yields 0 and is listed in ``zero_division``.
    """
    if m.n == 0:
        raise EmptyMatrix("metrics of an empty confusion matrix")
    tp, fp, fn = m.tp, m.fp, m.fn
    p = _safe_div(tp, tp + fp)
    r = _safe_div(tp, tp + fn)
    f = f1_from(p, r)
    flags = [f"precision[{c}]" for c in range(len(tp)) if tp[c] + fp[c] == 0]
    flags += [f"recall[{c}]" for c in range(len(tp)) if tp[c] + fn[c] == 0]
    if averaging == "per-class":
        return PRF(p, r, f, flags)
    if averaging == "macro":
        return PRF(float(p.mean()), float(r.mean()), float(f.mean()), flags)
    if averaging == "weighted":
        w = m.support / m.n
        return PRF(float(w @ p), float(w @ r), float(w @ f), flags)
    raise ValueError(f"unknown averaging {averaging!r}")


@dataclass
class RocCurve:
    points: list

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr"])
            w.writerows(self.points)


def roc_curve(scores, labels):
    """ROC points with one threshold per distinct score (descending)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.shape} vs {labels.shape}")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassOnly()
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    tps = np.cumsum(y == 1)
    fps = np.cumsum(y == 0)
    # keep the last index of each run of equal scores
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tpr = np.r_[0.0, tps[last] / n_pos]
    fpr = np.r_[0.0, fps[last] / n_neg]
    return RocCurve(list(zip(fpr.tolist(), tpr.tolist())))


def trapezoid_area(curve):
    pts = np.asarray(curve.points)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def roc_auc_binary(scores, labels):
    """``(curve, auc)``; tied scores form one diagonal segment, i.e. count 1/2."""
    curve = roc_curve(scores, labels)
    return curve, trapezoid_area(curve)


def _per_class_auc(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"probabilities {probs.shape} vs labels {labels.shape}")
    aucs = []
    for c in range(probs.shape[1]):
        y = (labels == c).astype(np.int64)
        if y.min() == y.max():
            raise SingleClassOnly(c)
        aucs.append(roc_auc_binary(probs[:, c], y)[1])
    return np.array(aucs)


def roc_auc_macro_ovr(probs, labels):
    return float(_per_class_auc(probs, labels).mean())


def roc_auc_weighted_ovr(probs, labels):
    aucs = _per_class_auc(probs, labels)
    support = np.bincount(np.asarray(labels), minlength=len(aucs))
    return float(aucs @ (support / support.sum()))


def roc_auc_micro(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    onehot = np.eye(probs.shape[1], dtype=np.int64)[np.asarray(labels)]
    return roc_auc_binary(probs.ravel(), onehot.ravel())[1]


@dataclass
class EvalReport:
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    auc_macro_ovr: float | None
    precision_macro: float
    recall_macro: float
    f1_macro: float
    auc_micro: float | None
    auc_weighted_ovr: float | None
    per_class: dict
    confusion: list
    n: int
    zero_division: list

    def to_dict(self):
        return asdict(self)


def evaluation_report(y_true, probs):
    """Full metric bundle from true labels and predicted class probabilities.

    AUC fields are ``None`` when some class is missing from ``y_true``.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    m = confusion(y_true, probs.argmax(axis=1), probs.shape[1])
    w = precision_recall_f1(m, "weighted")
    mac = precision_recall_f1(m, "macro")
    pc = precision_recall_f1(m, "per-class")
    try:
        aucs = (roc_auc_macro_ovr(probs, y_true), roc_auc_micro(probs, y_true),
                roc_auc_weighted_ovr(probs, y_true))
    except SingleClassOnly:
        aucs = (None, None, None)
    per_class = {
        name: {"precision": float(pc.precision[c]), "recall": float(pc.recall[c]),
               "f1": float(pc.f1[c]), "support": int(m.support[c])}
        for c, name in enumerate(CLASS_NAMES[:probs.shape[1]])
    }
    return EvalReport(
        accuracy=accuracy(m),
        precision_weighted=w.precision, recall_weighted=w.recall, f1_weighted=w.f1,
        auc_macro_ovr=aucs[0],
        precision_macro=mac.precision, recall_macro=mac.recall, f1_macro=mac.f1,
        auc_micro=aucs[1], auc_weighted_ovr=aucs[2],
        per_class=per_class, confusion=m.counts.tolist(), n=m.n,
        zero_division=w.zero_division,
    )
