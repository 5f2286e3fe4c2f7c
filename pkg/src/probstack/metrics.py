"""Evaluation metrics: accuracy, macro precision/recall/F1, confusion matrix.

Conventions: 0/0 ratios are 0, macro means run over the full label space
(classes absent from the sample still count), and Prec/Rec are macro
averages. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (k, k) int64, rows = true class, columns = predicted

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalReport:
    config: str
    acc: float
    f_macro: float
    prec: float
    rec: float
    per_class: tuple[tuple[float, float, float], ...]  # (precision, recall, f1) per class
    confusion: ConfusionMatrix

    def summary(self) -> dict[str, float]:
        return {"acc": self.acc, "f_macro": self.f_macro, "prec": self.prec, "rec": self.rec}

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "acc": self.acc,
            "f_macro": self.f_macro,
            "prec": self.prec,
            "rec": self.rec,
            "per_class": [list(pc) for pc in self.per_class],
            "confusion": self.confusion.counts.tolist(),
            "averaging": "macro",
        }


def _check_pair(y_true, y_pred, k: int) -> tuple[np.ndarray, np.ndarray]:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.ndim != 1 or y_pred.ndim != 1 or y_true.size != y_pred.size:
        raise ValidationError(f"y_true and y_pred must be equal-length vectors, got {y_true.shape} and {y_pred.shape}")
    if y_true.size == 0:
        raise ValidationError("cannot evaluate zero examples")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= k:
            raise ValidationError(f"{name} has class indices outside [0, {k})")
    return y_true, y_pred


def confusion(y_true, y_pred, k: int) -> ConfusionMatrix:
    """counts[t][p] = number of examples with true class t predicted as p."""
    y_true, y_pred = _check_pair(y_true, y_pred, k)
    counts = np.bincount(y_true * k + y_pred, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def evaluate(y_true, y_pred, k: int, config: str = "") -> EvalReport:
    """Full evaluation report for one configuration."""
    cm = confusion(y_true, y_pred, k)
    counts = cm.counts
    per_class = []
    for c in range(k):
        tp = float(counts[c, c])
        precision = _ratio(tp, float(counts[:, c].sum()))
        recall = _ratio(tp, float(counts[c, :].sum()))
        f1 = _ratio(2.0 * precision * recall, precision + recall)
        per_class.append((precision, recall, f1))
    acc = float(np.trace(counts)) / float(counts.sum())
    prec = sum(pc[0] for pc in per_class) / k
    rec = sum(pc[1] for pc in per_class) / k
    f_macro = sum(pc[2] for pc in per_class) / k
    return EvalReport(config, acc, f_macro, prec, rec, tuple(per_class), cm)
