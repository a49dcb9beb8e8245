"""Classification metrics and confusion matrices for engagement levels.

Binary problems report accuracy, precision, recall, and F1 with the positive
class fixed to label 1 ("engaged"); 0/0 ratios are reported as 0 with a
warning. Multi-level problems report accuracy only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LabelOutOfRange, LengthMismatch


@dataclass
class EvalResult:
    num_levels: int
    n: int
    accuracy: float
    confusion: np.ndarray                 # rows = true level, cols = predicted
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None

    def to_dict(self) -> dict:
        out = {"num_levels": self.num_levels, "n": self.n, "accuracy": self.accuracy,
               "confusion": self.confusion.tolist()}
        if self.num_levels == 2:
            out.update(precision=self.precision, recall=self.recall, f1=self.f1)
        return out


def _ratio(num: float, den: float, what: str) -> float:
    if den == 0:
        warnings.warn(f"{what} undefined (0/0); reporting 0")
        return 0.0
    return num / den


def evaluate(y_true, y_pred, num_levels: int) -> EvalResult:
    """Confusion matrix and headline metrics for predicted levels."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.ndim != 1 or t.shape != p.shape:
        raise LengthMismatch(f"true/pred shapes differ: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise LengthMismatch("no samples to evaluate")
    for name, arr in (("true", t), ("pred", p)):
        if arr.min() < 0 or arr.max() >= num_levels:
            raise LabelOutOfRange(f"{name} labels outside [0, {num_levels - 1}]")
    confusion = np.bincount(t * num_levels + p, minlength=num_levels * num_levels)
    confusion = confusion.reshape(num_levels, num_levels)
    accuracy = float(np.trace(confusion)) / t.size
    result = EvalResult(num_levels=num_levels, n=int(t.size), accuracy=accuracy,
                        confusion=confusion)
    if num_levels == 2:
        tp = float(confusion[1, 1])
        fp = float(confusion[0, 1])
        fn = float(confusion[1, 0])
        result.precision = _ratio(tp, tp + fp, "precision")
        result.recall = _ratio(tp, tp + fn, "recall")
        result.f1 = _ratio(2.0 * result.precision * result.recall,
                           result.precision + result.recall, "F1")
    return result
