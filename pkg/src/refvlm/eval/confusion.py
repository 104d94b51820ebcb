"""Confusion matrices and the two headline classification metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


class EmptyMatrixError(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    """K x K integer counts; rows are ground truth, columns are predictions."""

    class_names: Tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        k = len(self.class_names)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k}, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_pairs(cls, class_names: Sequence[str], gt: Sequence[int], pred: Sequence[int]) -> "ConfusionMatrix":
        k = len(class_names)
        counts = np.zeros((k, k), dtype=np.int64)
        for g, p in zip(gt, pred):
            counts[int(g), int(p)] += 1
        return cls(tuple(class_names), counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, gt: int, pred: int) -> None:
        self.counts[int(gt), int(pred)] += 1


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total."""
    total = cm.total
    if total == 0:
        raise EmptyMatrixError("cannot compute accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts)) / total


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Mean per-class recall over classes with at least one ground-truth sample.

    Classes whose ground-truth row is empty are excluded from the mean.
    """
    row_sums = cm.counts.sum(axis=1)
    present = row_sums > 0
    if not present.any():
        raise EmptyMatrixError("cannot compute balanced accuracy: every ground-truth row is empty")
    recalls = np.diag(cm.counts)[present] / row_sums[present]
    return float(recalls.mean())


@dataclass
class MetricsReport:
    """Per-task accuracy/balanced-accuracy plus the evaluation bookkeeping."""

    task: str  # "foul_type" | "severity"
    accuracy: float
    balanced_accuracy: float
    confusion: ConfusionMatrix
    n_evaluated: int
    n_extraction_failures: int = 0

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0 and 0.0 <= self.balanced_accuracy <= 1.0):
            raise ValueError("accuracy values must lie in [0, 1]")

    @property
    def n_attempted(self) -> int:
        return self.n_evaluated + self.n_extraction_failures
