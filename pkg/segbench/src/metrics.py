"""Confusion matrices, overall / mean class-wise accuracy and the pixel-weighted running loss."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, DimensionError, UndefinedMetricError


class Phase(str, Enum):
    TRAIN = "train"
    TEST = "test"

    @property
    def order(self):
        return 0 if self is Phase.TRAIN else 1


@dataclass(frozen=True)
class MetricRecord:
    run_id: str
    optimizer: str
    epoch: int
    phase: Phase
    loss: float
    overall_acc: float
    mean_class_acc: float

    def sort_key(self):
        return self.run_id, self.epoch, Phase(self.phase).order


class ConfusionMatrix:
    """Rows are true classes, columns predicted classes. Pixels of ``background`` are skipped."""

    def __init__(self, num_classes, background=None):
        if background is not None and not 0 <= background < num_classes:
            raise DataError(f"background index {background} outside [0, {num_classes})")
        self.num_classes = num_classes
        self.background = background
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    @classmethod
    def from_counts(cls, counts, background=None):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DimensionError(f"confusion counts must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise DataError("confusion counts must be non-negative")
        cm = cls(counts.shape[0], background)
        cm.counts = counts.copy()
        return cm

    @property
    def total(self):
        return int(self.counts.sum())

    def accumulate(self, true_labels, predicted_labels):
        true_labels = np.asarray(true_labels)
        predicted_labels = np.asarray(predicted_labels)
        if true_labels.shape != predicted_labels.shape:
            raise DimensionError(
                f"label maps differ in shape: {true_labels.shape} vs {predicted_labels.shape}"
            )
        k = self.num_classes
        for name, labels in (("true", true_labels), ("predicted", predicted_labels)):
            if labels.size and (labels.min() < 0 or labels.max() >= k):
                raise DataError(f"{name} label outside [0, {k})")
        true_labels = true_labels.ravel().astype(np.int64)
        predicted_labels = predicted_labels.ravel().astype(np.int64)
        if self.background is not None:
            keep = true_labels != self.background
            true_labels, predicted_labels = true_labels[keep], predicted_labels[keep]
        self.counts += np.bincount(true_labels * k + predicted_labels, minlength=k * k).reshape(k, k)
        return self

    def merge(self, other):
        if other.num_classes != self.num_classes or other.background != self.background:
            raise DimensionError("cannot merge confusion matrices with different class setups")
        return ConfusionMatrix.from_counts(self.counts + other.counts, self.background)


def overall_accuracy(cm):
    total = cm.total
    if total == 0:
        raise UndefinedMetricError("overall accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / total)


def mean_class_accuracy(cm):
    """Mean per-class recall over the classes that occur; absent classes are left out."""
    rows = cm.counts.sum(axis=1)
    present = rows > 0
    if not present.any():
        raise UndefinedMetricError("mean class-wise accuracy with no labeled pixels")
    recall = np.diag(cm.counts)[present] / rows[present]
    return float(recall.mean())


class RunningLoss:
    """Pixel-weighted mean of per-pixel losses; exact summation keeps it independent of add order."""

    def __init__(self):
        self._weighted = []
        self._pixels = 0

    def add(self, loss_value, pixel_count):
        if pixel_count <= 0:
            raise DataError(f"pixel_count must be > 0, got {pixel_count}")
        self._weighted.append(float(loss_value) * pixel_count)
        self._pixels += int(pixel_count)

    @property
    def pixels(self):
        return self._pixels

    def mean(self):
        if not self._pixels:
            raise UndefinedMetricError("running loss has no samples")
        return math.fsum(self._weighted) / self._pixels


def running_loss():
    return RunningLoss()
