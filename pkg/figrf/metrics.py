"""Binary classification metrics and the composite tuning fitness."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with label 1 as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_table(self) -> list[list[int]]:
        """[[tn, fp], [fn, tp]]: rows are truth, columns are predictions."""
        return [[self.tn, self.fp], [self.fn, self.tp]]

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    fitness: float
    matrix: ConfusionMatrix

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fitness": self.fitness,
            "confusion": self.matrix.to_dict(),
        }

    @classmethod
    def from_matrix(cls, matrix: ConfusionMatrix) -> "MetricReport":
        """Derive every metric from the counts.

        Zero denominators give 0 rather than an error: the tuner has to rank
        candidates that predict a single class.
        """
        tp, fp, tn, fn = matrix.tp, matrix.fp, matrix.tn, matrix.fn
        accuracy = (tp + tn) / matrix.total
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(
            accuracy=accuracy,
            precision=precision,
            recall=recall,
            f1=f1,
            fitness=(accuracy + precision + recall + f1) / 4,
            matrix=matrix,
        )


def confusion_matrix(predictions: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    """Counts of tp, fp, tn, fn for 0/1 predictions against 0/1 truth."""
    predicted = np.asarray(predictions).reshape(-1)
    actual = np.asarray(truth).reshape(-1)
    if predicted.size != actual.size:
        raise ValueError(f"{predicted.size} predictions for {actual.size} labels")
    if predicted.size == 0:
        raise ValueError("cannot evaluate zero predictions")
    for name, values in (("predictions", predicted), ("truth", actual)):
        if not np.isin(values, (0, 1)).all():
            raise ValueError(f"{name} must hold binary labels 0/1")
    positive, predicted_positive = actual == 1, predicted == 1
    return ConfusionMatrix(
        tp=int(np.count_nonzero(positive & predicted_positive)),
        fp=int(np.count_nonzero(~positive & predicted_positive)),
        tn=int(np.count_nonzero(~positive & ~predicted_positive)),
        fn=int(np.count_nonzero(positive & ~predicted_positive)),
    )


def evaluate(predictions: np.ndarray, truth: np.ndarray) -> MetricReport:
    """Accuracy, precision, recall, F1 and fitness in one report."""
    return MetricReport.from_matrix(confusion_matrix(predictions, truth))
