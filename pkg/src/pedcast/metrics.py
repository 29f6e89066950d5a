"""Evaluation metrics: displacement errors, accuracy, Cohen's kappa, and
relative improvement percentages."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError

#: Guard added to relative-metric denominators.
REL_EPSILON = 1e-8


def _paths(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DataError("paths must have shape (N, T, 2)")
    return arr


def per_sample_ade(actuals, preds) -> np.ndarray:
    """Mean pointwise Euclidean distance per trajectory, shape (N,)."""
    a, p = _paths(actuals), _paths(preds)
    if a.shape != p.shape:
        raise DataError(f"shape mismatch: {a.shape} vs {p.shape}")
    return np.linalg.norm(a - p, axis=2).mean(axis=1)


def per_sample_fde(actuals, preds) -> np.ndarray:
    """Final-point Euclidean distance per trajectory, shape (N,)."""
    a, p = _paths(actuals), _paths(preds)
    if a.shape != p.shape:
        raise DataError(f"shape mismatch: {a.shape} vs {p.shape}")
    return np.linalg.norm(a[:, -1, :] - p[:, -1, :], axis=1)


def ade(actuals, preds) -> float:
    """Average displacement error over all trajectories and timesteps."""
    return float(per_sample_ade(actuals, preds).mean())


def fde(actuals, preds) -> float:
    """Mean distance between actual and predicted final points."""
    return float(per_sample_fde(actuals, preds).mean())


@dataclass
class ConfusionMatrix:
    """K x K counts; rows are actual classes, columns predicted."""

    cm: np.ndarray

    def __post_init__(self):
        self.cm = np.asarray(self.cm, dtype=np.int64)
        if self.cm.ndim != 2 or self.cm.shape[0] != self.cm.shape[1]:
            raise DataError("confusion matrix must be square")
        if np.any(self.cm < 0):
            raise DataError("confusion matrix counts must be non-negative")

    @classmethod
    def from_labels(cls, actual: Sequence[int], predicted: Sequence[int], K: int) -> "ConfusionMatrix":
        actual = np.asarray(actual, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if actual.shape != predicted.shape:
            raise DataError("actual/predicted length mismatch")
        if actual.size == 0:
            raise DataError("no samples")
        cm = np.zeros((K, K), dtype=np.int64)
        np.add.at(cm, (actual, predicted), 1)
        return cls(cm)

    @property
    def total(self) -> int:
        return int(self.cm.sum())


def accuracy_and_kappa(cm: ConfusionMatrix) -> tuple[float, float, bool]:
    """Classification accuracy and Cohen's kappa from a confusion matrix.

    Returns (acc, kappa, degenerate). When all mass sits in a single
    actual x predicted cell the kappa denominator vanishes; kappa is then
    defined as 0 and the degenerate flag is set.
    """
    n = cm.total
    if n == 0:
        raise DataError("empty confusion matrix")
    diag = int(np.trace(cm.cm))
    acc = diag / n
    actual_totals = cm.cm.sum(axis=1)
    pred_totals = cm.cm.sum(axis=0)
    chance = int(np.dot(actual_totals, pred_totals))
    denom = n * n - chance
    if denom == 0:
        return acc, 0.0, True
    return acc, (n * diag - chance) / denom, False


def relative_metric(d: float, d_ref: float, m: int) -> float:
    """Relative improvement in percent against a reference value.

    ``m=0`` for metrics where larger is better (accuracy, kappa), ``m=1``
    for losses where smaller is better (ADE, FDE).
    """
    if m not in (0, 1):
        raise DataError("m must be 0 or 1")
    return (d - d_ref) * (-1.0) ** m / (d_ref + REL_EPSILON) * 100.0


@dataclass
class MetricsReport:
    """Bundle of evaluation metrics for one model run."""

    ade: float
    fde: float
    acc: float
    kappa: float
    kappa_degenerate: bool
    n_samples: int
    per_class_actual: list[int] = field(default_factory=list)

    @classmethod
    def from_results(cls, actual_labels, predicted_labels, K, actual_paths, predicted_paths):
        cm = ConfusionMatrix.from_labels(actual_labels, predicted_labels, K)
        acc, kappa, degenerate = accuracy_and_kappa(cm)
        return cls(
            ade=ade(actual_paths, predicted_paths),
            fde=fde(actual_paths, predicted_paths),
            acc=acc,
            kappa=kappa,
            kappa_degenerate=degenerate,
            n_samples=cm.total,
            per_class_actual=[int(v) for v in cm.cm.sum(axis=1)],
        )

    def relative_to(self, ref: "MetricsReport") -> dict[str, float]:
        """Relative percentages against a reference run; accuracy and kappa
        compared on their percent values, errors on raw metres."""
        return {
            "r_acc": relative_metric(self.acc * 100.0, ref.acc * 100.0, 0),
            "r_kappa": relative_metric(self.kappa * 100.0, ref.kappa * 100.0, 0),
            "r_ade": relative_metric(self.ade, ref.ade, 1),
            "r_fde": relative_metric(self.fde, ref.fde, 1),
        }

    def to_dict(self) -> dict:
        return {
            "ade": self.ade,
            "fde": self.fde,
            "acc": self.acc,
            "kappa": self.kappa,
            "kappa_degenerate": self.kappa_degenerate,
            "n_samples": self.n_samples,
            "per_class_actual": self.per_class_actual,
        }
