"""Binary classification metrics with fraud (label 1) as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QcScreenError


class LengthMismatchError(QcScreenError):
    pass


class EmptyInputError(QcScreenError):
    pass


class SingleClassInputError(QcScreenError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvalReport:
    precision_fraud: float
    recall_fraud: float
    f1_fraud: float
    precision_nonfraud: float
    recall_nonfraud: float
    f1_nonfraud: float
    accuracy: float
    macro_f1: float
    roc_auc: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "per_class": {
                "fraud": {
                    "precision": self.precision_fraud,
                    "recall": self.recall_fraud,
                    "f1": self.f1_fraud,
                },
                "non_fraud": {
                    "precision": self.precision_nonfraud,
                    "recall": self.recall_nonfraud,
                    "f1": self.f1_nonfraud,
                },
            },
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "roc_auc": self.roc_auc,
            "threshold": self.threshold,
        }


def confusion(probs, labels, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions at the threshold; a probability equal to the
    threshold counts as positive."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.shape != labels.shape:
        raise LengthMismatchError(f"{probs.shape} scores vs {labels.shape} labels")
    pred = probs >= threshold
    truth = labels == 1
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    return ConfusionCounts(tp, fp, tn, fn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    # 0/0 is defined as 0 so degenerate classifiers stay scoreable
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def macro_f1(counts: ConfusionCounts) -> float:
    """Mean of the fraud and non-fraud F1 scores."""
    if counts.total == 0:
        raise EmptyInputError("no samples")
    _, _, f1_pos = _prf(counts.tp, counts.fp, counts.fn)
    _, _, f1_neg = _prf(counts.tn, counts.fn, counts.fp)
    return 0.5 * (f1_pos + f1_neg)


def roc_auc(probs, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with midrank tie handling."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.shape != labels.shape:
        raise LengthMismatchError(f"{probs.shape} scores vs {labels.shape} labels")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInputError("both classes must be present")
    order = np.argsort(probs, kind="stable")
    ranks = np.empty(len(probs))
    sorted_probs = probs[order]
    i = 0
    while i < len(sorted_probs):
        j = i
        while j + 1 < len(sorted_probs) and sorted_probs[j + 1] == sorted_probs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = float(np.sum(ranks[labels == 1]))
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def evaluate(probs, labels, threshold: float = 0.5) -> EvalReport:
    """Full report: per-class precision/recall/F1, accuracy, macro-F1, AUC."""
    counts = confusion(probs, labels, threshold)
    if counts.total == 0:
        raise EmptyInputError("no samples")
    p_pos, r_pos, f1_pos = _prf(counts.tp, counts.fp, counts.fn)
    p_neg, r_neg, f1_neg = _prf(counts.tn, counts.fn, counts.fp)
    accuracy = (counts.tp + counts.tn) / counts.total
    labels_arr = np.asarray(labels, dtype=int)
    if np.all(labels_arr == labels_arr[0]):
        auc = 0.5  # undefined with one class; reported as chance level
    else:
        auc = roc_auc(probs, labels)
    return EvalReport(
        precision_fraud=p_pos,
        recall_fraud=r_pos,
        f1_fraud=f1_pos,
        precision_nonfraud=p_neg,
        recall_nonfraud=r_neg,
        f1_nonfraud=f1_neg,
        accuracy=accuracy,
        macro_f1=0.5 * (f1_pos + f1_neg),
        roc_auc=auc,
        threshold=threshold,
    )
