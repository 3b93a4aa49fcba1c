"""Classification metrics for imbalanced node classification."""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyMask
from .graph import UNLABELED, LabelVector


def _resolve(pred, truth, mask):
    pred = np.asarray(pred, dtype=np.int64)
    if isinstance(truth, LabelVector):
        num_classes = truth.num_classes
        truth = truth.labels
    else:
        truth = np.asarray(truth, dtype=np.int64)
        num_classes = int(max(truth.max(), pred.max())) + 1
    if mask is None:
        mask = np.ones(len(truth), dtype=bool)
    mask = np.asarray(mask, dtype=bool) & (truth != UNLABELED)
    if not mask.any():
        raise EmptyMask("metric mask selects no labeled nodes")
    return pred[mask], truth[mask], num_classes


def confusion_matrix(pred, truth, mask=None, num_classes=None):
    """cm[i, j] = count of nodes with true class i predicted as j."""
    p, t, inferred = _resolve(pred, truth, mask)
    c = inferred if num_classes is None else num_classes
    cm = np.zeros((c, c), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def f1_per_class(cm: np.ndarray) -> np.ndarray:
    """Per-class F1; a class with no true and no predicted samples scores 0."""
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    return np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(pred, truth, mask=None, num_classes=None) -> float:
    """Unweighted mean F1 over the classes present in the truth."""
    cm = confusion_matrix(pred, truth, mask, num_classes)
    support = cm.sum(axis=1)
    scores = f1_per_class(cm)
    return float(scores[support > 0].mean())


def micro_f1(pred, truth, mask=None) -> float:
    """Micro-averaged F1; equals accuracy for single-label classification."""
    p, t, _ = _resolve(pred, truth, mask)
    return float(np.mean(p == t))


def accuracy(pred, truth, mask=None) -> float:
    p, t, _ = _resolve(pred, truth, mask)
    return float(np.mean(p == t))
