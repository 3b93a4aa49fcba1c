"""Softmax cross-entropy with the class-weighting schemes used in training.

All losses reduce to sum_j w_j * CE_j over masked nodes, where the per-node
multipliers w_j encode the chosen weighting scheme. ``uniform``,
``inverse_freq`` and ``effective_number`` normalize to a weighted mean;
``balanced_cluster`` adds the plain means of the minority and majority
groups so each group contributes equally regardless of its size.
"""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyMask, ShapeError
from .graph import UNLABELED

WEIGHT_MODES = ("uniform", "inverse_freq", "effective_number", "balanced_cluster")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def node_loss_weights(labels, mask, mode="uniform", en_beta=0.9999,
                      minority_classes=None) -> np.ndarray:
    """Per-node loss multipliers; zero outside the mask."""
    y = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool) & (y != UNLABELED)
    if not mask.any():
        raise EmptyMask("loss mask selects no labeled nodes")
    if mode not in WEIGHT_MODES:
        raise ShapeError(f"unknown weight mode {mode!r}")
    w = np.zeros(len(y))
    idx = np.flatnonzero(mask)
    if mode == "uniform":
        w[idx] = 1.0 / idx.size
        return w
    if mode == "balanced_cluster":
        if not minority_classes:
            raise ShapeError("balanced_cluster weighting needs minority_classes")
        minority = np.isin(y[idx], list(minority_classes))
        for group in (minority, ~minority):
            if group.any():
                w[idx[group]] = 1.0 / group.sum()
        return w
    counts = np.bincount(y[idx])
    class_w = np.zeros(len(counts))
    present = counts > 0
    if mode == "inverse_freq":
        class_w[present] = 1.0 / counts[present]
    else:  # effective_number
        class_w[present] = (1.0 - en_beta) / (1.0 - en_beta ** counts[present])
    per_node = class_w[y[idx]]
    w[idx] = per_node / per_node.sum()
    return w


def cross_entropy(logits, labels, mask, node_weights=None) -> float:
    """Weighted softmax cross-entropy over masked nodes."""
    loss, _ = loss_and_logit_grad(logits, labels, mask, node_weights)
    return loss


def loss_and_logit_grad(logits, labels, mask, node_weights=None):
    """Loss value and its exact gradient with respect to the logits."""
    y = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool) & (y != UNLABELED)
    if not mask.any():
        raise EmptyMask("loss mask selects no labeled nodes")
    if node_weights is None:
        node_weights = node_loss_weights(y, mask)
    w = np.asarray(node_weights, dtype=np.float64)
    idx = np.flatnonzero(w != 0.0)
    logp = log_softmax(logits[idx])
    loss = float(-(w[idx] * logp[np.arange(idx.size), y[idx]]).sum())
    grad = np.zeros_like(logits)
    p = np.exp(logp)
    p[np.arange(idx.size), y[idx]] -= 1.0
    grad[idx] = w[idx][:, None] * p
    return loss, grad
