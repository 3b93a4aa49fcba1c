"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import EmptyMask, ShapeError
from .graph import UNLABELED, Graph, LabelVector, NodeMaskSet


def check_graph(g: Graph) -> None:
    """Verify the full CSR invariant set; raises ShapeError on violation."""
    n = g.num_nodes
    if g.col_indices.size and (g.col_indices.min() < 0 or g.col_indices.max() >= n):
        raise ShapeError("col_indices out of range")
    src = g.edge_sources()
    if np.any(src == g.col_indices):
        raise ShapeError("self-loops are not allowed")
    for v in range(n):
        row = g.neighbors(v)
        if row.size > 1 and np.any(np.diff(row) <= 0):
            raise ShapeError(f"neighbor list of node {v} not strictly increasing")
    if g.undirected:
        fwd = src * np.int64(max(n, 1)) + g.col_indices
        rev = g.col_indices * np.int64(max(n, 1)) + src
        if not np.array_equal(np.sort(fwd), np.sort(rev)):
            raise ShapeError("adjacency of an undirected graph must be symmetric")


def as_feature_matrix(x, num_rows: int | None = None) -> np.ndarray:
    """Coerce to a C-contiguous float64 (n, d) matrix with finite entries."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got ndim={x.ndim}")
    if num_rows is not None and x.shape[0] != num_rows:
        raise ShapeError(f"feature matrix has {x.shape[0]} rows, expected {num_rows}")
    if not np.all(np.isfinite(x)):
        raise ShapeError("feature matrix contains non-finite values")
    return x


def as_label_vector(y, num_nodes: int, num_classes: int | None = None) -> LabelVector:
    """Coerce labels (array or LabelVector) to a validated LabelVector."""
    if isinstance(y, LabelVector):
        labels = y.labels
        num_classes = y.num_classes if num_classes is None else num_classes
    else:
        labels = np.asarray(y, dtype=np.int64)
    if labels.shape != (num_nodes,):
        raise ShapeError(f"labels must have shape ({num_nodes},), got {labels.shape}")
    if num_classes is None:
        known = labels[labels != UNLABELED]
        if known.size == 0:
            raise ShapeError("cannot infer num_classes from fully unlabeled data")
        num_classes = int(known.max()) + 1
    return LabelVector(labels=labels, num_classes=num_classes)


def check_masks(masks: NodeMaskSet, labels: LabelVector) -> None:
    """Masked nodes must be labeled; lengths must match the label vector."""
    n = len(labels)
    if len(masks.train) != n:
        raise ShapeError(f"masks cover {len(masks.train)} nodes, labels cover {n}")
    covered = masks.train | masks.val | masks.test
    if np.any(labels.labels[covered] == UNLABELED):
        raise ShapeError("every masked node must carry a label")


def require_nonempty_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask(f"{name} selects no nodes")
    return mask
