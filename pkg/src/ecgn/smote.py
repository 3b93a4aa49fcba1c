"""Synthetic minority-node generation in the latent embedding space.

Seeds are the minority nodes with the highest boundary connectivity; each
synthetic node interpolates between a seed and its nearest same-class
training neighbor in embedding space, inherits all of the seed's original
edges plus an edge to the seed, and joins the seed's cluster as a
train-masked node. Synthetic counts are capped below half the largest
training class so the majority is never swamped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (
    CapExceeded,
    ClassEmpty,
    NothingToAugment,
    ShapeError,
    SingletonClass,
)
from .graph import (
    UNLABELED,
    Graph,
    LabelVector,
    NodeMaskSet,
    add_node_with_edges,
)
from .partition import ClusterAssignment
from .validation import as_feature_matrix

logger = logging.getLogger(__name__)

CONNECTIVITY_MODES = ("out_of_class", "out_of_cluster")


@dataclass(frozen=True)
class SmoteConfig:
    """Oversampling amounts are given either as a ratio ``alpha`` of the
    class's training count, or as an explicit final per-class training count
    ``target_per_class`` (scalar or class-id -> count mapping)."""

    alpha: float | None = None
    target_per_class: object = None
    seed_count_k: int | None = None
    connectivity_mode: str = "out_of_class"
    minority_classes: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if (self.alpha is None) == (self.target_per_class is None):
            raise ShapeError("give exactly one of alpha or target_per_class")
        if self.alpha is not None and self.alpha <= 0:
            raise ShapeError("alpha must be positive")
        if self.connectivity_mode not in CONNECTIVITY_MODES:
            raise ShapeError(f"unknown connectivity mode {self.connectivity_mode!r}")
        if not self.minority_classes:
            raise ShapeError("minority_classes must be non-empty")
        object.__setattr__(
            self, "minority_classes", tuple(sorted(set(self.minority_classes)))
        )


@dataclass(frozen=True)
class SynthOrigin:
    synth_id: int
    seed_id: int
    neighbor_id: int
    delta: float
    class_id: int


@dataclass
class AugmentationResult:
    graph: Graph
    embeddings: np.ndarray
    labels: LabelVector
    masks: NodeMaskSet
    assignment: ClusterAssignment
    origins: list
    num_original: int

    @property
    def num_synthetic(self) -> int:
        return len(self.origins)


def _train_mask_of(masks) -> np.ndarray:
    return masks.train if isinstance(masks, NodeMaskSet) else np.asarray(masks, dtype=bool)


def connectivity_scores(g: Graph, labels, assignment: ClusterAssignment | None,
                        class_id: int, mode: str = "out_of_class",
                        train_mask=None):
    """Boundary connectivity of each class member: the number of neighbors
    outside the class (or outside the node's cluster).

    Returns (node_ids, scores) restricted to training nodes of the class.
    Unlabeled neighbors count as out-of-class.
    """
    y = labels.labels if isinstance(labels, LabelVector) else np.asarray(labels)
    members = y == class_id
    if train_mask is not None:
        members &= np.asarray(train_mask, dtype=bool)
    ids = np.flatnonzero(members)
    if ids.size == 0:
        raise ClassEmpty(f"no training nodes of class {class_id}")
    if mode not in CONNECTIVITY_MODES:
        raise ShapeError(f"unknown connectivity mode {mode!r}")
    scores = np.empty(ids.size, dtype=np.int64)
    for i, v in enumerate(ids):
        nbrs = g.neighbors(v)
        if mode == "out_of_class":
            scores[i] = int(np.count_nonzero(y[nbrs] != class_id))
        else:
            if assignment is None:
                raise ShapeError("out_of_cluster scoring needs a cluster assignment")
            scores[i] = int(
                np.count_nonzero(assignment.cluster_of[nbrs] != assignment.cluster_of[v])
            )
    return ids, scores


def select_seeds(ids, scores, k: int) -> np.ndarray:
    """The k highest-score nodes (all of them if fewer); ties -> lowest id."""
    if k < 1:
        raise ShapeError("need at least one seed")
    ids = np.asarray(ids)
    order = np.lexsort((ids, -np.asarray(scores)))
    return ids[order[:k]]


def nearest_same_class(h, labels, masks, v: int) -> int:
    """Euclidean-nearest same-class training node != v; ties -> lowest id."""
    y = labels.labels if isinstance(labels, LabelVector) else np.asarray(labels)
    train = _train_mask_of(masks)
    candidates = np.flatnonzero((y == y[v]) & train)
    candidates = candidates[candidates != v]
    if candidates.size == 0:
        raise SingletonClass(f"node {v} is the only training node of class {y[v]}")
    h = np.asarray(h)
    dists = np.linalg.norm(h[candidates] - h[v], axis=1)
    return int(candidates[np.argmin(dists)])


def synthesize(h, v: int, u: int, delta: float) -> np.ndarray:
    """Convex combination (1 - delta) * h[v] + delta * h[u]."""
    if not 0.0 <= delta <= 1.0:
        raise ShapeError("delta must lie in [0, 1]")
    h = np.asarray(h)
    return (1.0 - delta) * h[v] + delta * h[u]


def _synthetic_count(cfg: SmoteConfig, class_id: int, train_count: int) -> int:
    if cfg.alpha is not None:
        return int(np.floor(cfg.alpha * train_count + 0.5))
    target = cfg.target_per_class
    if isinstance(target, dict):
        target = target.get(class_id, train_count)
    return max(int(target) - train_count, 0)


def plan_synthetics(g: Graph, h, labels: LabelVector, masks: NodeMaskSet,
                    assignment: ClusterAssignment | None, cfg: SmoteConfig,
                    seed_ids_by_class: dict | None = None) -> list:
    """Decide (seed, neighbor, delta, class) for every synthetic node.

    ``seed_ids_by_class`` overrides boundary-connectivity seed selection,
    which the feature-space baselines use for random seeds. Deterministic:
    classes are processed in ascending order with per-class RNG streams.
    """
    y = labels.labels
    train = masks.train & (y != UNLABELED)
    train_counts = np.bincount(y[train], minlength=labels.num_classes)
    majority = int(train_counts.max())
    records = []
    skipped = 0
    next_id = g.num_nodes
    for class_id in cfg.minority_classes:
        n_train = int(train_counts[class_id])
        if n_train == 0:
            raise ClassEmpty(f"no training nodes of class {class_id}")
        n_syn = _synthetic_count(cfg, class_id, n_train)
        if n_syn == 0:
            continue
        if n_syn >= 0.5 * majority:
            raise CapExceeded(
                f"class {class_id}: {n_syn} synthetic nodes would reach half "
                f"the majority training size {majority}"
            )
        if n_train < 2:
            logger.warning(
                "class %d has a single training node; skipping its seeds", class_id
            )
            skipped += 1
            continue
        if seed_ids_by_class is not None:
            seeds = np.asarray(seed_ids_by_class[class_id])
        else:
            ids, scores = connectivity_scores(
                g, labels, assignment, class_id, cfg.connectivity_mode, train
            )
            k = cfg.seed_count_k if cfg.seed_count_k is not None else min(10, n_train)
            seeds = select_seeds(ids, scores, k)
        rng = np.random.default_rng([cfg.seed, class_id])
        for j in range(n_syn):
            v = int(seeds[j % len(seeds)])
            u = nearest_same_class(h, labels, masks, v)
            delta = float(rng.random())
            records.append(SynthOrigin(next_id, v, u, delta, class_id))
            next_id += 1
    if not records:
        raise NothingToAugment("every minority class was empty or singleton")
    return records


def apply_synthetics(g: Graph, h, labels: LabelVector, masks: NodeMaskSet,
                     assignment: ClusterAssignment | None, records: list,
                     features=None) -> AugmentationResult:
    """Attach planned synthetic nodes: inherited edges, labels, masks, rows.

    Edge inheritance always reads the original graph, so every synthetic
    node ends up adjacent to exactly its seed's original neighbors plus the
    seed itself.
    """
    h = as_feature_matrix(h, g.num_nodes) if features is None else as_feature_matrix(features, g.num_nodes)
    n = g.num_nodes
    g_aug = g
    rows = [h]
    for rec in records:
        nbrs = np.append(g.neighbors(rec.seed_id), rec.seed_id)
        g_aug = add_node_with_edges(g_aug, nbrs)
        rows.append(synthesize(h, rec.seed_id, rec.neighbor_id, rec.delta)[None, :])
    s = len(records)
    labels_aug = LabelVector(
        np.concatenate([labels.labels, [r.class_id for r in records]]),
        labels.num_classes,
    )
    masks_aug = NodeMaskSet(
        train=np.concatenate([masks.train, np.ones(s, dtype=bool)]),
        val=np.concatenate([masks.val, np.zeros(s, dtype=bool)]),
        test=np.concatenate([masks.test, np.zeros(s, dtype=bool)]),
    )
    assignment_aug = None
    if assignment is not None:
        cluster_ids = assignment.cluster_of[[r.seed_id for r in records]]
        assignment_aug = ClusterAssignment(
            np.concatenate([assignment.cluster_of, cluster_ids]),
            assignment.num_clusters,
        )
    return AugmentationResult(
        graph=g_aug,
        embeddings=np.concatenate(rows, axis=0),
        labels=labels_aug,
        masks=masks_aug,
        assignment=assignment_aug,
        origins=records,
        num_original=n,
    )


def augment(g: Graph, h, labels: LabelVector, masks: NodeMaskSet,
            assignment: ClusterAssignment | None, cfg: SmoteConfig) -> AugmentationResult:
    """Full cluster-aware oversampling pass; see the module docstring."""
    h = as_feature_matrix(h, g.num_nodes)
    records = plan_synthetics(g, h, labels, masks, assignment, cfg)
    return apply_synthetics(g, h, labels, masks, assignment, records)


class ClusterAwareSmote(BaseEstimator):
    """Estimator wrapper exposing ``fit_resample`` over :func:`augment`."""

    def __init__(self, alpha=None, target_per_class=None, seed_count_k=None,
                 connectivity_mode="out_of_class", minority_classes=(),
                 random_state=0):
        self.alpha = alpha
        self.target_per_class = target_per_class
        self.seed_count_k = seed_count_k
        self.connectivity_mode = connectivity_mode
        self.minority_classes = minority_classes
        self.random_state = random_state

    def _config(self) -> SmoteConfig:
        return SmoteConfig(
            alpha=self.alpha,
            target_per_class=self.target_per_class,
            seed_count_k=self.seed_count_k,
            connectivity_mode=self.connectivity_mode,
            minority_classes=tuple(self.minority_classes),
            seed=self.random_state,
        )

    def fit_resample(self, graph, embeddings, labels, masks, assignment=None):
        result = augment(graph, embeddings, labels, masks, assignment, self._config())
        self.result_ = result
        return result
