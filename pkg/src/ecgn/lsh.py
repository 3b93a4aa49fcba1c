"""Feature-space clustering via locality-sensitive hashing.

Rows are hashed by the signs of sparse random projections in several
independent tables; rows that share a bucket in any table are merged with a
union-find pass, and the preliminary clusters are refined by cosine
similarity to their centroids. Small clusters are absorbed into the
nearest-centroid cluster, so the final assignment is total and unique.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ShapeError
from .partition import ClusterAssignment
from .validation import as_feature_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LshConfig:
    num_tables: int = 8
    num_projections: int = 16
    similarity_threshold: float = 0.5
    min_cluster_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.num_tables < 1 or self.num_projections < 1:
            raise ShapeError("need at least one table and one projection")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ShapeError("similarity_threshold must lie in [-1, 1]")


def sparse_projection_matrix(dim: int, num_projections: int, rng: np.random.Generator) -> np.ndarray:
    """Sparse random projection with entries in {-1, 0, +1}.

    Nonzeros appear with density 1/sqrt(dim) and are scaled so projected
    squared norms are preserved in expectation.
    """
    density = 1.0 / np.sqrt(dim)
    scale = np.sqrt(1.0 / (density * num_projections))
    u = rng.random((dim, num_projections))
    signs = np.where(rng.random((dim, num_projections)) < 0.5, -1.0, 1.0)
    return np.where(u < density, signs * scale, 0.0)


def hash_keys(x: np.ndarray, projection: np.ndarray) -> np.ndarray:
    """Sign pattern of each row's projection, packed into bytes per row."""
    bits = (x @ projection) > 0
    return np.packbits(bits, axis=1)


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # lower root wins, keeping labels reproducible
            if ri < rj:
                self.parent[rj] = ri
            else:
                self.parent[ri] = rj


def _relabel_dense(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel to 0..k-1 ordered by each cluster's lowest member id."""
    uniq, dense = np.unique(labels, return_inverse=True)
    order = np.full(uniq.size, -1, dtype=np.int64)
    first_member = np.full(uniq.size, labels.size, dtype=np.int64)
    for i in range(labels.size - 1, -1, -1):
        first_member[dense[i]] = i
    rank = np.argsort(first_member, kind="stable")
    order[rank] = np.arange(uniq.size)
    return order[dense], uniq.size


def _centroids(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return sums / np.maximum(counts, 1.0)[:, None]


def _cosine_to_centroids(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    xn = np.linalg.norm(x, axis=1, keepdims=True)
    cn = np.linalg.norm(centroids, axis=1, keepdims=True)
    denom = np.maximum(xn, 1e-150) @ np.maximum(cn, 1e-150).T
    return (x @ centroids.T) / denom


def lsh_cluster(x, cfg: LshConfig = LshConfig()) -> ClusterAssignment:
    """Cluster rows of a feature matrix; every row gets exactly one cluster.

    Zero rows cannot be compared by cosine similarity, so they keep their
    hash-derived cluster and are reported in the log.
    """
    x = as_feature_matrix(x)
    n, dim = x.shape
    if n == 0:
        raise ShapeError("cannot cluster an empty feature matrix")
    rng = np.random.default_rng(cfg.seed)
    uf = _UnionFind(n)
    for _ in range(cfg.num_tables):
        projection = sparse_projection_matrix(dim, cfg.num_projections, rng)
        keys = hash_keys(x, projection)
        # group rows sharing a byte-packed key; union each bucket to its
        # lowest member
        view = keys.view([("", keys.dtype)] * keys.shape[1]).ravel()
        order = np.argsort(view, kind="stable")
        sorted_keys = view[order]
        starts = np.flatnonzero(
            np.concatenate([[True], sorted_keys[1:] != sorted_keys[:-1]])
        )
        for b, start in enumerate(starts):
            end = starts[b + 1] if b + 1 < len(starts) else n
            bucket = order[start:end]
            head = bucket.min()
            for i in bucket:
                uf.union(head, int(i))

    labels = np.array([uf.find(i) for i in range(n)])
    labels, k = _relabel_dense(labels)

    zero_rows = np.flatnonzero(np.linalg.norm(x, axis=1) == 0.0)
    if zero_rows.size:
        logger.warning(
            "%d zero-feature rows assigned by hash only (cosine undefined): %s",
            zero_rows.size,
            zero_rows[:10].tolist(),
        )

    # refinement: move a row to its most similar centroid only when the
    # similarity clears the threshold
    if k > 1:
        sims = _cosine_to_centroids(x, _centroids(x, labels, k))
        best = np.argmax(sims, axis=1)
        best_sim = sims[np.arange(n), best]
        movable = (best_sim > cfg.similarity_threshold) & (np.linalg.norm(x, axis=1) > 0)
        labels = np.where(movable, best, labels)
        labels, k = _relabel_dense(labels)

    # absorb undersized clusters into the nearest centroid among the rest
    while k > 1:
        counts = np.bincount(labels, minlength=k)
        small = np.flatnonzero(counts < cfg.min_cluster_size)
        if small.size == 0 or small.size == k:
            break
        victim = int(small[0])
        centroids = _centroids(x, labels, k)
        keep = np.ones(k, dtype=bool)
        keep[victim] = False
        sims = _cosine_to_centroids(centroids[victim:victim + 1], centroids[keep]).ravel()
        target = np.flatnonzero(keep)[int(np.argmax(sims))]
        labels[labels == victim] = target
        labels, k = _relabel_dense(labels)

    return ClusterAssignment(cluster_of=labels, num_clusters=k)


class LshClusterer(BaseEstimator):
    """Estimator wrapper over :func:`lsh_cluster` with ``fit_predict``."""

    def __init__(self, num_tables=8, num_projections=16, similarity_threshold=0.5,
                 min_cluster_size=5, random_state=0):
        self.num_tables = num_tables
        self.num_projections = num_projections
        self.similarity_threshold = similarity_threshold
        self.min_cluster_size = min_cluster_size
        self.random_state = random_state

    def _config(self) -> LshConfig:
        return LshConfig(
            num_tables=self.num_tables,
            num_projections=self.num_projections,
            similarity_threshold=self.similarity_threshold,
            min_cluster_size=self.min_cluster_size,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        assignment = lsh_cluster(X, self._config())
        self.assignment_ = assignment
        self.labels_ = assignment.cluster_of
        self.n_clusters_ = assignment.num_clusters
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
