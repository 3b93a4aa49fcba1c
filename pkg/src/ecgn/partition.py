"""Structural graph clustering: multilevel partitioning with local refinement.

The partitioner follows the classic coarsen / partition / uncoarsen scheme:
heavy-edge matching shrinks the graph level by level, the coarsest graph is
split by recursive greedy bisection, and each uncoarsening step projects the
assignment and refines it with Kernighan-Lin style boundary moves and swaps.
Every tie is broken toward the lowest node id so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .exceptions import ShapeError, TooFewNodes
from .graph import Graph


@dataclass(frozen=True)
class ClusterAssignment:
    """Total node -> cluster-id map with ids 0..num_clusters-1."""

    cluster_of: np.ndarray
    num_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.cluster_of, dtype=np.int64)
        object.__setattr__(self, "cluster_of", labels)
        if labels.size == 0:
            raise ShapeError("assignment covers no nodes")
        if labels.min() < 0 or labels.max() >= self.num_clusters:
            raise ShapeError("cluster ids must lie in 0..num_clusters-1")
        if np.unique(labels).size != self.num_clusters:
            raise ShapeError("every cluster must be non-empty")

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == c)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_of, minlength=self.num_clusters)

    def __len__(self):
        return len(self.cluster_of)


@dataclass(frozen=True)
class PartitionConfig:
    k: int
    balance_eps: float = 0.1
    coarsen_stop: int | None = None
    refine_passes: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ShapeError("need at least 2 clusters")
        if self.balance_eps < 0:
            raise ShapeError("balance_eps must be nonnegative")

    @property
    def stop_size(self) -> int:
        return 100 * self.k if self.coarsen_stop is None else self.coarsen_stop


@dataclass(frozen=True)
class CoarseningResult:
    """One coarsening level: collapsed graph plus fine -> coarse map.

    ``edge_weights`` holds the merged multiplicity of each directed CSR entry
    of the coarse graph; ``node_weights`` the number of fine nodes inside each
    coarse node.
    """

    graph: Graph
    vertex_map: np.ndarray
    edge_weights: np.ndarray
    node_weights: np.ndarray


def edge_cut(g: Graph, assignment: ClusterAssignment) -> int:
    """Number of undirected edges whose endpoints lie in different clusters."""
    labels = assignment.cluster_of
    if len(labels) != g.num_nodes:
        raise ShapeError("assignment does not cover the graph")
    src = g.edge_sources()
    keep = src < g.col_indices
    return int(np.count_nonzero(labels[src[keep]] != labels[g.col_indices[keep]]))


def _unit_adjacency(g: Graph) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.ones(len(g.col_indices), dtype=np.float64), g.col_indices, g.row_offsets),
        shape=(g.num_nodes, g.num_nodes),
    )


def _match_heavy_edges(adj: sp.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    """Maximal matching preferring heavy edges; ties break to the lowest id.

    Nodes are visited in ascending degree (randomly shuffled within equal
    degrees), which keeps low-degree nodes from being stranded. Returns the
    fine -> coarse id map; coarse ids follow the sorted lowest member id of
    each matched pair or leftover singleton.
    """
    n = adj.shape[0]
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    mate = np.full(n, -1, dtype=np.int64)
    visit_order = np.lexsort((rng.random(n), np.diff(indptr)))
    for u in visit_order:
        if mate[u] != -1:
            continue
        best, best_w = -1, 0.0
        for pos in range(indptr[u], indptr[u + 1]):
            v = indices[pos]
            if mate[v] != -1:
                continue
            w = data[pos]
            if w > best_w or (w == best_w and (best == -1 or v < best)):
                best, best_w = v, w
        if best >= 0:
            mate[u], mate[best] = best, u
        else:
            mate[u] = u
    group_rep = np.minimum(np.arange(n), mate)
    return np.searchsorted(np.unique(group_rep), group_rep)


def _contract(adj: sp.csr_matrix, node_w: np.ndarray, coarse_of: np.ndarray):
    nc = int(coarse_of.max()) + 1
    n = adj.shape[0]
    sel = sp.csr_matrix(
        (np.ones(n), (np.arange(n), coarse_of)), shape=(n, nc)
    )
    adj_c = (sel.T @ adj @ sel).tocsr()
    adj_c.setdiag(0)
    adj_c.eliminate_zeros()
    adj_c.sort_indices()
    node_w_c = np.asarray(sel.T @ node_w).ravel()
    return adj_c, node_w_c


def heavy_edge_matching(g: Graph, seed: int = 0) -> CoarseningResult:
    """One coarsening pass: collapse a maximal matching of the graph."""
    adj = _unit_adjacency(g)
    coarse_of = _match_heavy_edges(adj, np.random.default_rng(seed))
    adj_c, node_w_c = _contract(adj, np.ones(g.num_nodes), coarse_of)
    coarse = Graph(adj_c.shape[0], adj_c.indptr.astype(np.int64), adj_c.indices.astype(np.int64))
    return CoarseningResult(
        graph=coarse,
        vertex_map=coarse_of,
        edge_weights=adj_c.data.copy(),
        node_weights=node_w_c,
    )


def _connection_matrix(adj: sp.csr_matrix, labels: np.ndarray, k: int) -> np.ndarray:
    """C[v, c] = total edge weight between node v and cluster c."""
    n = adj.shape[0]
    src = np.repeat(np.arange(n), np.diff(adj.indptr))
    conn = np.zeros((n, k))
    np.add.at(conn, (src, labels[adj.indices]), adj.data)
    return conn


def _edge_weight(adj: sp.csr_matrix, u: int, v: int) -> float:
    row = adj.indices[adj.indptr[u]:adj.indptr[u + 1]]
    i = np.searchsorted(row, v)
    if i < len(row) and row[i] == v:
        return float(adj.data[adj.indptr[u] + i])
    return 0.0


def _refine_kway(adj, node_w, labels, k, cap, passes, min_counts=None, swap_top=16):
    """Greedy boundary refinement: positive-gain moves, then pair swaps.

    Only strictly improving changes are applied, so the cut never increases.
    ``cap`` bounds cluster weight (scalar or per-cluster); ``min_counts``
    bounds cluster node counts from below (default: stay non-empty).
    """
    n = adj.shape[0]
    cap = np.broadcast_to(np.asarray(cap, dtype=np.float64), (k,))
    if min_counts is None:
        min_counts = np.ones(k, dtype=np.int64)
    conn = _connection_matrix(adj, labels, k)
    sizes = np.bincount(labels, weights=node_w, minlength=k)
    counts = np.bincount(labels, minlength=k)
    ids = np.arange(n)

    def move(v, dst):
        a = labels[v]
        lo, hi = adj.indptr[v], adj.indptr[v + 1]
        np.subtract.at(conn[:, a], adj.indices[lo:hi], adj.data[lo:hi])
        np.add.at(conn[:, dst], adj.indices[lo:hi], adj.data[lo:hi])
        sizes[a] -= node_w[v]
        sizes[dst] += node_w[v]
        counts[a] -= 1
        counts[dst] += 1
        labels[v] = dst

    for _ in range(max(passes, 1)):
        improved = False
        # single-node moves
        while True:
            own = conn[ids, labels]
            gains = conn - own[:, None]
            gains[ids, labels] = -np.inf
            feasible = sizes[None, :] + node_w[:, None] <= cap[None, :] + 1e-9
            gains[~feasible] = -np.inf
            gains[counts[labels] <= min_counts[labels], :] = -np.inf
            best_dst = np.argmax(gains, axis=1)
            best_gain = gains[ids, best_dst]
            v = int(np.argmax(best_gain))
            if best_gain[v] <= 1e-12:
                break
            move(v, int(best_dst[v]))
            improved = True
        # pair swaps between clusters, for moves blocked by the balance cap
        swapped = True
        while swapped:
            swapped = False
            for a in range(k):
                for b in range(a + 1, k):
                    in_a = np.flatnonzero(labels == a)
                    in_b = np.flatnonzero(labels == b)
                    if in_a.size == 0 or in_b.size == 0:
                        continue
                    gain_a = conn[in_a, b] - conn[in_a, a]
                    gain_b = conn[in_b, a] - conn[in_b, b]
                    top_a = in_a[np.lexsort((in_a, -gain_a))[:swap_top]]
                    top_b = in_b[np.lexsort((in_b, -gain_b))[:swap_top]]
                    best = (1e-12, -1, -1)
                    for u in top_a:
                        for v in top_b:
                            g = (
                                conn[u, b] - conn[u, a]
                                + conn[v, a] - conn[v, b]
                                - 2.0 * _edge_weight(adj, int(u), int(v))
                            )
                            if g <= best[0]:
                                continue
                            if (
                                sizes[a] - node_w[u] + node_w[v] <= cap[a] + 1e-9
                                and sizes[b] - node_w[v] + node_w[u] <= cap[b] + 1e-9
                            ):
                                best = (g, int(u), int(v))
                    if best[1] >= 0:
                        move(best[1], b)
                        move(best[2], a)
                        improved = swapped = True
        if not improved:
            break
    return labels


def _repair_balance(adj, node_w, labels, k, cap):
    """Push nodes out of overweight clusters, choosing the cheapest moves.

    May leave coarse levels slightly overweight when node weights are lumpy;
    with unit weights (the finest level) it always reaches feasibility.
    """
    cap = np.broadcast_to(np.asarray(cap, dtype=np.float64), (k,))
    sizes = np.bincount(labels, weights=node_w, minlength=k)
    counts = np.bincount(labels, minlength=k)
    conn = _connection_matrix(adj, labels, k)
    guard = 4 * adj.shape[0]
    while np.any(sizes > cap + 1e-9) and guard > 0:
        guard -= 1
        over = int(np.argmax(sizes - cap))
        members = np.flatnonzero(labels == over)
        gains = conn[members] - conn[members, over][:, None]
        feasible = sizes[None, :] + node_w[members][:, None] <= cap[None, :] + 1e-9
        feasible[:, over] = False
        gains = np.where(feasible, gains, -np.inf)
        flat = int(np.argmax(gains))
        r, dst = divmod(flat, k)
        if not np.isfinite(gains[r, dst]):
            break
        v = int(members[r])
        lo, hi = adj.indptr[v], adj.indptr[v + 1]
        np.subtract.at(conn[:, over], adj.indices[lo:hi], adj.data[lo:hi])
        np.add.at(conn[:, dst], adj.indices[lo:hi], adj.data[lo:hi])
        sizes[over] -= node_w[v]
        sizes[dst] += node_w[v]
        counts[over] -= 1
        counts[dst] += 1
        labels[v] = dst
    return labels


def _fix_empty_clusters(adj, node_w, labels, k):
    """Donate the cheapest node from the largest cluster to any empty one."""
    counts = np.bincount(labels, minlength=k)
    while np.any(counts == 0):
        empty = int(np.argmin(counts))
        donor = int(np.argmax(counts))
        conn = _connection_matrix(adj, labels, k)
        members = np.flatnonzero(labels == donor)
        loss = conn[members, donor] - conn[members, empty]
        v = int(members[np.lexsort((members, loss))[0]])
        labels[v] = empty
        counts = np.bincount(labels, minlength=k)
    return labels


def _bfs_far_node(adj, start):
    """Lowest-id node at maximum BFS depth from ``start``."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    last = start
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
        if nxt:
            last = min(nxt)
        frontier = nxt
    return last


def _grow_side(adj, node_w, target_w, max_w, min_count, max_count):
    """Greedy region growing from a pseudo-peripheral seed."""
    n = adj.shape[0]
    deg = np.diff(adj.indptr)
    start = int(np.lexsort((np.arange(n), deg))[0])
    seed = _bfs_far_node(adj, _bfs_far_node(adj, start))
    in_side = np.zeros(n, dtype=bool)
    conn = np.zeros(n)
    order = np.arange(n)

    def add(v):
        in_side[v] = True
        lo, hi = adj.indptr[v], adj.indptr[v + 1]
        np.add.at(conn, adj.indices[lo:hi], adj.data[lo:hi])

    add(seed)
    side_w = float(node_w[seed])
    side_count = 1
    while (side_w < target_w or side_count < min_count) and side_count < max_count:
        cand = ~in_side & (node_w + side_w <= max_w + 1e-9)
        if side_count < min_count:
            cand = ~in_side
        if not cand.any():
            break
        cand_ids = order[cand]
        pick = int(cand_ids[np.lexsort((cand_ids, -conn[cand]))[0]])
        add(pick)
        side_w += float(node_w[pick])
        side_count += 1
    return in_side


def _recursive_bisect(adj, node_w, ids, k, cap, passes, labels, next_label):
    if k == 1:
        labels[ids] = next_label
        return next_label + 1
    k1 = (k + 1) // 2
    k2 = k - k1
    sub = adj[ids][:, ids].tocsr()
    sub.sort_indices()
    w = node_w[ids]
    total = float(w.sum())
    in_side = _grow_side(
        sub,
        w,
        target_w=total * k1 / k,
        max_w=k1 * cap,
        min_count=k1,
        max_count=len(ids) - k2,
    )
    side = np.where(in_side, 0, 1).astype(np.int64)
    _refine_kway(
        sub,
        w,
        side,
        2,
        cap=np.array([k1 * cap, k2 * cap]),
        passes=passes,
        min_counts=np.array([k1, k2], dtype=np.int64),
    )
    next_label = _recursive_bisect(
        adj, node_w, ids[side == 0], k1, cap, passes, labels, next_label
    )
    return _recursive_bisect(
        adj, node_w, ids[side == 1], k2, cap, passes, labels, next_label
    )


def metis_partition(g: Graph, cfg: PartitionConfig) -> ClusterAssignment:
    """Partition into k clusters of near-equal size with a small edge cut.

    Guarantees ``max cluster size <= (1 + balance_eps) * ceil(n / k)`` and k
    non-empty clusters; deterministic for a fixed (graph, config) pair.
    """
    n = g.num_nodes
    k = cfg.k
    if n < k:
        raise TooFewNodes(f"cannot split {n} nodes into {k} clusters")
    rng = np.random.default_rng(cfg.seed)
    cap = (1.0 + cfg.balance_eps) * math.ceil(n / k)

    adj = _unit_adjacency(g)
    node_w = np.ones(n)
    levels = []
    while adj.shape[0] > max(cfg.stop_size, 2 * k):
        coarse_of = _match_heavy_edges(adj, rng)
        nc = int(coarse_of.max()) + 1
        if nc >= adj.shape[0]:
            break
        levels.append((adj, node_w, coarse_of))
        adj, node_w = _contract(adj, node_w, coarse_of)

    labels = np.zeros(adj.shape[0], dtype=np.int64)
    _recursive_bisect(
        adj, node_w, np.arange(adj.shape[0]), k, cap, cfg.refine_passes, labels, 0
    )
    _fix_empty_clusters(adj, node_w, labels, k)
    _repair_balance(adj, node_w, labels, k, cap)
    _refine_kway(adj, node_w, labels, k, cap, cfg.refine_passes)

    for fine_adj, fine_w, coarse_of in reversed(levels):
        labels = labels[coarse_of]
        _repair_balance(fine_adj, fine_w, labels, k, cap)
        _refine_kway(fine_adj, fine_w, labels, k, cap, cfg.refine_passes)
        adj, node_w = fine_adj, fine_w

    _fix_empty_clusters(adj, node_w, labels, k)
    _repair_balance(adj, node_w, labels, k, cap)
    sizes = np.bincount(labels, minlength=k)
    if sizes.max() > cap + 1e-9:
        raise ShapeError("balance repair failed")  # unreachable with unit weights
    return ClusterAssignment(cluster_of=labels, num_clusters=k)


def kl_refine(g: Graph, assignment: ClusterAssignment, cfg: PartitionConfig) -> ClusterAssignment:
    """Boundary refinement of an existing assignment; never increases the cut."""
    if len(assignment) != g.num_nodes:
        raise ShapeError("assignment does not cover the graph")
    labels = assignment.cluster_of.copy()
    cap = (1.0 + cfg.balance_eps) * math.ceil(g.num_nodes / assignment.num_clusters)
    _refine_kway(
        _unit_adjacency(g),
        np.ones(g.num_nodes),
        labels,
        assignment.num_clusters,
        cap,
        cfg.refine_passes,
    )
    return ClusterAssignment(cluster_of=labels, num_clusters=assignment.num_clusters)


class MetisPartitioner(BaseEstimator):
    """Clusterer-style wrapper around :func:`metis_partition`.

    Parameters mirror :class:`PartitionConfig`; ``fit`` accepts a
    :class:`~ecgn.graph.Graph` and exposes ``labels_``.
    """

    def __init__(self, n_clusters=2, balance_eps=0.1, coarsen_stop=None,
                 refine_passes=10, random_state=0):
        self.n_clusters = n_clusters
        self.balance_eps = balance_eps
        self.coarsen_stop = coarsen_stop
        self.refine_passes = refine_passes
        self.random_state = random_state

    def _config(self) -> PartitionConfig:
        return PartitionConfig(
            k=self.n_clusters,
            balance_eps=self.balance_eps,
            coarsen_stop=self.coarsen_stop,
            refine_passes=self.refine_passes,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        assignment = metis_partition(X, self._config())
        self.assignment_ = assignment
        self.labels_ = assignment.cluster_of
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
