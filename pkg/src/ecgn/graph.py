"""Immutable CSR graph with label/mask containers and subgraph extraction.

Graphs are undirected and unweighted: every edge is stored in both
directions, neighbor lists are sorted, and self-loops are dropped at
construction. All structures are immutable after construction, so they can
be shared freely across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyCluster, InvalidEdge, ShapeError

UNLABELED = -1


class Graph:
    """Undirected graph in compressed-sparse-row form.

    ``row_offsets`` has length ``num_nodes + 1``; the neighbors of node ``v``
    are ``col_indices[row_offsets[v]:row_offsets[v + 1]]``, sorted ascending,
    without duplicates or self-loops.
    """

    __slots__ = ("num_nodes", "row_offsets", "col_indices", "undirected")

    def __init__(self, num_nodes, row_offsets, col_indices, undirected=True):
        self.num_nodes = int(num_nodes)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.undirected = bool(undirected)
        if self.row_offsets.shape != (self.num_nodes + 1,):
            raise ShapeError(
                f"row_offsets must have length num_nodes + 1, "
                f"got {self.row_offsets.shape[0]} for {self.num_nodes} nodes"
            )
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != len(self.col_indices):
            raise ShapeError("row_offsets must start at 0 and end at len(col_indices)")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ShapeError("row_offsets must be nondecreasing")

    def neighbors(self, v: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[v]:self.row_offsets[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.col_indices) // 2

    def edge_sources(self) -> np.ndarray:
        """Source node of every directed CSR entry (len == len(col_indices))."""
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees())

    def edge_list(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, sorted."""
        src = self.edge_sources()
        keep = src < self.col_indices
        return np.column_stack([src[keep], self.col_indices[keep]])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return i < len(row) and row[i] == v

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    def __hash__(self):
        return hash((self.num_nodes, len(self.col_indices)))

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


@dataclass(frozen=True)
class SubgraphView:
    """Induced subgraph plus the local -> parent node-id map."""

    parent_ids: np.ndarray
    graph: Graph

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes


@dataclass(frozen=True)
class LabelVector:
    """Per-node class ids in 0..num_classes-1, with UNLABELED for unknowns."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        known = self.labels[self.labels != UNLABELED]
        if known.size and (known.min() < 0 or known.max() >= self.num_classes):
            raise ShapeError("labels must lie in 0..num_classes-1 or be UNLABELED")

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class NodeMaskSet:
    """Disjoint boolean train/val/test masks over the nodes."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=bool))
        if not (len(self.train) == len(self.val) == len(self.test)):
            raise ShapeError("masks must share a common length")
        if np.any(self.train & self.val) or np.any(self.train & self.test) or np.any(self.val & self.test):
            raise ShapeError("train/val/test masks must be pairwise disjoint")


def _dedup_directed(pairs: np.ndarray, num_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Sort directed (src, dst) pairs, drop duplicates, return CSR arrays."""
    if len(pairs) == 0:
        return np.zeros(num_nodes + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    keys = pairs[:, 0] * np.int64(num_nodes) + pairs[:, 1]
    keys = np.unique(keys)
    src = keys // num_nodes
    dst = keys % num_nodes
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=offsets[1:])
    return offsets, dst.astype(np.int64)


def build_graph(edge_list, num_nodes: int, symmetrize: bool = True) -> Graph:
    """Build an undirected CSR graph from (u, v) pairs.

    Self-loops and duplicate edges are dropped. With ``symmetrize`` both
    directions of every pair are inserted; otherwise the input must already
    contain both directions of every edge.
    """
    pairs = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= num_nodes):
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= num_nodes).any(axis=1)][0]
        raise InvalidEdge(f"edge {tuple(bad)} outside node range 0..{num_nodes - 1}")
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if symmetrize:
        pairs = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
    offsets, cols = _dedup_directed(pairs, num_nodes)
    g = Graph(num_nodes, offsets, cols)
    if not symmetrize and not _is_symmetric(g):
        raise InvalidEdge("symmetrize=False requires an already-symmetric edge list")
    return g


def _is_symmetric(g: Graph) -> bool:
    src = g.edge_sources()
    fwd = src * np.int64(g.num_nodes) + g.col_indices
    rev = g.col_indices * np.int64(g.num_nodes) + src
    return np.array_equal(np.sort(fwd), np.sort(rev))


def induced_subgraph(g: Graph, node_set) -> SubgraphView:
    """Extract the subgraph induced by ``node_set``.

    ``parent_ids`` is sorted ascending; local ids follow that order.
    """
    ids = np.unique(np.asarray(list(node_set) if isinstance(node_set, set) else node_set, dtype=np.int64))
    if ids.size == 0:
        raise EmptyCluster("cannot induce a subgraph on an empty node set")
    if ids.min() < 0 or ids.max() >= g.num_nodes:
        raise InvalidEdge(f"node ids must lie in 0..{g.num_nodes - 1}")
    member = np.zeros(g.num_nodes, dtype=bool)
    member[ids] = True
    local_of = np.full(g.num_nodes, -1, dtype=np.int64)
    local_of[ids] = np.arange(ids.size)

    src = g.edge_sources()
    keep = member[src] & member[g.col_indices]
    # parent lists are sorted and the relabeling is monotone, so local
    # neighbor lists stay sorted without another pass
    sub_src = local_of[src[keep]]
    sub_dst = local_of[g.col_indices[keep]]
    offsets = np.zeros(ids.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(sub_src, minlength=ids.size), out=offsets[1:])
    return SubgraphView(parent_ids=ids, graph=Graph(ids.size, offsets, sub_dst))


def add_node_with_edges(g: Graph, neighbor_ids) -> Graph:
    """Return a new graph with one extra node adjacent to ``neighbor_ids``.

    Duplicate neighbor ids are collapsed silently; the original adjacency is
    unchanged for existing node pairs.
    """
    nbrs = np.unique(np.asarray(neighbor_ids, dtype=np.int64))
    if nbrs.size and (nbrs.min() < 0 or nbrs.max() >= g.num_nodes):
        raise InvalidEdge(f"neighbor ids must lie in 0..{g.num_nodes - 1}")
    new_id = g.num_nodes
    n = g.num_nodes + 1
    # the new node has the largest id, so appending it to each touched
    # neighbor list preserves sort order
    extra = np.zeros(g.num_nodes, dtype=np.int64)
    extra[nbrs] = 1
    degrees = np.diff(g.row_offsets)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.concatenate([degrees + extra, [nbrs.size]]), out=offsets[1:])
    cols = np.empty(offsets[-1], dtype=np.int64)
    # old entries shift right by the number of insertions in earlier rows
    shift = np.concatenate([[0], np.cumsum(extra)])
    cols[np.arange(len(g.col_indices)) + shift[g.edge_sources()]] = g.col_indices
    cols[offsets[1:new_id + 1][extra.astype(bool)] - 1] = new_id
    cols[offsets[new_id]:] = nbrs
    return Graph(n, offsets, cols)


def edges_of(g: Graph) -> np.ndarray:
    """Undirected edge list; ``build_graph(edges_of(g), g.num_nodes)`` == g."""
    return g.edge_list()
