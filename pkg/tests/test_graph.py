import numpy as np
import pytest

from ecgn.exceptions import EmptyCluster, InvalidEdge, ShapeError
from ecgn.graph import (
    Graph,
    add_node_with_edges,
    build_graph,
    edges_of,
    induced_subgraph,
)
from ecgn.validation import check_graph


def path4():
    return build_graph([(0, 1), (1, 2), (2, 3)], 4)


def dense_of(g):
    a = np.zeros((g.num_nodes, g.num_nodes), dtype=np.int64)
    for v in range(g.num_nodes):
        a[v, g.neighbors(v)] = 1
    return a


def random_graph(rng, n, p):
    mask = rng.random((n, n)) < p
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
    return build_graph(edges, n)


def test_build_path_graph_degrees():
    g = path4()
    assert g.num_nodes == 4
    assert list(g.degrees()) == [1, 2, 2, 1]
    check_graph(g)


def test_build_drops_self_loops_and_duplicates():
    g = build_graph([(0, 0), (0, 1), (0, 1)], 2)
    assert g.num_edges == 1
    assert list(g.neighbors(0)) == [1]
    assert list(g.neighbors(1)) == [0]


def test_build_rejects_out_of_range_endpoint():
    with pytest.raises(InvalidEdge):
        build_graph([(0, 5)], 4)


def test_build_without_symmetrize_requires_symmetric_input():
    g = build_graph([(0, 1), (1, 0)], 2, symmetrize=False)
    assert g.num_edges == 1
    with pytest.raises(InvalidEdge):
        build_graph([(0, 1)], 2, symmetrize=False)


def test_induced_subgraph_keeps_internal_edge():
    view = induced_subgraph(path4(), {0, 1})
    assert view.graph.num_nodes == 2
    assert view.graph.num_edges == 1
    assert list(view.parent_ids) == [0, 1]


def test_induced_subgraph_drops_crossing_edges():
    view = induced_subgraph(path4(), {0, 2})
    assert view.graph.num_edges == 0


def test_induced_subgraph_rejects_empty_set():
    with pytest.raises(EmptyCluster):
        induced_subgraph(path4(), set())


def test_add_node_with_edges_basic():
    g = add_node_with_edges(path4(), [1, 2])
    assert g.num_nodes == 5
    assert list(g.neighbors(4)) == [1, 2]
    assert g.degrees()[4] == 2
    check_graph(g)


def test_add_node_isolated():
    g = add_node_with_edges(path4(), [])
    assert g.num_nodes == 5
    assert g.degrees()[4] == 0


def test_add_node_collapses_duplicate_neighbors():
    g = add_node_with_edges(path4(), [1, 1, 2])
    assert list(g.neighbors(4)) == [1, 2]


def test_add_node_matches_dense_oracle():
    # expected adjacency built independently on the dense matrix
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        g = random_graph(rng, n, 0.4)
        nbrs = rng.choice(n, size=int(rng.integers(0, n)), replace=False)
        expected = np.zeros((n + 1, n + 1), dtype=np.int64)
        expected[:n, :n] = dense_of(g)
        expected[n, nbrs] = 1
        expected[nbrs, n] = 1
        got = add_node_with_edges(g, nbrs)
        assert np.array_equal(dense_of(got), expected)
        check_graph(got)


def test_add_node_entry_count_delta():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 10))
        g = random_graph(rng, n, 0.5)
        nbrs = rng.choice(n, size=int(rng.integers(0, n)), replace=False)
        g2 = add_node_with_edges(g, nbrs)
        assert g2.num_nodes == g.num_nodes + 1
        assert len(g2.col_indices) == len(g.col_indices) + 2 * len(nbrs)


def test_edge_list_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(1, 20))
        g = random_graph(rng, n, 0.3)
        assert build_graph(edges_of(g), n) == g


def test_induced_subgraph_matches_dense_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 32))
        g = random_graph(rng, n, 0.25)
        size = int(rng.integers(1, n + 1))
        ids = np.sort(rng.choice(n, size=size, replace=False))
        view = induced_subgraph(g, ids)
        assert np.array_equal(view.parent_ids, ids)
        expected = dense_of(g)[np.ix_(ids, ids)]
        assert np.array_equal(dense_of(view.graph), expected)


def test_graph_rejects_bad_offsets():
    with pytest.raises(ShapeError):
        Graph(2, [0, 1], [0])
    with pytest.raises(ShapeError):
        Graph(2, [0, 2, 1], [1, 0, 0])
