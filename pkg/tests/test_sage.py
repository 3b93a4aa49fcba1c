import numpy as np
import pytest

from ecgn.exceptions import ShapeError
from ecgn.graph import build_graph, induced_subgraph
from ecgn.sage import (
    GnnParams,
    forward,
    init_params,
    mean_aggregator,
    sage_layer_forward,
)


def dense_reference_forward(g, x, params):
    """Independent dense-matrix forward used as an oracle."""
    n = g.num_nodes
    adj = np.zeros((n, n))
    for v in range(n):
        adj[v, g.neighbors(v)] = 1.0
    h = np.asarray(x, dtype=np.float64)
    for w in params.layer_weights:
        nbr = np.zeros_like(h)
        for v in range(n):
            deg = adj[v].sum()
            if deg > 0:
                nbr[v] = adj[v] @ h / deg
        z = np.concatenate([h, nbr], axis=1) @ w
        h = np.maximum(z, 0.0)
    logits = h @ params.classifier_weights + params.classifier_bias
    return h, logits


def random_graph(rng, n, p):
    mask = rng.random((n, n)) < p
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]
    return build_graph(edges, n)


def test_isolated_node_aggregates_zero():
    g = build_graph([], 1)
    h = np.array([[1.0, 2.0]])
    w = np.vstack([np.eye(2), np.eye(2)])
    out = sage_layer_forward(h, g, w, activation="identity")
    assert np.allclose(out, [[1.0, 2.0]])


def test_two_node_hand_example():
    g = build_graph([(0, 1)], 2)
    h = np.array([[1.0], [3.0]])
    w = np.array([[1.0], [1.0]])
    out = sage_layer_forward(h, g, w, activation="identity")
    assert np.allclose(out, [[4.0], [4.0]])


def test_restricted_layer_ignores_out_of_cluster_neighbors():
    g = build_graph([(0, 1), (1, 2), (2, 3)], 4)
    view = induced_subgraph(g, [0, 1])
    h = np.eye(4)
    w = np.vstack([np.zeros((4, 4)), np.eye(4)])  # output = neighbor mean
    out = sage_layer_forward(h, g, w, restrict=view, activation="identity")
    assert np.allclose(out[1], [1.0, 0.0, 0.0, 0.0])  # only node 0, never node 2
    assert np.allclose(out[2], 0.0)  # outside the view: no internal edges


def test_layer_shape_mismatch_raises():
    g = build_graph([(0, 1)], 2)
    with pytest.raises(ShapeError):
        sage_layer_forward(np.ones((2, 3)), g, np.ones((4, 2)))
    with pytest.raises(ShapeError):
        sage_layer_forward(np.ones((3, 2)), g, np.ones((4, 2)))


def test_zero_weights_give_bias_logits():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 6, 0.5)
    x = rng.normal(size=(6, 3))
    params = init_params(3, 4, 2, 5, seed=1)
    params.layer_weights = [np.zeros_like(w) for w in params.layer_weights]
    params.classifier_weights = np.zeros_like(params.classifier_weights)
    params.classifier_bias = rng.normal(size=5)
    _, logits = forward(g, x, params)
    assert np.allclose(logits, np.tile(params.classifier_bias, (6, 1)))


def test_single_layer_matches_layer_plus_classifier():
    rng = np.random.default_rng(2)
    g = random_graph(rng, 7, 0.4)
    x = rng.normal(size=(7, 3))
    params = init_params(3, 4, 1, 2, seed=3)
    emb, logits = forward(g, x, params)
    h1 = sage_layer_forward(x, g, params.layer_weights[0])
    assert np.allclose(emb, h1)
    assert np.allclose(logits, h1 @ params.classifier_weights + params.classifier_bias)


def test_forward_matches_dense_reference():
    rng = np.random.default_rng(4)
    for trial in range(10):
        g = random_graph(rng, 8, 0.4)
        x = rng.normal(size=(8, 5))
        params = init_params(5, 6, 2, 3, seed=trial)
        emb, logits = forward(g, x, params)
        ref_emb, ref_logits = dense_reference_forward(g, x, params)
        assert np.max(np.abs(emb - ref_emb)) < 1e-10
        assert np.max(np.abs(logits - ref_logits)) < 1e-10


def test_sparse_input_path_matches_dense():
    rng = np.random.default_rng(6)
    g = random_graph(rng, 40, 0.1)
    x = np.zeros((40, 200))
    nz = rng.random((40, 200)) < 0.02
    x[nz] = 1.0
    params = init_params(200, 8, 2, 3, seed=9)
    emb, logits = forward(g, x, params)
    ref_emb, ref_logits = dense_reference_forward(g, x, params)
    assert np.max(np.abs(emb - ref_emb)) < 1e-10
    assert np.max(np.abs(logits - ref_logits)) < 1e-10


def test_permutation_equivariance():
    # relabeling nodes by perm permutes the outputs by perm (weights fixed)
    rng = np.random.default_rng(8)
    n = 10
    g = random_graph(rng, n, 0.3)
    x = rng.normal(size=(n, 4))
    params = init_params(4, 5, 2, 3, seed=0)
    perm = rng.permutation(n)  # old id v becomes new id perm[v]
    inv = np.argsort(perm)
    g_perm = build_graph([(perm[u], perm[v]) for u, v in g.edge_list()], n)
    emb, logits = forward(g, x, params)
    emb_p, logits_p = forward(g_perm, x[inv], params)
    assert np.allclose(emb_p, emb[inv])
    assert np.allclose(logits_p, logits[inv])


def test_restriction_never_reads_outside_features():
    rng = np.random.default_rng(10)
    g = random_graph(rng, 12, 0.4)
    view = induced_subgraph(g, np.arange(6))
    x = rng.normal(size=(12, 4))
    params = init_params(4, 5, 2, 3, seed=1)
    emb1, _ = forward(g, x, params, restrict=view)
    x2 = x.copy()
    x2[6:] = rng.normal(size=(6, 4)) * 100
    emb2, _ = forward(g, x2, params, restrict=view)
    assert np.allclose(emb1[:6], emb2[:6])


def test_aggregator_rows_sum_to_one_or_zero():
    rng = np.random.default_rng(12)
    g = random_graph(rng, 15, 0.2)
    agg = mean_aggregator(g)
    sums = np.asarray(agg.sum(axis=1)).ravel()
    deg = g.degrees()
    assert np.allclose(sums[deg > 0], 1.0)
    assert np.allclose(sums[deg == 0], 0.0)
