"""GraphSAGE layers with exact reverse-mode gradients on CSR graphs.

Each layer concatenates a node's state with the mean of its neighbors'
states and applies a learned linear map followed by ReLU. Aggregation is a
sparse matrix product; an empty neighborhood aggregates to the zero vector.
The backward pass is written out explicitly so gradients stay exact and
bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import ShapeError
from .graph import Graph, SubgraphView
from .losses import loss_and_logit_grad, node_loss_weights

# first-layer inputs denser than this are kept as plain arrays
_SPARSE_DENSITY = 0.25


@dataclass
class GnnParams:
    """Stacked layer weights plus the softmax classifier head.

    ``layer_weights[k]`` has shape (2 * d_in, d_out): the top half multiplies
    the node's own state, the bottom half the aggregated neighbor state.
    """

    layer_weights: list[np.ndarray]
    classifier_weights: np.ndarray
    classifier_bias: np.ndarray
    activation: str = "relu"
    aggregator: str = "mean"

    @property
    def num_layers(self) -> int:
        return len(self.layer_weights)

    def named_arrays(self):
        for k, w in enumerate(self.layer_weights):
            yield f"layer_{k}", w
        yield "classifier_weights", self.classifier_weights
        yield "classifier_bias", self.classifier_bias

    def copy(self) -> "GnnParams":
        return GnnParams(
            layer_weights=[w.copy() for w in self.layer_weights],
            classifier_weights=self.classifier_weights.copy(),
            classifier_bias=self.classifier_bias.copy(),
            activation=self.activation,
            aggregator=self.aggregator,
        )

    def replace_arrays(self, arrays: dict) -> "GnnParams":
        new = self.copy()
        for k in range(len(new.layer_weights)):
            name = f"layer_{k}"
            if name in arrays:
                new.layer_weights[k] = arrays[name]
        if "classifier_weights" in arrays:
            new.classifier_weights = arrays["classifier_weights"]
        if "classifier_bias" in arrays:
            new.classifier_bias = arrays["classifier_bias"]
        return new


def init_params(in_dim: int, hidden_dim: int, num_layers: int, num_classes: int,
                seed: int = 0) -> GnnParams:
    """Seeded Glorot-uniform initialization; bias starts at zero."""
    rng = np.random.default_rng(seed)
    dims = [in_dim] + [hidden_dim] * num_layers
    weights = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (2 * d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(2 * d_in, d_out)))
    limit = np.sqrt(6.0 / (dims[-1] + num_classes))
    return GnnParams(
        layer_weights=weights,
        classifier_weights=rng.uniform(-limit, limit, size=(dims[-1], num_classes)),
        classifier_bias=np.zeros(num_classes),
    )


def mean_aggregator(g: Graph, restrict: SubgraphView | None = None) -> sp.csr_matrix:
    """Row-stochastic neighbor-mean operator; zero rows for isolated nodes.

    With ``restrict``, only edges whose endpoints both lie inside the view
    are kept, and means are taken over those internal neighbors alone.
    """
    n = g.num_nodes
    if restrict is None:
        deg = g.degrees()
        data = np.repeat(
            np.divide(1.0, deg, out=np.zeros(n, dtype=np.float64), where=deg > 0), deg
        )
        return sp.csr_matrix((data, g.col_indices, g.row_offsets), shape=(n, n))
    member = np.zeros(n, dtype=bool)
    member[restrict.parent_ids] = True
    src = g.edge_sources()
    keep = member[src] & member[g.col_indices]
    rows, cols = src[keep], g.col_indices[keep]
    deg = np.bincount(rows, minlength=n)
    vals = 1.0 / deg[rows]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "identity":
        return z
    raise ShapeError(f"unknown activation {activation!r}")


def sage_layer_forward(h, g: Graph, w: np.ndarray,
                       restrict: SubgraphView | None = None,
                       activation: str = "relu") -> np.ndarray:
    """One layer: act(concat(h, neighbor_mean(h)) @ w)."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != g.num_nodes:
        raise ShapeError(f"{h.shape[0]} feature rows for {g.num_nodes} nodes")
    if w.shape[0] != 2 * h.shape[1]:
        raise ShapeError(f"weight rows {w.shape[0]} != 2 * feature dim {h.shape[1]}")
    agg = mean_aggregator(g, restrict)
    d = h.shape[1]
    z = h @ w[:d] + (agg @ h) @ w[d:]
    return _apply_activation(z, activation)


@dataclass
class _ForwardState:
    """Everything the backward pass needs, captured during the forward."""

    agg: sp.csr_matrix
    agg_t: sp.csr_matrix
    self_inputs: list = field(default_factory=list)   # dense or sparse per layer
    nbr_inputs: list = field(default_factory=list)
    relu_masks: list = field(default_factory=list)
    final_h: np.ndarray | None = None


def _as_layer_input(x):
    """Keep very sparse first-layer inputs in CSR form for cheap products."""
    if sp.issparse(x):
        return x.tocsr()
    x = np.asarray(x, dtype=np.float64)
    nnz = np.count_nonzero(x)
    if x.size > 4096 and nnz < _SPARSE_DENSITY * x.size:
        return sp.csr_matrix(x)
    return x


def forward_pass(agg: sp.csr_matrix, x, params: GnnParams, keep_state: bool = False):
    """Run all layers plus the classifier; optionally capture backward state."""
    agg_t = agg.T.tocsr() if keep_state else None
    state = _ForwardState(agg=agg, agg_t=agg_t) if keep_state else None
    h_self = _as_layer_input(x)
    for w in params.layer_weights:
        d = h_self.shape[1]
        if w.shape[0] != 2 * d:
            raise ShapeError(f"weight rows {w.shape[0]} != 2 * input dim {d}")
        h_nbr = agg @ h_self
        z = np.asarray(h_self @ w[:d] + h_nbr @ w[d:])
        h = _apply_activation(z, params.activation)
        if keep_state:
            state.self_inputs.append(h_self)
            state.nbr_inputs.append(h_nbr)
            state.relu_masks.append(z > 0 if params.activation == "relu" else None)
        h_self = h
    logits = h_self @ params.classifier_weights + params.classifier_bias
    if keep_state:
        state.final_h = h_self
    return (state, h_self, logits) if keep_state else (h_self, logits)


def forward(g: Graph, x, params: GnnParams, restrict: SubgraphView | None = None):
    """Full network forward: returns (embeddings, logits)."""
    agg = mean_aggregator(g, restrict)
    return forward_pass(agg, x, params)


def backward_pass(state: _ForwardState, params: GnnParams, dlogits: np.ndarray) -> dict:
    """Exact gradients of the loss for every parameter tensor."""
    grads = {
        "classifier_weights": np.asarray(state.final_h.T @ dlogits),
        "classifier_bias": dlogits.sum(axis=0),
    }
    dh = dlogits @ params.classifier_weights.T
    for k in range(params.num_layers - 1, -1, -1):
        dz = dh * state.relu_masks[k] if state.relu_masks[k] is not None else dh
        h_self, h_nbr = state.self_inputs[k], state.nbr_inputs[k]
        d = h_self.shape[1]
        grads[f"layer_{k}"] = np.concatenate(
            [np.asarray(h_self.T @ dz), np.asarray(h_nbr.T @ dz)], axis=0
        )
        if k > 0:
            w = params.layer_weights[k]
            dh = dz @ w[:d].T + state.agg_t @ (dz @ w[d:].T)
    return grads


def loss_and_gradients(g: Graph, x, params: GnnParams, labels, mask,
                       node_weights=None, restrict: SubgraphView | None = None,
                       agg: sp.csr_matrix | None = None):
    """Loss plus exact gradients for all parameters in one pass."""
    if agg is None:
        agg = mean_aggregator(g, restrict)
    state, _, logits = forward_pass(agg, x, params, keep_state=True)
    loss, dlogits = loss_and_logit_grad(logits, labels, mask, node_weights)
    return loss, backward_pass(state, params, dlogits)


def backward(g: Graph, x, params: GnnParams, labels, mask, node_weights=None,
             restrict: SubgraphView | None = None) -> dict:
    """Gradient-only entry point; see :func:`loss_and_gradients`."""
    return loss_and_gradients(g, x, params, labels, mask, node_weights, restrict)[1]
