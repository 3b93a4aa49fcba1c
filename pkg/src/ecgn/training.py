"""Full-batch training loops: single model, per-cluster pre-training, and
the global integration layer that fuses cluster embeddings over the whole
graph."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import EmptyMask, MissingClusterParams, ShapeError
from .graph import UNLABELED, Graph, LabelVector, NodeMaskSet, SubgraphView, induced_subgraph
from .losses import WEIGHT_MODES, node_loss_weights
from .metrics import macro_f1
from .optim import adam_step, init_adam
from .partition import ClusterAssignment
from .sage import GnnParams, backward_pass, forward_pass, init_params, mean_aggregator
from .losses import loss_and_logit_grad
from .validation import as_feature_matrix, check_masks

logger = logging.getLogger(__name__)

TRANSFER_MODES = ("none", "average", "largest", "best")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    max_epochs: int = 1500
    patience: int = 40
    hidden_dim: int = 128
    num_layers: int = 2
    weight_mode: str = "uniform"
    en_beta: float = 0.9999
    minority_classes: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ShapeError("learning_rate must be positive")
        if self.patience > self.max_epochs:
            raise ShapeError("patience cannot exceed max_epochs")
        if self.weight_mode not in WEIGHT_MODES:
            raise ShapeError(f"unknown weight mode {self.weight_mode!r}")


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_f1: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return {
            "train_loss": [float(v) for v in self.train_loss],
            "val_f1": [float(v) for v in self.val_f1],
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainReport":
        return cls(
            train_loss=list(d["train_loss"]),
            val_f1=list(d["val_f1"]),
            best_epoch=int(d["best_epoch"]),
            stop_reason=str(d["stop_reason"]),
        )

    @property
    def best_val_f1(self) -> float:
        finite = [v for v in self.val_f1 if not np.isnan(v)]
        return max(finite) if finite else float("nan")


def train(g: Graph, x, labels: LabelVector, masks: NodeMaskSet, cfg: TrainConfig,
          params0: GnnParams | None = None, restrict: SubgraphView | None = None,
          epoch_weights=None):
    """Train with Adam and early stopping on validation macro-F1.

    Returns the parameters of the best-validation epoch. When no validation
    node exists, the (pre-update) training loss drives early stopping
    instead and reported ``val_f1`` entries are NaN. ``epoch_weights`` may
    supply per-epoch node loss weights, e.g. for resampling baselines.
    """
    x = as_feature_matrix(x, g.num_nodes)
    check_masks(masks, labels)
    train_mask = masks.train & (labels.labels != UNLABELED)
    if not train_mask.any():
        raise EmptyMask("no labeled training nodes")
    val_mask = masks.val & (labels.labels != UNLABELED)
    has_val = bool(val_mask.any())

    params = params0.copy() if params0 is not None else init_params(
        x.shape[1], cfg.hidden_dim, cfg.num_layers, labels.num_classes, cfg.seed
    )
    state = init_adam(params)
    agg = mean_aggregator(g, restrict)
    agg_t = agg.T.tocsr()
    static_weights = None
    if epoch_weights is None:
        static_weights = node_loss_weights(
            labels.labels, train_mask, cfg.weight_mode, cfg.en_beta,
            cfg.minority_classes,
        )

    report = TrainReport()
    best_metric = -np.inf
    best_params = params
    for epoch in range(1, cfg.max_epochs + 1):
        weights = static_weights if epoch_weights is None else epoch_weights(epoch)
        fwd_state, _, logits = forward_pass(agg, x, params, keep_state=True)
        fwd_state.agg_t = agg_t
        loss, dlogits = loss_and_logit_grad(logits, labels.labels, train_mask, weights)
        grads = backward_pass(fwd_state, params, dlogits)
        params, state = adam_step(params, grads, state, cfg.learning_rate)

        report.train_loss.append(loss)
        if has_val:
            _, val_logits = forward_pass(agg, x, params)
            metric = macro_f1(
                val_logits.argmax(axis=1), labels, val_mask, labels.num_classes
            )
            report.val_f1.append(metric)
        else:
            metric = -loss
            report.val_f1.append(float("nan"))

        if metric > best_metric:
            best_metric = metric
            best_params = params
            report.best_epoch = epoch
        if epoch - report.best_epoch >= cfg.patience:
            report.stop_reason = "patience"
            break
    else:
        report.stop_reason = "max_epochs"
    return best_params, report


def predict(g: Graph, x, params: GnnParams, restrict: SubgraphView | None = None) -> np.ndarray:
    _, logits = forward_pass(mean_aggregator(g, restrict), x, params)
    return logits.argmax(axis=1)


@dataclass
class PretrainResult:
    embeddings: np.ndarray
    params: list
    reports: list
    init: GnnParams
    val_f1: np.ndarray
    sizes: np.ndarray


def pretrain_clusters(g: Graph, x, labels: LabelVector, masks: NodeMaskSet,
                      assignment: ClusterAssignment, cfg: TrainConfig,
                      n_jobs: int = 1) -> PretrainResult:
    """Train one model per cluster from a shared seeded initialization.

    Every cluster model starts from the identical parameter tensor; each
    trains on its induced subgraph with cluster-local labeled nodes, and the
    resulting embeddings are written back at the parent node ids, so the
    output is independent of cluster scheduling. A cluster without labeled
    training nodes keeps the shared initialization (logged as a warning).
    """
    x = as_feature_matrix(x, g.num_nodes)
    if len(assignment) != g.num_nodes:
        raise ShapeError("assignment does not cover the graph")
    theta0 = init_params(
        x.shape[1], cfg.hidden_dim, cfg.num_layers, labels.num_classes, cfg.seed
    )

    def run_cluster(c: int):
        ids = assignment.members(c)
        view = induced_subgraph(g, ids)
        local_labels = LabelVector(labels.labels[ids], labels.num_classes)
        local_masks = NodeMaskSet(
            train=masks.train[ids], val=masks.val[ids], test=masks.test[ids]
        )
        trainable = bool(
            (local_masks.train & (local_labels.labels != UNLABELED)).any()
        )
        if trainable:
            params_c, report_c = train(
                view.graph, x[ids], local_labels, local_masks, cfg, params0=theta0
            )
        else:
            logger.warning(
                "cluster %d has no labeled training nodes; keeping shared init", c
            )
            params_c, report_c = theta0.copy(), None
        emb_c, _ = forward_pass(mean_aggregator(view.graph), x[ids], params_c)
        return ids, params_c, report_c, emb_c

    k = assignment.num_clusters
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_cluster, range(k)))
    else:
        results = [run_cluster(c) for c in range(k)]

    h = np.zeros((g.num_nodes, cfg.hidden_dim))
    params, reports = [], []
    val_scores = np.full(k, np.nan)
    for c, (ids, params_c, report_c, emb_c) in enumerate(results):
        h[ids] = emb_c
        params.append(params_c)
        reports.append(report_c)
        if report_c is not None:
            val_scores[c] = report_c.best_val_f1
    return PretrainResult(
        embeddings=h,
        params=params,
        reports=reports,
        init=theta0,
        val_f1=val_scores,
        sizes=assignment.sizes(),
    )


def _transfer_source(transfer: str, cluster_params, sizes, val_f1) -> GnnParams:
    if transfer == "average":
        avg = cluster_params[0].copy()
        arrays = {}
        for name, _ in avg.named_arrays():
            stack = [dict(p.named_arrays())[name] for p in cluster_params]
            shapes = {a.shape for a in stack}
            if len(shapes) != 1:
                raise MissingClusterParams(f"cluster params disagree on {name} shape")
            arrays[name] = np.mean(stack, axis=0)
        return avg.replace_arrays(arrays)
    if transfer == "largest":
        return cluster_params[int(np.argmax(sizes))]
    # best-performing cluster by validation F1; ties and all-NaN fall back
    # to the lowest cluster id
    scores = np.where(np.isnan(val_f1), -np.inf, val_f1)
    return cluster_params[int(np.argmax(scores))]


def global_integrate(g_aug: Graph, h_aug, labels_aug: LabelVector,
                     masks_aug: NodeMaskSet, cfg: TrainConfig,
                     transfer: str = "none", cluster_params=None,
                     cluster_sizes=None, cluster_val_f1=None):
    """One unrestricted layer over the (augmented) graph on top of the
    pre-trained embeddings, plus a fresh softmax classifier.

    ``transfer`` seeds the layer from cluster parameters: the elementwise
    average, the largest cluster's, or the best-validation cluster's last
    layer and classifier. Shapes must match exactly.

    Returns (final_embeddings, params, report).
    """
    h_aug = as_feature_matrix(h_aug, g_aug.num_nodes)
    if transfer not in TRANSFER_MODES:
        raise ShapeError(f"unknown transfer mode {transfer!r}")
    int_cfg = replace(cfg, num_layers=1)
    if transfer == "none":
        params0 = None
    else:
        if not cluster_params:
            raise MissingClusterParams("weight transfer requires cluster params")
        sizes = cluster_sizes if cluster_sizes is not None else np.ones(len(cluster_params))
        scores = cluster_val_f1 if cluster_val_f1 is not None else np.full(len(cluster_params), np.nan)
        source = _transfer_source(transfer, list(cluster_params), sizes, scores)
        w = source.layer_weights[-1]
        expected = (2 * h_aug.shape[1], int_cfg.hidden_dim)
        if w.shape != expected:
            raise MissingClusterParams(
                f"transferred layer shape {w.shape} does not match {expected}"
            )
        if source.classifier_weights.shape != (int_cfg.hidden_dim, labels_aug.num_classes):
            raise MissingClusterParams("transferred classifier shape mismatch")
        params0 = GnnParams(
            layer_weights=[w.copy()],
            classifier_weights=source.classifier_weights.copy(),
            classifier_bias=source.classifier_bias.copy(),
        )
    params, report = train(g_aug, h_aug, labels_aug, masks_aug, int_cfg, params0=params0)
    final_h, _ = forward_pass(mean_aggregator(g_aug), h_aug, params)
    return final_h, params, report
