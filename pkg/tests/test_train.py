import numpy as np
import pytest

from ecgn.exceptions import EmptyMask
from ecgn.graph import LabelVector, NodeMaskSet, build_graph
from ecgn.metrics import macro_f1
from ecgn.training import TrainConfig, TrainReport, predict, train


def separable_toy():
    # two feature-separable cliques of 5 nodes each
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i, j) for i in range(5, 10) for j in range(i + 1, 10)]
    g = build_graph(edges, 10)
    x = np.zeros((10, 2))
    x[:5, 0] = 1.0
    x[5:, 1] = 1.0
    labels = LabelVector(np.array([0] * 5 + [1] * 5), 2)
    train_mask = np.array([True, True, True, True, False] * 2)
    val_mask = ~train_mask
    masks = NodeMaskSet(train=train_mask, val=val_mask, test=np.zeros(10, dtype=bool))
    return g, x, labels, masks


def test_patience_zero_runs_exactly_one_epoch():
    g, x, labels, masks = separable_toy()
    cfg = TrainConfig(patience=0, max_epochs=50, hidden_dim=4, seed=0)
    _, report = train(g, x, labels, masks, cfg)
    assert len(report.train_loss) == 1
    assert report.stop_reason == "patience"


def test_separable_toy_reaches_perfect_train_f1():
    g, x, labels, masks = separable_toy()
    cfg = TrainConfig(max_epochs=300, patience=300, hidden_dim=8, seed=0)
    params, report = train(g, x, labels, masks, cfg)
    preds = predict(g, x, params)
    assert macro_f1(preds, labels, masks.train) == 1.0


def test_same_seed_gives_bitwise_identical_runs():
    g, x, labels, masks = separable_toy()
    cfg = TrainConfig(max_epochs=40, patience=40, hidden_dim=6, seed=7)
    params1, report1 = train(g, x, labels, masks, cfg)
    params2, report2 = train(g, x, labels, masks, cfg)
    assert report1.train_loss == report2.train_loss
    assert report1.val_f1 == report2.val_f1
    assert report1.best_epoch == report2.best_epoch
    for (_, a), (_, b) in zip(params1.named_arrays(), params2.named_arrays()):
        assert np.array_equal(a, b)


def test_best_epoch_val_f1_at_least_last():
    g, x, labels, masks = separable_toy()
    cfg = TrainConfig(max_epochs=100, patience=20, hidden_dim=6, seed=3)
    _, report = train(g, x, labels, masks, cfg)
    assert report.val_f1[report.best_epoch - 1] >= report.val_f1[-1]


def test_empty_train_mask_raises():
    g, x, labels, _ = separable_toy()
    masks = NodeMaskSet(
        train=np.zeros(10, dtype=bool),
        val=np.zeros(10, dtype=bool),
        test=np.zeros(10, dtype=bool),
    )
    with pytest.raises(EmptyMask):
        train(g, x, labels, masks, TrainConfig())


def test_report_round_trip():
    report = TrainReport(train_loss=[1.0, 0.5], val_f1=[0.2, 0.9], best_epoch=2,
                         stop_reason="patience")
    again = TrainReport.from_dict(report.to_dict())
    assert again.train_loss == report.train_loss
    assert again.best_epoch == 2
