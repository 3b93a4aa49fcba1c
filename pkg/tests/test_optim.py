import numpy as np

from ecgn.optim import adam_step, init_adam
from ecgn.sage import init_params


def test_zero_gradient_leaves_params_unchanged():
    params = init_params(3, 4, 1, 2, seed=0)
    state = init_adam(params)
    grads = {name: np.zeros_like(a) for name, a in params.named_arrays()}
    new_params, new_state = adam_step(params, grads, state, lr=0.1)
    for (_, a), (_, b) in zip(params.named_arrays(), new_params.named_arrays()):
        assert np.array_equal(a, b)
    assert new_state.step == 1


def test_first_step_magnitude_is_learning_rate():
    params = init_params(2, 3, 1, 2, seed=1)
    state = init_adam(params)
    grads = {name: np.full_like(a, 2.5) for name, a in params.named_arrays()}
    new_params, _ = adam_step(params, grads, state, lr=0.01)
    for (_, a), (_, b) in zip(params.named_arrays(), new_params.named_arrays()):
        step = a - b
        assert np.allclose(step, 0.01, atol=1e-6)


def test_quadratic_bowl_descends_monotonically_after_warmup():
    # scalar quadratic f(t) = 0.5 t^2, gradient t, folded into a 1x1 layer;
    # the step budget keeps the iterate on the descending slope
    params = init_params(1, 1, 0, 1, seed=2)
    params.classifier_weights = np.array([[5.0]])
    params.classifier_bias = np.zeros(1)
    state = init_adam(params)
    losses = []
    for _ in range(100):
        theta = params.classifier_weights
        losses.append(0.5 * theta.item() ** 2)
        grads = {
            "classifier_weights": theta.copy(),
            "classifier_bias": np.zeros(1),
        }
        params, state = adam_step(params, grads, state, lr=0.04)
    for i in range(5, 99):
        assert losses[i + 1] <= losses[i] + 1e-12
    assert losses[-1] < losses[0] * 0.2
