"""Adam with bias correction, operating on named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sage import GnnParams


@dataclass
class AdamState:
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: GnnParams) -> AdamState:
    state = AdamState()
    for name, arr in params.named_arrays():
        state.first_moment[name] = np.zeros_like(arr)
        state.second_moment[name] = np.zeros_like(arr)
    return state


def adam_step(params: GnnParams, grads: dict, state: AdamState, lr: float):
    """One bias-corrected update; returns fresh (params, state)."""
    t = state.step + 1
    new_state = AdamState(step=t, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    updated = {}
    for name, arr in params.named_arrays():
        g = grads[name]
        m = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * g * g
        new_state.first_moment[name] = m
        new_state.second_moment[name] = v
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        updated[name] = arr - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params.replace_arrays(updated), new_state
