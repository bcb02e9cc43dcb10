from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import NonFiniteError


@dataclass
class AdamState:
    """Moment estimates for one parameter vector.

    Defaults are the usual Adam constants (beta1=0.9, beta2=0.999, eps=1e-8).
    """

    lr: float
    size: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam descent step; returns new params, updates ``state``."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape or params.size != state.size:
        raise ValueError(f"shape mismatch: params {params.shape}, grad {grad.shape}, state {state.size}")
    if not np.isfinite(grad).all():
        raise NonFiniteError("non-finite gradient passed to adam_step")
    flat = grad.reshape(-1)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * flat
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * flat * flat
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params - step.reshape(params.shape)
