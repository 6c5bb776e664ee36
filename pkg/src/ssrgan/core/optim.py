"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ssrgan.errors import DivergenceError, ShapeError

EPS = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = EPS

    @classmethod
    def for_param(cls, param: np.ndarray, beta1=0.9, beta2=0.999, eps=EPS):
        return cls(np.zeros_like(param), np.zeros_like(param), 0, beta1, beta2, eps)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
              name: str = "parameter") -> None:
    """Update ``param`` and ``state`` in place by one Adam step."""
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise ShapeError(f"adam_step: shapes disagree for {name}: "
                         f"param {param.shape}, grad {grad.shape}, state {state.m.shape}")
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if not np.isfinite(grad).all():
        raise DivergenceError(f"non-finite gradient in {name}")
    dt = param.dtype.type
    b1, b2 = dt(state.beta1), dt(state.beta2)
    state.t += 1
    state.m *= b1
    state.m += (1 - b1) * grad
    state.v *= b2
    state.v += (1 - b2) * (grad * grad)
    m_hat = state.m / dt(1 - state.beta1 ** state.t)
    v_hat = state.v / dt(1 - state.beta2 ** state.t)
    param -= dt(lr) * m_hat / (np.sqrt(v_hat) + dt(state.eps))


class Adam:
    """Adam over a fixed, ordered list of parameter tensors."""

    def __init__(self, params, lr=2e-4, betas=(0.9, 0.999), eps=EPS):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.states = [AdamState.for_param(p.data, betas[0], betas[1], eps) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad.fill(0)

    def step(self, lr: float | None = None):
        lr = self.lr if lr is None else lr
        for p, st in zip(self.params, self.states):
            adam_step(p.data, p.grad, st, lr, name=p.name or "parameter")

    @property
    def t(self) -> int:
        return self.states[0].t if self.states else 0
