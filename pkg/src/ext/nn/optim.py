"""Adam optimizer and the cosine learning-rate schedule."""

from __future__ import annotations

import math
from typing import Dict, List, Sequence

import numpy as np

from . import tensor as _t
from .tensor import Tensor


class Adam:
    """Bias-corrected Adam over an explicit parameter group.

    Separate instances never share moment state, so several optimizers can
    drive disjoint parameter groups of one model independently.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= (lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)).astype(_t.DTYPE)

    def clip_grad_norm(self, max_norm: float) -> float:
        total = 0.0
        for p in self.params:
            if p.grad is not None:
                total += float((p.grad.astype(np.float64) ** 2).sum())
        norm = math.sqrt(total)
        if norm > max_norm and norm > 0.0:
            scale = _t.DTYPE(max_norm / norm)
            for p in self.params:
                if p.grad is not None:
                    p.grad *= scale
        return norm

    def state(self) -> Dict[str, List[np.ndarray] | int]:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, state) -> None:
        self.t = int(state["t"])
        self.m = [np.asarray(a, dtype=_t.DTYPE) for a in state["m"]]
        self.v = [np.asarray(a, dtype=_t.DTYPE) for a in state["v"]]


def cosine_anneal(lr0: float, lr_min: float, step: int, total_steps: int) -> float:
    """Cosine interpolation from lr0 at step 0 to lr_min at total_steps.

    Steps past the end clamp to lr_min.
    """
    if total_steps <= 0:
        return lr_min
    s = min(max(step, 0), total_steps)
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * s / total_steps))
