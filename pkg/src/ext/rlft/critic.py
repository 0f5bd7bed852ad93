"""Value network: 3 hidden layers of 128 ELU units over the raw observation."""

from __future__ import annotations

import numpy as np

from ..nn import ObsNormalizer, ParamStore
from ..nn import tensor as T
from ..nn.layers import linear_init
from ..nn.tensor import Tensor


class CriticNet:
    def __init__(self, state_dim: int = 55, hidden: int = 128, n_layers: int = 3,
                 seed: int = 0, norm: ObsNormalizer | None = None):
        self.state_dim = state_dim
        self.norm = norm or ObsNormalizer.identity(state_dim)
        self.store = ParamStore()
        rng = np.random.default_rng(seed)
        prev = state_dim
        self.n_layers = n_layers
        for i in range(n_layers):
            linear_init(self.store, rng, f"fc{i}", prev, hidden, std=1.0 / np.sqrt(prev))
            prev = hidden
        linear_init(self.store, rng, "head", prev, 1, std=0.01)

    def forward(self, obs: np.ndarray) -> Tensor:
        x: Tensor = Tensor(self.norm(obs))
        for i in range(self.n_layers):
            x = T.elu(T.linear(x, self.store[f"fc{i}.w"], self.store[f"fc{i}.b"]))
        out = T.linear(x, self.store["head.w"], self.store["head.b"])
        return T.reshape(out, (obs.shape[0],))

    def values(self, obs: np.ndarray) -> np.ndarray:
        with T.no_grad():
            return self.forward(obs).data
